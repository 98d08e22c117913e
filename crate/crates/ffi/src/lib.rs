//! C ABI over the plumetarget pipeline.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `pdt_*_load` / producer function and released with the matching
//! `pdt_*_free`. Functions return a [`PdtStatus`]; on failure the message
//! is available from [`pdt_last_error`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plumetarget::classify::{load_model, predict_mask, Model};
use plumetarget::error::Error;
use plumetarget::geometry::Point;
use plumetarget::harness::{evaluate_trajectory, UtilityFields};
use plumetarget::morphology::{denoise, get_contours, DenoiseConfig};
use plumetarget::planner::{compute_step_size, plan_with_step, Algorithm, Trajectory};
use plumetarget::raster::{load_mask, load_scene, save_mask, BinaryMask, Scene};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    ContractViolation = 5,
    Panic = 6,
}

/// Trajectory scores against a scene's ground truth.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdtMetrics {
    pub pixels_observed: usize,
    pub distinct_pixels: usize,
    pub ratio_plume: f64,
    pub mean_intensity: f64,
    pub mean_gradient: f64,
    /// Non-zero for an empty trajectory.
    pub degenerate: u8,
}

pub struct PdtScene(Scene);
pub struct PdtMask(BinaryMask);
pub struct PdtModel(Model);
pub struct PdtTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PdtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => PdtStatus::Io,
            Error::Manifest { .. }
            | Error::BandCount(_)
            | Error::SizeMismatch(_)
            | Error::Pgm(_)
            | Error::ModelFormat(_)
            | Error::Csv(_) => PdtStatus::Format,
            Error::Contract(_) => PdtStatus::ContractViolation,
            _ => PdtStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PdtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PdtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            PdtStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PdtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PdtStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next `pdt_*` call on this thread.
#[no_mangle]
pub extern "C" fn pdt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn pdt_scene_load(manifest_path: *const c_char, out: *mut *mut PdtScene) -> PdtStatus {
    guard(|| {
        let scene = load_scene(text(manifest_path, "manifest_path")?)?;
        put(out, PdtScene(scene))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_scene_free(scene: *mut PdtScene) {
    free(scene)
}

#[no_mangle]
pub unsafe extern "C" fn pdt_scene_dims(scene: *const PdtScene, width: *mut usize, height: *mut usize) -> PdtStatus {
    guard(|| {
        let s = &get(scene, "scene")?.0;
        if width.is_null() || height.is_null() {
            return Err(null("output pointer"));
        }
        *width = s.width();
        *height = s.height();
        Ok(())
    })
}

/// Ground-truth label of a scene as a new mask.
#[no_mangle]
pub unsafe extern "C" fn pdt_scene_label(scene: *const PdtScene, out: *mut *mut PdtMask) -> PdtStatus {
    guard(|| {
        let label = get(scene, "scene")?.0.require_label()?.clone();
        put(out, PdtMask(label))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_model_load(path: *const c_char, out: *mut *mut PdtModel) -> PdtStatus {
    guard(|| {
        let model = load_model(text(path, "path")?)?;
        put(out, PdtModel(model))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_model_free(model: *mut PdtModel) {
    free(model)
}

#[no_mangle]
pub unsafe extern "C" fn pdt_classify(model: *const PdtModel, scene: *const PdtScene, out: *mut *mut PdtMask) -> PdtStatus {
    guard(|| {
        let mask = predict_mask(&get(model, "model")?.0, &get(scene, "scene")?.0);
        put(out, PdtMask(mask))
    })
}

/// Loads a binary PGM mask, e.g. the output of an external segmenter.
#[no_mangle]
pub unsafe extern "C" fn pdt_mask_load(path: *const c_char, out: *mut *mut PdtMask) -> PdtStatus {
    guard(|| {
        let mask = load_mask(text(path, "path")?)?;
        put(out, PdtMask(mask))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_mask_save(mask: *const PdtMask, path: *const c_char) -> PdtStatus {
    guard(|| {
        save_mask(&get(mask, "mask")?.0, text(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_mask_free(mask: *mut PdtMask) {
    free(mask)
}

#[no_mangle]
pub unsafe extern "C" fn pdt_mask_dims(mask: *const PdtMask, width: *mut usize, height: *mut usize) -> PdtStatus {
    guard(|| {
        let m = &get(mask, "mask")?.0;
        if width.is_null() || height.is_null() {
            return Err(null("output pointer"));
        }
        *width = m.width();
        *height = m.height();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_mask_count(mask: *const PdtMask, count: *mut usize) -> PdtStatus {
    guard(|| {
        let m = &get(mask, "mask")?.0;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = m.count();
        Ok(())
    })
}

/// Copies the mask row-major into `buf` as 0/1 bytes. `len` must be at
/// least width * height.
#[no_mangle]
pub unsafe extern "C" fn pdt_mask_copy(mask: *const PdtMask, buf: *mut u8, len: usize) -> PdtStatus {
    guard(|| {
        let m = &get(mask, "mask")?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = m.values();
        if len < values.len() {
            return Err(Failure(
                PdtStatus::InvalidArgument,
                format!("buffer holds {len} bytes, mask needs {}", values.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buf, values.len());
        for (d, &v) in dst.iter_mut().zip(values) {
            *d = u8::from(v);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_denoise(
    mask: *const PdtMask,
    max_merge_iterations: usize,
    min_area_fraction: f64,
    out: *mut *mut PdtMask,
) -> PdtStatus {
    guard(|| {
        let config = DenoiseConfig {
            max_merge_iterations,
            min_area_fraction,
        };
        let den = denoise(&get(mask, "mask")?.0, &config)?;
        put(out, PdtMask(den))
    })
}

/// Plans over an already denoised mask. `algorithm` is one of the CLI names
/// (e.g. `"lawnmower-transect"`); the step is 1% of `scene_width`, or of
/// the mask width when `scene_width` is 0.
#[no_mangle]
pub unsafe extern "C" fn pdt_plan(
    mask: *const PdtMask,
    algorithm: *const c_char,
    scene_width: usize,
    out: *mut *mut PdtTrajectory,
) -> PdtStatus {
    guard(|| {
        let m = &get(mask, "mask")?.0;
        let algorithm: Algorithm = text(algorithm, "algorithm")?.parse()?;
        let width = if scene_width == 0 { m.width() } else { scene_width };
        let traj = plan_with_step(algorithm, &get_contours(m), m.dims(), compute_step_size(width));
        traj.validate(m.dims())?;
        put(out, PdtTrajectory(traj))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_trajectory_free(traj: *mut PdtTrajectory) {
    free(traj)
}

#[no_mangle]
pub unsafe extern "C" fn pdt_trajectory_len(traj: *const PdtTrajectory, len: *mut usize) -> PdtStatus {
    guard(|| {
        let t = &get(traj, "trajectory")?.0;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = t.len();
        Ok(())
    })
}

/// Writes waypoints as interleaved `x, y` pairs. `capacity` counts
/// waypoints, so `xy` must hold `2 * capacity` integers.
#[no_mangle]
pub unsafe extern "C" fn pdt_trajectory_waypoints(traj: *const PdtTrajectory, xy: *mut i32, capacity: usize) -> PdtStatus {
    guard(|| {
        let t = &get(traj, "trajectory")?.0;
        if t.is_empty() {
            return Ok(());
        }
        if xy.is_null() {
            return Err(null("xy"));
        }
        if capacity < t.len() {
            return Err(Failure(
                PdtStatus::InvalidArgument,
                format!("room for {capacity} waypoints, trajectory has {}", t.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(xy, 2 * t.len());
        for (pair, p) in dst.chunks_exact_mut(2).zip(&t.waypoints) {
            pair[0] = p.x;
            pair[1] = p.y;
        }
        Ok(())
    })
}

/// Scores `count` interleaved `x, y` waypoints against the scene's label.
#[no_mangle]
pub unsafe extern "C" fn pdt_evaluate_waypoints(
    scene: *const PdtScene,
    xy: *const i32,
    count: usize,
    out: *mut PdtMetrics,
) -> PdtStatus {
    guard(|| {
        let s = &get(scene, "scene")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let points: Vec<Point> = if count == 0 {
            Vec::new()
        } else {
            if xy.is_null() {
                return Err(null("xy"));
            }
            std::slice::from_raw_parts(xy, 2 * count)
                .chunks_exact(2)
                .map(|c| Point::new(c[0], c[1]))
                .collect()
        };
        let fields = UtilityFields::compute(s)?;
        let m = evaluate_trajectory(&points, s, &fields)?;
        *out = PdtMetrics {
            pixels_observed: m.pixels_observed,
            distinct_pixels: m.distinct_pixels,
            ratio_plume: m.ratio_plume,
            mean_intensity: m.mean_intensity,
            mean_gradient: m.mean_gradient,
            degenerate: u8::from(m.degenerate),
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pdt_evaluate(traj: *const PdtTrajectory, scene: *const PdtScene, out: *mut PdtMetrics) -> PdtStatus {
    let t = match traj.as_ref() {
        Some(t) => t,
        None => return guard(|| Err(null("trajectory"))),
    };
    let flat: Vec<i32> = t.0.waypoints.iter().flat_map(|p| [p.x, p.y]).collect();
    pdt_evaluate_waypoints(scene, if flat.is_empty() { ptr::null() } else { flat.as_ptr() }, t.0.len(), out)
}
