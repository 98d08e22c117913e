//! Debug raster: blue band in grey, plume mask tinted green, waypoints red.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::{Band, BinaryMask, Scene};

pub const WAYPOINT_RGB: [u8; 3] = [255, 0, 0];

/// RGB pixels, row-major, three bytes each.
pub fn render_overlay(scene: &Scene, waypoints: &[Point], mask: &BinaryMask) -> Result<Vec<u8>> {
    mask.check_dims(scene.dims())?;
    let (w, h) = scene.dims();
    if let Some(p) = waypoints.iter().find(|p| !p.in_frame(w, h)) {
        return Err(Error::Contract(format!("waypoint ({}, {}) outside frame", p.x, p.y)));
    }
    let blue = scene.band(Band::Blue);
    let max = blue.iter().copied().max().unwrap_or(0).max(1) as u32;
    let mut rgb = Vec::with_capacity(3 * w * h);
    for (i, &b) in blue.iter().enumerate() {
        let g = (b as u32 * 255 / max) as u8;
        if mask.values()[i] {
            rgb.extend([g / 2, g / 2 + 127, g / 2]);
        } else {
            rgb.extend([g, g, g]);
        }
    }
    for p in waypoints {
        let i = 3 * (p.y as usize * w + p.x as usize);
        rgb[i..i + 3].copy_from_slice(&WAYPOINT_RGB);
    }
    Ok(rgb)
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Sidecar path holding the waypoint order: `overlay.ppm` -> `overlay.csv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

/// Writes a binary PPM at `path` and the waypoint order next to it.
pub fn emit_overlay(scene: &Scene, waypoints: &[Point], denoised: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rgb = render_overlay(scene, waypoints, denoised)?;
    fs::write(path, encode_ppm(scene.width(), scene.height(), &rgb)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let mut w = csv::Writer::from_path(&side)?;
    w.write_record(["order", "x", "y"])?;
    for (i, p) in waypoints.iter().enumerate() {
        w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&side, e))
}
