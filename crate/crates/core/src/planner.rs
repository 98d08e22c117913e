//! Trajectory algorithms for the narrow-field sensor.
//!
//! Two baselines ignore the mask (`StraightNadir`, `NaiveTransect`); the other
//! four follow the denoised plume polygons, largest first.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::morphology::{FilledRegion, PlumePolygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    StraightNadir,
    NaiveTransect,
    TraceOutline,
    TrackCenter,
    DiagonalTransect,
    LawnmowerTransect,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::StraightNadir,
        Algorithm::NaiveTransect,
        Algorithm::TraceOutline,
        Algorithm::TrackCenter,
        Algorithm::DiagonalTransect,
        Algorithm::LawnmowerTransect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::StraightNadir => "straight-nadir",
            Algorithm::NaiveTransect => "naive-transect",
            Algorithm::TraceOutline => "trace-outline",
            Algorithm::TrackCenter => "track-center",
            Algorithm::DiagonalTransect => "diagonal-transect",
            Algorithm::LawnmowerTransect => "lawnmower-transect",
        }
    }

    /// Baselines do not look at the classifier output.
    pub fn is_baseline(self) -> bool {
        matches!(self, Algorithm::StraightNadir | Algorithm::NaiveTransect)
    }

    pub fn uses_transects(self) -> bool {
        matches!(
            self,
            Algorithm::NaiveTransect | Algorithm::DiagonalTransect | Algorithm::LawnmowerTransect
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
    pub algorithm: Algorithm,
    pub step: usize,
    /// Spacing between transects, 0 for algorithms without transects.
    pub transect_width: usize,
}

impl Trajectory {
    fn new(algorithm: Algorithm, step: usize, waypoints: Vec<Point>) -> Self {
        let mut waypoints = waypoints;
        waypoints.dedup();
        Self {
            waypoints,
            algorithm,
            step,
            transect_width: if algorithm.uses_transects() { transect_width(step) } else { 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Number of distinct pixels visited (crossing transects counted once).
    pub fn distinct_pixels(&self) -> usize {
        let mut v = self.waypoints.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    /// Checks the output contract: in-frame waypoints, no consecutive
    /// repeats, step ≥ 1.
    pub fn validate(&self, dims: (usize, usize)) -> Result<()> {
        if self.step == 0 {
            return Err(Error::Contract("trajectory step is 0".into()));
        }
        if let Some(p) = self.waypoints.iter().find(|p| !p.in_frame(dims.0, dims.1)) {
            return Err(Error::Contract(format!(
                "{} waypoint ({}, {}) outside {}x{} frame",
                self.algorithm, p.x, p.y, dims.0, dims.1
            )));
        }
        if let Some(w) = self.waypoints.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Contract(format!(
                "{} repeats waypoint ({}, {})",
                self.algorithm, w[0].x, w[0].y
            )));
        }
        Ok(())
    }
}

/// 1% of the scene width, rounded half up, at least 1.
pub fn compute_step_size(scene_width: usize) -> usize {
    ((scene_width + 50) / 100).max(1)
}

pub fn transect_width(step: usize) -> usize {
    2 * step
}

/// Total-least-squares line through a polygon's contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorAxis {
    pub centroid: (f64, f64),
    /// Unit vector with `dy > 0`, or `dy == 0 && dx > 0`.
    pub direction: (f64, f64),
    pub t_min: f64,
    pub t_max: f64,
}

impl MajorAxis {
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        (self.centroid.0 + t * self.direction.0, self.centroid.1 + t * self.direction.1)
    }

    pub fn length(&self) -> f64 {
        self.t_max - self.t_min
    }
}

fn distinct_points(points: &[Point]) -> Vec<Point> {
    let mut v = points.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn major_axis(polygon: &PlumePolygon) -> Result<MajorAxis> {
    let pts = distinct_points(&polygon.contour);
    if pts.len() < 2 {
        return Err(Error::Degenerate(format!(
            "polygon {} has fewer than two distinct contour points",
            polygon.component_id
        )));
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x as f64).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y as f64).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dx, dy) = (p.x as f64 - cx, p.y as f64 - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (mut dx, mut dy) = (theta.cos(), theta.sin());
    if dy.abs() < 1e-12 {
        dy = 0.0;
    }
    if dy < 0.0 || (dy == 0.0 && dx < 0.0) {
        dx = -dx;
        dy = -dy;
    }
    let proj = |p: &Point| (p.x as f64 - cx) * dx + (p.y as f64 - cy) * dy;
    let t_min = pts.iter().map(proj).fold(f64::INFINITY, f64::min);
    let t_max = pts.iter().map(proj).fold(f64::NEG_INFINITY, f64::max);
    Ok(MajorAxis {
        centroid: (cx, cy),
        direction: (dx, dy),
        t_min,
        t_max,
    })
}

fn round_point(x: f64, y: f64) -> Point {
    Point::new(x.round() as i32, y.round() as i32)
}

/// Descending area, ties to the lower component id.
fn by_priority(polygons: &[PlumePolygon]) -> Vec<&PlumePolygon> {
    let mut v: Vec<&PlumePolygon> = polygons.iter().collect();
    v.sort_by(|a, b| b.area.cmp(&a.area).then(a.component_id.cmp(&b.component_id)));
    v
}

pub fn plan_straight_nadir(dims: (usize, usize), step: usize) -> Trajectory {
    let step = step.max(1);
    let x = (dims.0 / 2) as i32;
    let pts = (0..dims.1).step_by(step).map(|y| Point::new(x, y as i32)).collect();
    Trajectory::new(Algorithm::StraightNadir, step, pts)
}

/// Boustrophedon over the whole frame, one sweep every transect width.
pub fn plan_naive_transect(dims: (usize, usize), step: usize, width: usize) -> Trajectory {
    let (step, width) = (step.max(1), width.max(1));
    let mut pts = Vec::new();
    for (k, y) in (0..dims.1).step_by(width).enumerate() {
        let mut row: Vec<Point> = (0..dims.0).step_by(step).map(|x| Point::new(x as i32, y as i32)).collect();
        if k % 2 == 1 {
            row.reverse();
        }
        pts.extend(row);
    }
    let mut traj = Trajectory::new(Algorithm::NaiveTransect, step, pts);
    traj.transect_width = width;
    traj
}

/// Every `step`-th contour point, starting at the topmost-leftmost one.
pub fn plan_trace_outline(polygons: &[PlumePolygon], step: usize) -> Trajectory {
    let step = step.max(1);
    let mut pts = Vec::new();
    for poly in by_priority(polygons) {
        pts.extend(poly.contour.iter().step_by(step).copied());
    }
    Trajectory::new(Algorithm::TraceOutline, step, pts)
}

/// Evenly spaced parameters from `lo` to `hi` inclusive, at most `step` apart.
fn even_samples(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let span = hi - lo;
    if span <= 0.0 {
        return vec![lo];
    }
    let segments = (span / step).ceil().max(1.0) as usize;
    (0..=segments).map(|k| lo + span * k as f64 / segments as f64).collect()
}

/// Waypoints along each polygon's major axis. Samples falling outside the
/// filled polygon (bent plumes) are dropped; if none remain, the filled pixel
/// nearest the centroid is used.
pub fn plan_track_center(polygons: &[PlumePolygon], step: usize) -> Trajectory {
    let step = step.max(1);
    let mut pts = Vec::new();
    for poly in by_priority(polygons) {
        let region = poly.filled();
        let Ok(axis) = major_axis(poly) else {
            pts.push(poly.contour[0]);
            continue;
        };
        let before = pts.len();
        for t in even_samples(axis.t_min, axis.t_max, step as f64) {
            let (x, y) = axis.point_at(t);
            let p = round_point(x, y);
            if region.contains(p) {
                pts.push(p);
            }
        }
        if pts.len() == before {
            pts.push(nearest_pixel(&region, axis.centroid));
        }
    }
    Trajectory::new(Algorithm::TrackCenter, step, pts)
}

fn nearest_pixel(region: &FilledRegion, (cx, cy): (f64, f64)) -> Point {
    region
        .pixels()
        .min_by(|a, b| {
            let da = (a.x as f64 - cx).powi(2) + (a.y as f64 - cy).powi(2);
            let db = (b.x as f64 - cx).powi(2) + (b.y as f64 - cy).powi(2);
            da.total_cmp(&db).then(a.cmp(b))
        })
        .expect("filled region is never empty")
}

/// Contiguous run of in-region half-pixel steps along `anchor + s * dir`.
/// Starts at the anchor, or at the nearest in-region point on the line when
/// the anchor itself is outside. Returns `(s_lo, s_hi)` in half-pixel units.
fn chord(region: &FilledRegion, anchor: (f64, f64), dir: (f64, f64), reach: i64) -> Option<(i64, i64)> {
    let at = |k: i64| {
        let s = 0.5 * k as f64;
        round_point(anchor.0 + s * dir.0, anchor.1 + s * dir.1)
    };
    let seed = (0..=reach).flat_map(|k| [k, -k]).find(|&k| region.contains(at(k)))?;
    let (mut lo, mut hi) = (seed, seed);
    while lo > -reach && region.contains(at(lo - 1)) {
        lo -= 1;
    }
    while hi < reach && region.contains(at(hi + 1)) {
        hi += 1;
    }
    Some((lo, hi))
}

fn rotate((x, y): (f64, f64), angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (x * c - y * s, x * s + y * c)
}

fn plan_cross_transects(algorithm: Algorithm, polygons: &[PlumePolygon], step: usize, width: usize, angle: f64) -> Trajectory {
    let (step, width) = (step.max(1), width.max(1));
    let mut pts = Vec::new();
    for poly in by_priority(polygons) {
        let region = poly.filled();
        let Ok(axis) = major_axis(poly) else {
            pts.push(poly.contour[0]);
            continue;
        };
        let reach = 4 * (axis.length().ceil() as i64 + poly.contour.len() as i64 + 2);
        let mut t = axis.t_min;
        let mut k = 0usize;
        while t <= axis.t_max + 1e-9 {
            let sense = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            let dir = rotate(axis.direction, sense * angle);
            let anchor = axis.point_at(t);
            if let Some((lo, hi)) = chord(&region, anchor, dir, reach) {
                // whole pixels along the line are two half steps
                let stride = 2 * step as i64;
                let mut s = lo;
                loop {
                    let h = 0.5 * s as f64;
                    pts.push(round_point(anchor.0 + h * dir.0, anchor.1 + h * dir.1));
                    if s == hi {
                        break;
                    }
                    s = (s + stride).min(hi);
                }
            }
            t += width as f64;
            k += 1;
        }
    }
    let mut traj = Trajectory::new(algorithm, step, pts);
    traj.transect_width = width;
    traj
}

/// Cross transects perpendicular to the major axis, alternating sweep sense.
pub fn plan_lawnmower_transect(polygons: &[PlumePolygon], step: usize, width: usize) -> Trajectory {
    plan_cross_transects(Algorithm::LawnmowerTransect, polygons, step, width, std::f64::consts::FRAC_PI_2)
}

/// Cross transects at ±45° to the major axis, alternating side.
pub fn plan_diagonal_transect(polygons: &[PlumePolygon], step: usize, width: usize) -> Trajectory {
    plan_cross_transects(Algorithm::DiagonalTransect, polygons, step, width, std::f64::consts::FRAC_PI_4)
}

/// Runs `algorithm` with the step derived from the scene width.
pub fn plan(algorithm: Algorithm, polygons: &[PlumePolygon], dims: (usize, usize)) -> Trajectory {
    plan_with_step(algorithm, polygons, dims, compute_step_size(dims.0))
}

pub fn plan_with_step(algorithm: Algorithm, polygons: &[PlumePolygon], dims: (usize, usize), step: usize) -> Trajectory {
    let step = step.max(1);
    let width = transect_width(step);
    match algorithm {
        Algorithm::StraightNadir => plan_straight_nadir(dims, step),
        Algorithm::NaiveTransect => plan_naive_transect(dims, step, width),
        Algorithm::TraceOutline => plan_trace_outline(polygons, step),
        Algorithm::TrackCenter => plan_track_center(polygons, step),
        Algorithm::DiagonalTransect => plan_diagonal_transect(polygons, step, width),
        Algorithm::LawnmowerTransect => plan_lawnmower_transect(polygons, step, width),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WaypointRow {
    order: usize,
    x: i32,
    y: i32,
    algorithm: String,
    step: usize,
    width: usize,
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if traj.waypoints.is_empty() {
        w.write_record(["order", "x", "y", "algorithm", "step", "width"])?;
    }
    for (order, p) in traj.waypoints.iter().enumerate() {
        w.serialize(WaypointRow {
            order,
            x: p.x,
            y: p.y,
            algorithm: traj.algorithm.name().into(),
            step: traj.step,
            width: traj.transect_width,
        })?;
    }
    w.flush().map_err(|e| Error::io("<trajectory csv>", e))?;
    Ok(())
}

/// Reads waypoints back. The algorithm tag is only known when the file has
/// at least one row.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<(Vec<Point>, Option<Algorithm>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut pts = Vec::new();
    let mut algorithm = None;
    for (i, row) in r.deserialize::<WaypointRow>().enumerate() {
        let row = row?;
        if row.order != i {
            return Err(Error::InvalidArgument(format!("waypoint order {} at row {i}", row.order)));
        }
        let a: Algorithm = row.algorithm.parse()?;
        if algorithm.is_some_and(|prev| prev != a) {
            return Err(Error::InvalidArgument("mixed algorithms in one trajectory".into()));
        }
        algorithm = Some(a);
        pts.push(Point::new(row.x, row.y));
    }
    Ok((pts, algorithm))
}
