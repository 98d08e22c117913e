use serde::{Deserialize, Serialize};

use super::fields::UtilityFields;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::Scene;

/// Scores of one trajectory against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub pixels_observed: usize,
    /// Distinct pixels, so crossings of transects are counted once.
    pub distinct_pixels: usize,
    pub ratio_plume: f64,
    pub mean_intensity: f64,
    pub mean_gradient: f64,
    /// Set for an empty trajectory, where every ratio is reported as 0.
    pub degenerate: bool,
}

pub fn evaluate_trajectory(waypoints: &[Point], scene: &Scene, fields: &UtilityFields) -> Result<TrajectoryMetrics> {
    let label = scene.require_label()?;
    let (w, h) = scene.dims();
    if let Some(p) = waypoints.iter().find(|p| !p.in_frame(w, h)) {
        return Err(Error::Contract(format!(
            "waypoint ({}, {}) outside {w}x{h} frame",
            p.x, p.y
        )));
    }
    if waypoints.is_empty() {
        return Ok(TrajectoryMetrics {
            degenerate: true,
            ..Default::default()
        });
    }
    let mut inside = 0usize;
    let (mut intensity, mut gradient) = (0.0, 0.0);
    for p in waypoints {
        let (x, y) = (p.x as usize, p.y as usize);
        inside += usize::from(label.get(x, y));
        intensity += fields.intensity.get(x, y);
        gradient += fields.gradient.get(x, y);
    }
    let n = waypoints.len() as f64;
    let mut distinct = waypoints.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(TrajectoryMetrics {
        pixels_observed: waypoints.len(),
        distinct_pixels: distinct.len(),
        ratio_plume: inside as f64 / n,
        mean_intensity: intensity / n,
        mean_gradient: gradient / n,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BinaryMask;

    fn scene(label: BinaryMask) -> Scene {
        let (w, h) = label.dims();
        let n = w * h;
        Scene::new("e", w, h, vec![vec![100; n], vec![100; n], vec![40000; n], vec![100; n]], Some(label), 1.0).unwrap()
    }

    #[test]
    fn four_of_ten_inside() {
        let label = BinaryMask::from_fn(10, 10, |x, _| x < 4);
        let s = scene(label);
        let f = UtilityFields::compute(&s).unwrap();
        let pts: Vec<Point> = (0..10).map(|x| Point::new(x, 5)).collect();
        let m = evaluate_trajectory(&pts, &s, &f).unwrap();
        assert_eq!(m.pixels_observed, 10);
        assert!((m.ratio_plume - 0.4).abs() < 1e-15);
        assert!((m.mean_intensity - 0.4).abs() < 1e-15);
        assert!(m.mean_intensity <= m.ratio_plume);
    }

    #[test]
    fn inside_only_and_empty() {
        let s = scene(BinaryMask::from_fn(10, 10, |x, y| x > 2 && y > 2));
        let f = UtilityFields::compute(&s).unwrap();
        let m = evaluate_trajectory(&[Point::new(5, 5), Point::new(6, 6), Point::new(5, 5)], &s, &f).unwrap();
        assert_eq!((m.ratio_plume, m.pixels_observed, m.distinct_pixels), (1.0, 3, 2));
        let e = evaluate_trajectory(&[], &s, &f).unwrap();
        assert!(e.degenerate);
        assert_eq!((e.ratio_plume, e.mean_intensity, e.mean_gradient), (0.0, 0.0, 0.0));
        assert!(matches!(evaluate_trajectory(&[Point::new(10, 0)], &s, &f), Err(Error::Contract(_))));
    }
}
