//! Two-band threshold rule: plume iff blue is bright and NIR is dark.

use serde::{Deserialize, Serialize};

use super::PixelSample;
use crate::error::{Error, Result};
use crate::raster::{Band, BinaryMask, Scene, normalize_sample};

/// Grid resolution of the threshold search (0.00, 0.02, ..., 1.00).
pub const GRID_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub blue_min: f64,
    pub nir_max: f64,
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for v in [self.blue_min, self.nir_max] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ThresholdOutOfRange(v));
            }
        }
        Ok(())
    }

    /// Classifies nothing.
    pub fn empty() -> Self {
        Self {
            blue_min: 1.0,
            nir_max: 0.0,
        }
    }

    #[inline]
    pub fn classify(&self, features: &[f64; 4]) -> bool {
        features[Band::Blue as usize] >= self.blue_min && features[Band::Nir as usize] <= self.nir_max
    }
}

pub fn band_threshold(scene: &Scene, t: &Thresholds) -> Result<BinaryMask> {
    t.validate()?;
    let blue = scene.band(Band::Blue);
    let nir = scene.band(Band::Nir);
    let values = blue
        .iter()
        .zip(nir)
        .map(|(&b, &n)| normalize_sample(b) >= t.blue_min && normalize_sample(n) <= t.nir_max)
        .collect();
    BinaryMask::from_values(scene.width(), scene.height(), values)
}

#[inline]
fn grid(k: usize) -> f64 {
    k as f64 / GRID_STEPS as f64
}

/// Largest k with grid(k) <= v.
fn floor_index(v: f64) -> usize {
    let mut k = ((v * GRID_STEPS as f64).floor().max(0.0) as usize).min(GRID_STEPS);
    while k < GRID_STEPS && grid(k + 1) <= v {
        k += 1;
    }
    while k > 0 && grid(k) > v {
        k -= 1;
    }
    k
}

/// Smallest k with grid(k) >= v.
fn ceil_index(v: f64) -> usize {
    let mut k = ((v * GRID_STEPS as f64).ceil().max(0.0) as usize).min(GRID_STEPS);
    while k > 0 && grid(k - 1) >= v {
        k -= 1;
    }
    while k < GRID_STEPS && grid(k) < v {
        k += 1;
    }
    k
}

const G: usize = GRID_STEPS + 1;

/// Per-group confusion lookup over every (blue_min, nir_max) grid pair.
struct GroupTable {
    /// tp[i][j]: positives with blue >= grid(i) and nir <= grid(j)
    tp: Vec<u64>,
    fp: Vec<u64>,
    positives: u64,
}

impl GroupTable {
    fn new<'a>(pixels: impl Iterator<Item = ([f64; 4], bool)> + 'a) -> Self {
        let mut pos = vec![0u64; G * G];
        let mut neg = vec![0u64; G * G];
        let mut positives = 0;
        for (f, truth) in pixels {
            let bi = floor_index(f[Band::Blue as usize]);
            let nj = ceil_index(f[Band::Nir as usize]);
            if truth {
                pos[bi * G + nj] += 1;
                positives += 1;
            } else {
                neg[bi * G + nj] += 1;
            }
        }
        Self {
            tp: cumulate(&pos),
            fp: cumulate(&neg),
            positives,
        }
    }

    fn iou(&self, i: usize, j: usize) -> f64 {
        let tp = self.tp[i * G + j];
        let den = self.fp[i * G + j] + self.positives;
        if den == 0 {
            0.0
        } else {
            tp as f64 / den as f64
        }
    }
}

/// c[i][j] = sum over a >= i, b <= j of h[a][b].
fn cumulate(h: &[u64]) -> Vec<u64> {
    let mut c = vec![0u64; G * G];
    for i in (0..G).rev() {
        let mut row = 0u64;
        for j in 0..G {
            row += h[i * G + j];
            c[i * G + j] = row + if i + 1 < G { c[(i + 1) * G + j] } else { 0 };
        }
    }
    c
}

/// Exhaustive grid search maximizing the mean per-group plume IoU. Ties go
/// to the smaller `blue_min`, then the larger `nir_max`.
pub fn fit_band_threshold_groups(groups: &[&[PixelSample]]) -> Result<Thresholds> {
    if groups.is_empty() || groups.iter().all(|g| g.is_empty()) {
        return Err(Error::Training("band threshold needs at least one training pixel".into()));
    }
    let tables: Vec<GroupTable> = groups
        .iter()
        .map(|g| GroupTable::new(g.iter().map(|s| (s.features, s.truth))))
        .collect();
    best_thresholds(&tables)
}

fn best_thresholds(tables: &[GroupTable]) -> Result<Thresholds> {
    if tables.iter().all(|t| t.positives == 0) {
        log::warn!("band threshold fit: no plume pixels in training data, classifying nothing");
        return Ok(Thresholds::empty());
    }
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for i in 0..G {
        for j in (0..G).rev() {
            let score = tables.iter().map(|t| t.iou(i, j)).sum::<f64>() / tables.len() as f64;
            if score > best.0 {
                best = (score, i, j);
            }
        }
    }
    Ok(Thresholds {
        blue_min: grid(best.1),
        nir_max: grid(best.2),
    })
}

/// Fits thresholds on labelled scenes, one IoU term per scene.
pub fn fit_band_threshold(scenes: &[Scene]) -> Result<Thresholds> {
    if scenes.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let mut tables = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let label = scene.require_label()?;
        tables.push(GroupTable::new(
            (0..scene.width() * scene.height()).map(|i| (scene.features(i), label.values()[i])),
        ));
    }
    best_thresholds(&tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene_from(blue: Vec<u16>, nir: Vec<u16>, label: Option<BinaryMask>, w: usize) -> Scene {
        let h = blue.len() / w;
        Scene::new("t", w, h, vec![blue.clone(), blue.clone(), blue, nir], label, 1.0).unwrap()
    }

    #[test]
    fn grid_indices() {
        assert_eq!(floor_index(0.0), 0);
        assert_eq!(floor_index(1.0), 50);
        assert_eq!(floor_index(0.5), 25);
        assert_eq!(floor_index(0.4999), 24);
        assert_eq!(ceil_index(0.0), 0);
        assert_eq!(ceil_index(0.5), 25);
        assert_eq!(ceil_index(0.5001), 26);
        assert_eq!(ceil_index(1.0), 50);
    }

    #[test]
    fn vacuous_thresholds_classify_everything() {
        let s = scene_from(vec![0, 100, 65535, 7], vec![65535, 0, 3, 9], None, 2);
        let m = band_threshold(&s, &Thresholds { blue_min: 0.0, nir_max: 1.0 }).unwrap();
        assert_eq!(m.count(), 4);
    }

    #[test]
    fn out_of_range_rejected() {
        let s = scene_from(vec![0; 4], vec![0; 4], None, 2);
        let err = band_threshold(&s, &Thresholds { blue_min: 1.1, nir_max: 1.0 }).unwrap_err();
        assert!(err.to_string().contains("threshold out of range"));
    }

    #[test]
    fn recovers_blue_threshold() {
        // blue sweeps 0..1, label = blue >= 0.5, nir random-ish and uninformative
        let n = 1000;
        let blue: Vec<u16> = (0..n).map(|i| (i as f64 / (n - 1) as f64 * 65535.0).round() as u16).collect();
        let nir: Vec<u16> = (0..n).map(|i| ((i * 7919) % 65536) as u16).collect();
        let label = BinaryMask::from_values(n, 1, blue.iter().map(|&b| normalize_sample(b) >= 0.5).collect()).unwrap();
        let s = scene_from(blue, nir, Some(label), n);
        let t = fit_band_threshold(&[s]).unwrap();
        assert!((t.blue_min - 0.5).abs() <= 0.02 + 1e-12, "{t:?}");
        assert_eq!(t.nir_max, 1.0);
    }

    #[test]
    fn all_background_returns_classify_nothing() {
        let s = scene_from(vec![100; 4], vec![9; 4], Some(BinaryMask::new(2, 2)), 2);
        assert_eq!(fit_band_threshold(&[s]).unwrap(), Thresholds::empty());
        assert!(fit_band_threshold(&[]).is_err());
    }

    #[test]
    fn fitted_thresholds_are_grid_members() {
        let scenes = crate::synthgen::generate_dataset(2, 8, (96, 96)).unwrap();
        let t = fit_band_threshold(&scenes).unwrap();
        for v in [t.blue_min, t.nir_max] {
            let k = (v * 50.0).round() as usize;
            assert_eq!(grid(k), v);
        }
    }

    #[test]
    fn fit_matches_brute_force_iou() {
        let scenes = crate::synthgen::generate_dataset(2, 21, (64, 64)).unwrap();
        let t = fit_band_threshold(&scenes).unwrap();
        let score = |t: &Thresholds| {
            scenes
                .iter()
                .map(|s| {
                    let m = band_threshold(s, t).unwrap();
                    crate::classify::classification_metrics(&m, s.label().unwrap()).unwrap().iou
                })
                .sum::<f64>()
                / scenes.len() as f64
        };
        let best = score(&t);
        for i in (0..=50).step_by(5) {
            for j in (0..=50).step_by(5) {
                let other = Thresholds { blue_min: grid(i), nir_max: grid(j) };
                assert!(score(&other) <= best + 1e-12);
            }
        }
    }
}
