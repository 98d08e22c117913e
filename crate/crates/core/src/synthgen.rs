//! Seeded synthetic plume scenes with exact ground truth.
//!
//! The plume is an anisotropic Gaussian ridge laid along a (possibly
//! quadratically bent) axis. Its footprint at a quarter of the peak is an
//! ellipse of the requested length and thickness, and that footprint is the
//! label. The plume is bright in the visible bands and weak in NIR, over a
//! smooth terrain whose brightness raises all four bands together (NIR
//! most), so plume vs bright ground is separable only by combining blue and
//! NIR.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Scene};

/// Label threshold as a fraction of the peak intensity.
pub const LABEL_FRACTION: f64 = 0.25;

/// Plume reflectance added to [red, green, blue, nir] per unit intensity.
pub const PLUME_SPECTRUM: [f64; 4] = [0.9, 0.8, 1.0, 0.3];

/// Terrain reflectance `offset + slope * t` per band for terrain level `t`.
const TERRAIN_OFFSET: [f64; 4] = [0.10, 0.09, 0.06, 0.12];
const TERRAIN_SLOPE: [f64; 4] = [0.25, 0.22, 0.20, 0.40];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlumeParams {
    pub centroid: (f64, f64),
    /// Radians, measured from +x towards +y.
    pub axis_angle: f64,
    pub length: f64,
    pub thickness: f64,
    /// Normal displacement at the tips as a fraction of the half-length.
    pub curvature: f64,
    pub peak_intensity: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PlumeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness > 0.0 && self.length > self.thickness) {
            return Err(Error::InvalidArgument(format!(
                "need length > thickness > 0, got length {} thickness {}",
                self.length, self.thickness
            )));
        }
        if !(self.peak_intensity > 0.0 && self.peak_intensity <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "peak intensity {} not in (0,1]",
                self.peak_intensity
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
        }
        Ok(())
    }

    fn sigmas(&self) -> (f64, f64) {
        // exp(-r^2 / 2s^2) = LABEL_FRACTION at r = half extent
        let k = (2.0 * (1.0 / LABEL_FRACTION).ln()).sqrt();
        (self.length / 2.0 / k, self.thickness / 2.0 / k)
    }

    fn bend(&self, u: f64) -> f64 {
        self.curvature * u * u / (self.length / 2.0)
    }

    /// Noiseless plume intensity at pixel centre `(x, y)`.
    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.centroid.0, y - self.centroid.1);
        let (s, c) = self.axis_angle.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c - self.bend(u);
        let (su, sv) = self.sigmas();
        self.peak_intensity * (-(u * u) / (2.0 * su * su) - (v * v) / (2.0 * sv * sv)).exp()
    }

    /// True when the labelled footprint (plus one pixel) lies inside the frame.
    pub fn fits(&self, width: usize, height: usize) -> bool {
        let (s, c) = self.axis_angle.sin_cos();
        let half_t = self.thickness / 2.0 + 1.0;
        (0..=64).all(|i| {
            let u = -self.length / 2.0 + self.length * i as f64 / 64.0;
            let v0 = self.bend(u);
            [-half_t, half_t].iter().all(|&dv| {
                let v = v0 + dv;
                let (x, y) = (self.centroid.0 + u * c - v * s, self.centroid.1 + u * s + v * c);
                x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64
            })
        })
    }
}

/// Smooth terrain level in [0, 1]: a sum of three random plane waves.
struct Terrain {
    waves: [(f64, f64, f64, f64); 3],
}

impl Terrain {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Self {
        let mut wave = || {
            let cycles = rng.gen_range(0.5..3.0);
            let dir = rng.gen_range(0.0..2.0 * PI);
            let amp = rng.gen_range(0.5..1.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            (
                amp,
                2.0 * PI * cycles * dir.cos() / width as f64,
                2.0 * PI * cycles * dir.sin() / height as f64,
                phase,
            )
        };
        Self {
            waves: [wave(), wave(), wave()],
        }
    }

    fn level(&self, x: f64, y: f64) -> f64 {
        let total: f64 = self.waves.iter().map(|w| w.0).sum();
        let v: f64 = self
            .waves
            .iter()
            .map(|&(a, kx, ky, ph)| a * (kx * x + ky * y + ph).cos())
            .sum();
        0.5 + 0.5 * v / total
    }
}

fn quantize(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * u16::MAX as f64).round() as u16
}

/// Renders one scene. The output is a pure function of the arguments.
pub fn generate_scene(id: &str, width: usize, height: usize, params: &PlumeParams) -> Result<Scene> {
    params.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("scene dimensions must be positive".into()));
    }
    if !params.fits(width, height) {
        return Err(Error::InvalidArgument(format!(
            "plume footprint does not fit in {width}x{height} frame"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let terrain = Terrain::new(&mut rng, width, height);
    let noise = Normal::new(0.0, params.noise_sigma).expect("sigma validated");
    let threshold = LABEL_FRACTION * params.peak_intensity;

    let n = width * height;
    let mut bands: Vec<Vec<u16>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut label = Vec::with_capacity(n);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64, y as f64);
            let plume = params.intensity(fx, fy);
            label.push(plume > threshold);
            let t = terrain.level(fx, fy);
            for (b, band) in bands.iter_mut().enumerate() {
                let mut v = TERRAIN_OFFSET[b] + TERRAIN_SLOPE[b] * t + PLUME_SPECTRUM[b] * plume;
                if params.noise_sigma > 0.0 {
                    v += noise.sample(&mut rng);
                }
                band.push(quantize(v));
            }
        }
    }
    let label = BinaryMask::from_values(width, height, label)?;
    Scene::new(id, width, height, bands, Some(label), 0.5)
}

/// Ranges the dataset generator draws plume parameters from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRanges {
    pub coverage: (f64, f64),
    pub aspect: (f64, f64),
    pub curvature: (f64, f64),
    pub peak_intensity: (f64, f64),
    pub noise_sigma: (f64, f64),
}

impl Default for DatasetRanges {
    fn default() -> Self {
        Self {
            coverage: (0.05, 0.15),
            aspect: (3.0, 6.0),
            curvature: (-0.25, 0.25),
            peak_intensity: (0.45, 0.85),
            noise_sigma: (0.005, 0.02),
        }
    }
}

/// Draws plume parameters for one scene of the given size.
pub fn draw_params(rng: &mut ChaCha8Rng, width: usize, height: usize, ranges: &DatasetRanges) -> Result<PlumeParams> {
    for _ in 0..10_000 {
        let coverage = rng.gen_range(ranges.coverage.0..=ranges.coverage.1);
        let aspect = rng.gen_range(ranges.aspect.0..=ranges.aspect.1);
        let area = coverage * (width * height) as f64;
        let length = (4.0 * aspect * area / PI).sqrt();
        let params = PlumeParams {
            centroid: (rng.gen_range(0.0..width as f64), rng.gen_range(0.0..height as f64)),
            axis_angle: rng.gen_range(0.0..PI),
            length,
            thickness: length / aspect,
            curvature: rng.gen_range(ranges.curvature.0..=ranges.curvature.1),
            peak_intensity: rng.gen_range(ranges.peak_intensity.0..=ranges.peak_intensity.1),
            noise_sigma: rng.gen_range(ranges.noise_sigma.0..=ranges.noise_sigma.1),
            seed: rng.gen(),
        };
        if params.fits(width, height) {
            return Ok(params);
        }
    }
    Err(Error::InvalidArgument(format!(
        "could not place a plume in a {width}x{height} frame"
    )))
}

/// `n` scenes named `scene_000`, `scene_001`, ... deterministic in `base_seed`.
pub fn generate_dataset(n: usize, base_seed: u64, dims: (usize, usize)) -> Result<Vec<Scene>> {
    generate_dataset_with(n, base_seed, dims, &DatasetRanges::default())
}

pub fn generate_dataset_with(
    n: usize,
    base_seed: u64,
    dims: (usize, usize),
    ranges: &DatasetRanges,
) -> Result<Vec<Scene>> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset needs at least one scene".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let params: Vec<PlumeParams> = (0..n)
        .map(|_| draw_params(&mut rng, dims.0, dims.1, ranges))
        .collect::<Result<_>>()?;
    use rayon::prelude::*;
    params
        .par_iter()
        .enumerate()
        .map(|(i, p)| generate_scene(&format!("scene_{i:03}"), dims.0, dims.1, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::count_components;

    fn straight(seed: u64) -> PlumeParams {
        PlumeParams {
            centroid: (256.0, 256.0),
            axis_angle: 0.0,
            length: 200.0,
            thickness: 30.0,
            curvature: 0.0,
            peak_intensity: 0.7,
            noise_sigma: 0.0,
            seed,
        }
    }

    #[test]
    fn label_is_mirror_symmetric() {
        let p = straight(1);
        let scene = generate_scene("s", 512, 512, &p).unwrap();
        let label = scene.label().unwrap();
        for y in 0..512usize {
            let my = 512 - y;
            if my < 512 {
                for x in 0..512 {
                    assert_eq!(label.get(x, y), label.get(x, my), "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let mut p = straight(9);
        p.noise_sigma = 0.03;
        p.curvature = 0.2;
        let a = generate_scene("s", 512, 400, &p).unwrap();
        let b = generate_scene("s", 512, 400, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn label_area_matches_pixel_count_of_reference_field() {
        let p = straight(3);
        let scene = generate_scene("s", 512, 512, &p).unwrap();
        // reference: brute-force count of the ellipse footprint
        let (a, b) = (p.length / 2.0, p.thickness / 2.0);
        let mut reference = 0usize;
        for y in 0..512 {
            for x in 0..512 {
                let (dx, dy) = (x as f64 - 256.0, y as f64 - 256.0);
                if dx * dx / (a * a) + dy * dy / (b * b) < 1.0 {
                    reference += 1;
                }
            }
        }
        let area = scene.label().unwrap().count() as f64;
        assert!((area - reference as f64).abs() <= 0.2 * reference as f64, "{area} vs {reference}");
        assert!((area - PI * a * b).abs() <= 0.2 * PI * a * b);
    }

    #[test]
    fn straight_noiseless_label_is_connected() {
        let mut p = straight(5);
        p.axis_angle = 0.7;
        let scene = generate_scene("s", 512, 512, &p).unwrap();
        assert_eq!(count_components(scene.label().unwrap()), 1);
    }

    #[test]
    fn labelled_pixels_exceed_threshold() {
        let mut p = straight(5);
        p.curvature = 0.3;
        p.noise_sigma = 0.05;
        let scene = generate_scene("s", 512, 512, &p).unwrap();
        let label = scene.label().unwrap();
        for y in 0..512 {
            for x in 0..512 {
                if label.get(x, y) {
                    assert!(p.intensity(x as f64, y as f64) > LABEL_FRACTION * p.peak_intensity);
                }
            }
        }
    }

    #[test]
    fn plume_is_bright_in_blue_dark_in_nir() {
        let p = straight(2);
        let scene = generate_scene("s", 512, 512, &p).unwrap();
        let idx = 256 * 512 + 256;
        let f = scene.features(idx);
        assert!(f[2] - f[3] > 0.3, "{f:?}");
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = straight(1);
        p.centroid = (10.0, 10.0);
        assert!(generate_scene("s", 512, 512, &p).is_err());
        let mut p = straight(1);
        p.thickness = 300.0;
        assert!(generate_scene("s", 512, 512, &p).is_err());
        let mut p = straight(1);
        p.peak_intensity = 0.0;
        assert!(generate_scene("s", 512, 512, &p).is_err());
    }

    #[test]
    fn dataset_determinism_and_size() {
        let a = generate_dataset(1, 4, (128, 128)).unwrap();
        assert_eq!(a.len(), 1);
        let b = generate_dataset(3, 11, (128, 128)).unwrap();
        let c = generate_dataset(3, 11, (128, 128)).unwrap();
        assert_eq!(b, c);
        assert_ne!(b[0], b[1]);
        assert!(generate_dataset(0, 1, (64, 64)).is_err());
    }

    #[test]
    fn dataset_coverage_in_target_band() {
        let scenes = generate_dataset(38, 2024, (256, 256)).unwrap();
        let mean: f64 = scenes
            .iter()
            .map(|s| s.label().unwrap().count() as f64 / (256.0 * 256.0))
            .sum::<f64>()
            / 38.0;
        assert!((0.05..=0.15).contains(&mean), "mean coverage {mean}");
    }
}
