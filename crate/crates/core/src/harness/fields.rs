//! Utility fields used to score trajectories.

use crate::error::Result;
use crate::raster::{normalize_sample, Band, NormalizedField, Scene};

/// Binomial smoother and derivative taps of the 5×5 Sobel operator. The
/// x kernel is `SMOOTH[row] * DERIV[col]`, the y kernel its transpose.
pub const SOBEL5_SMOOTH: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
pub const SOBEL5_DERIV: [f64; 5] = [-1.0, -2.0, 0.0, 2.0, 1.0];

/// Reflect-101 index: `-1 -> 1`, `n -> n - 2`, edge sample not repeated.
pub fn reflect101(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as i64;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Normalized blue band masked by the ground-truth label, divided by its
/// maximum.
pub fn intensity_field(scene: &Scene) -> Result<NormalizedField> {
    let label = scene.require_label()?;
    let values = scene
        .band(Band::Blue)
        .iter()
        .zip(label.values())
        .map(|(&b, &l)| if l { normalize_sample(b) } else { 0.0 })
        .collect();
    Ok(NormalizedField::from_unnormalized(scene.width(), scene.height(), values))
}

fn smooth(t: &[f64; 5]) -> f64 {
    SOBEL5_SMOOTH.iter().zip(t).map(|(k, v)| k * v).sum()
}

/// `SOBEL5_DERIV` applied as differences of mirrored taps, so a flat window
/// gives exactly 0 rather than rounding residue.
fn antisymmetric(t: &[f64; 5]) -> f64 {
    SOBEL5_DERIV[3] * (t[3] - t[1]) + SOBEL5_DERIV[4] * (t[4] - t[0])
}

/// Raw `(gx, gy)` of the 5×5 Sobel pair at every pixel, reflect-101 borders.
pub fn sobel5(field: &NormalizedField) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (field.width(), field.height());
    let v = field.values();
    // separable: smooth/derive along rows first, then along columns
    let mut row_deriv = vec![0.0; w * h];
    let mut row_smooth = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let t: [f64; 5] = std::array::from_fn(|k| v[y * w + reflect101(x as i64 + k as i64 - 2, w)]);
            row_deriv[y * w + x] = antisymmetric(&t);
            row_smooth[y * w + x] = smooth(&t);
        }
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let rows: [usize; 5] = std::array::from_fn(|k| reflect101(y as i64 + k as i64 - 2, h));
            gx[y * w + x] = smooth(&rows.map(|r| row_deriv[r * w + x]));
            gy[y * w + x] = antisymmetric(&rows.map(|r| row_smooth[r * w + x]));
        }
    }
    (gx, gy)
}

/// Sobel magnitude divided by its maximum.
pub fn gradient_field(intensity: &NormalizedField) -> NormalizedField {
    let (gx, gy) = sobel5(intensity);
    let mag = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    NormalizedField::from_unnormalized(intensity.width(), intensity.height(), mag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityFields {
    pub intensity: NormalizedField,
    pub gradient: NormalizedField,
}

impl UtilityFields {
    pub fn compute(scene: &Scene) -> Result<Self> {
        let intensity = intensity_field(scene)?;
        let gradient = gradient_field(&intensity);
        Ok(Self { intensity, gradient })
    }
}
