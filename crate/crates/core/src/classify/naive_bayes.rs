use serde::{Deserialize, Serialize};

use super::PixelSample;
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub prior: f64,
    pub mean: [f64; 4],
    pub variance: [f64; 4],
}

impl ClassStats {
    fn fit(samples: &[&PixelSample], total: usize, floor: f64) -> Self {
        let n = samples.len() as f64;
        let mut mean = [0.0; 4];
        for s in samples {
            for (m, f) in mean.iter_mut().zip(s.features) {
                *m += f;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut variance = [0.0; 4];
        for s in samples {
            for k in 0..4 {
                let d = s.features[k] - mean[k];
                variance[k] += d * d;
            }
        }
        variance.iter_mut().for_each(|v| *v = (*v / n).max(floor));
        Self {
            prior: n / total as f64,
            mean,
            variance,
        }
    }

    /// log p(class) + sum of per-feature Gaussian log densities.
    pub fn log_joint(&self, f: &[f64; 4]) -> f64 {
        let mut lp = self.prior.ln();
        for k in 0..4 {
            let d = f[k] - self.mean[k];
            lp -= 0.5 * (2.0 * std::f64::consts::PI * self.variance[k]).ln() + d * d / (2.0 * self.variance[k]);
        }
        lp
    }
}

/// Gaussian naive Bayes. A class absent from training has no stats and is
/// never predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub background: Option<ClassStats>,
    pub plume: Option<ClassStats>,
}

impl GaussianNb {
    pub fn fit(samples: &[PixelSample], variance_floor: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Training("empty sample set".into()));
        }
        let (pos, neg): (Vec<&PixelSample>, Vec<&PixelSample>) = samples.iter().partition(|s| s.truth);
        let stats = |group: &[&PixelSample]| {
            (!group.is_empty()).then(|| ClassStats::fit(group, samples.len(), variance_floor))
        };
        Ok(Self {
            background: stats(&neg),
            plume: stats(&pos),
        })
    }

    pub fn predict(&self, f: &[f64; 4]) -> bool {
        match (&self.background, &self.plume) {
            (Some(bg), Some(pl)) => pl.log_joint(f) >= bg.log_joint(f),
            (None, Some(_)) => true,
            _ => false,
        }
    }
}
