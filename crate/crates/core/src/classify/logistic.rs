use serde::{Deserialize, Serialize};

use super::{PixelSample, Standardizer};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log-loss of `sigmoid(w.x + b)` and its gradient. `params` holds
/// the four weights followed by the bias.
pub fn loss_and_gradient(params: &[f64; 5], x: &[[f64; 4]], y: &[bool]) -> (f64, [f64; 5]) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; 5];
    for (f, &t) in x.iter().zip(y) {
        let z = params[4] + (0..4).map(|k| params[k] * f[k]).sum::<f64>();
        let t = if t { 1.0 } else { 0.0 };
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for k in 0..4 {
            grad[k] += r * f[k];
        }
        grad[4] += r;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub scaler: Standardizer,
    pub weights: [f64; 4],
    pub bias: f64,
}

impl LogisticModel {
    /// Full-batch gradient descent from zero weights on standardized features.
    pub fn fit(samples: &[PixelSample], rate: f64, epochs: usize) -> Result<Self> {
        super::require_both_classes(samples, "logistic regression")?;
        if !(rate > 0.0) {
            return Err(Error::Training(format!("learning rate {rate} must be positive")));
        }
        let scaler = Standardizer::fit(samples);
        let x: Vec<[f64; 4]> = samples.iter().map(|s| scaler.apply(&s.features)).collect();
        let y: Vec<bool> = samples.iter().map(|s| s.truth).collect();
        let mut params = [0.0; 5];
        for _ in 0..epochs {
            let (_, g) = loss_and_gradient(&params, &x, &y);
            for (p, g) in params.iter_mut().zip(g) {
                *p -= rate * g;
            }
        }
        Ok(Self {
            scaler,
            weights: [params[0], params[1], params[2], params[3]],
            bias: params[4],
        })
    }

    pub fn probability(&self, f: &[f64; 4]) -> f64 {
        let x = self.scaler.apply(f);
        sigmoid(self.bias + (0..4).map(|k| self.weights[k] * x[k]).sum::<f64>())
    }

    pub fn predict(&self, f: &[f64; 4]) -> bool {
        self.probability(f) >= 0.5
    }
}
