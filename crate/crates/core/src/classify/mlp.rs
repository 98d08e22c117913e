//! 4-H-1 perceptron with logistic hidden and output units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};
use super::{PixelSample, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub scaler: Standardizer,
    /// One row of input weights per hidden unit.
    pub hidden_weights: Vec<[f64; 4]>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub hidden_weights: Vec<[f64; 4]>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl Mlp {
    /// Untrained network with N(0, init_std) weights and zero biases.
    pub fn init(hidden: usize, init_std: f64, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Training("MLP needs at least one hidden unit".into()));
        }
        let normal = Normal::new(0.0, init_std)
            .map_err(|e| Error::Training(format!("bad init std {init_std}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden_weights = (0..hidden)
            .map(|_| std::array::from_fn(|_| normal.sample(&mut rng)))
            .collect();
        let output_weights = (0..hidden).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self {
            scaler: Standardizer::identity(),
            hidden_weights,
            hidden_bias: vec![0.0; hidden],
            output_weights,
            output_bias: 0.0,
        })
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_bias.len()
    }

    /// Output logit for already-standardized input, filling `act` with the
    /// hidden activations.
    fn forward(&self, x: &[f64; 4], act: &mut [f64]) -> f64 {
        let mut z = self.output_bias;
        for (j, a) in act.iter_mut().enumerate() {
            let w = &self.hidden_weights[j];
            let h = self.hidden_bias[j] + w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3];
            *a = sigmoid(h);
            z += self.output_weights[j] * *a;
        }
        z
    }

    /// Mean log-loss on standardized inputs and its gradient by backprop.
    pub fn loss_and_gradient(&self, x: &[[f64; 4]], y: &[bool]) -> (f64, MlpGradient) {
        let hsz = self.hidden_units();
        let n = x.len() as f64;
        let mut g = MlpGradient {
            hidden_weights: vec![[0.0; 4]; hsz],
            hidden_bias: vec![0.0; hsz],
            output_weights: vec![0.0; hsz],
            output_bias: 0.0,
        };
        let mut act = vec![0.0; hsz];
        let mut loss = 0.0;
        for (f, &t) in x.iter().zip(y) {
            let z = self.forward(f, &mut act);
            let t = if t { 1.0 } else { 0.0 };
            loss += softplus(z) - t * z;
            let dz = sigmoid(z) - t;
            g.output_bias += dz;
            for j in 0..hsz {
                g.output_weights[j] += dz * act[j];
                let dh = dz * self.output_weights[j] * act[j] * (1.0 - act[j]);
                g.hidden_bias[j] += dh;
                for k in 0..4 {
                    g.hidden_weights[j][k] += dh * f[k];
                }
            }
        }
        g.output_bias /= n;
        g.output_weights.iter_mut().for_each(|v| *v /= n);
        g.hidden_bias.iter_mut().for_each(|v| *v /= n);
        g.hidden_weights.iter_mut().flatten().for_each(|v| *v /= n);
        (loss / n, g)
    }

    /// All trainable parameters in a fixed order: hidden weights (row-major),
    /// hidden biases, output weights, output bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.hidden_weights.iter().flatten().copied().collect();
        v.extend(&self.hidden_bias);
        v.extend(&self.output_weights);
        v.push(self.output_bias);
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let hsz = self.hidden_units();
        assert_eq!(v.len(), 6 * hsz + 1, "flat parameter length");
        for j in 0..hsz {
            self.hidden_weights[j].copy_from_slice(&v[4 * j..4 * j + 4]);
        }
        self.hidden_bias.copy_from_slice(&v[4 * hsz..5 * hsz]);
        self.output_weights.copy_from_slice(&v[5 * hsz..6 * hsz]);
        self.output_bias = v[6 * hsz];
    }

    pub fn fit(samples: &[PixelSample], hidden: usize, init_std: f64, rate: f64, epochs: usize, seed: u64) -> Result<Self> {
        super::require_both_classes(samples, "MLP")?;
        let mut net = Self::init(hidden, init_std, seed)?;
        net.scaler = Standardizer::fit(samples);
        let x: Vec<[f64; 4]> = samples.iter().map(|s| net.scaler.apply(&s.features)).collect();
        let y: Vec<bool> = samples.iter().map(|s| s.truth).collect();
        for _ in 0..epochs {
            let (_, g) = net.loss_and_gradient(&x, &y);
            net.output_bias -= rate * g.output_bias;
            for j in 0..hidden {
                net.output_weights[j] -= rate * g.output_weights[j];
                net.hidden_bias[j] -= rate * g.hidden_bias[j];
                for k in 0..4 {
                    net.hidden_weights[j][k] -= rate * g.hidden_weights[j][k];
                }
            }
        }
        Ok(net)
    }

    pub fn probability(&self, f: &[f64; 4]) -> f64 {
        let x = self.scaler.apply(f);
        let mut act = vec![0.0; self.hidden_units()];
        sigmoid(self.forward(&x, &mut act))
    }

    pub fn predict(&self, f: &[f64; 4]) -> bool {
        self.probability(f) >= 0.5
    }
}

impl MlpGradient {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.hidden_weights.iter().flatten().copied().collect();
        v.extend(&self.hidden_bias);
        v.extend(&self.output_weights);
        v.push(self.output_bias);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip() {
        let mut net = Mlp::init(3, 0.1, 7).unwrap();
        let flat: Vec<f64> = (0..19).map(|i| i as f64).collect();
        net.set_flat(&flat);
        assert_eq!(net.to_flat(), flat);
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(Mlp::init(16, 0.1, 3).unwrap(), Mlp::init(16, 0.1, 3).unwrap());
        assert_ne!(Mlp::init(16, 0.1, 3).unwrap(), Mlp::init(16, 0.1, 4).unwrap());
    }

    #[test]
    fn learns_a_threshold() {
        let samples: Vec<PixelSample> = (0..200)
            .map(|i| {
                let v = i as f64 / 199.0;
                PixelSample { features: [0.2, 0.3, v, 0.4], truth: v > 0.5 }
            })
            .collect();
        let net = Mlp::fit(&samples, 16, 0.1, 0.5, 300, 1).unwrap();
        let correct = samples.iter().filter(|s| net.predict(&s.features) == s.truth).count();
        assert!(correct >= 190, "{correct}");
    }
}
