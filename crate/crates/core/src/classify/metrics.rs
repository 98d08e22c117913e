use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_masks(pred: &BinaryMask, truth: &BinaryMask) -> Result<Self> {
        pred.check_dims(truth.dims())?;
        let mut c = Confusion::default();
        for (&p, &t) in pred.values().iter().zip(truth.values()) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Plume-class metrics. Ratios whose denominator is zero are reported as 0
/// and set `degenerate`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
    pub confusion: Confusion,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64, degenerate: &mut bool) -> f64 {
    if den == 0 {
        *degenerate = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let mut degenerate = false;
        let accuracy = ratio(c.tp + c.tn, c.total(), &mut degenerate);
        let precision = ratio(c.tp, c.tp + c.fp, &mut degenerate);
        let recall = ratio(c.tp, c.tp + c.fn_, &mut degenerate);
        let iou = ratio(c.tp, c.tp + c.fp + c.fn_, &mut degenerate);
        Self {
            accuracy,
            precision,
            recall,
            iou,
            confusion: c,
            degenerate,
        }
    }

    /// Unweighted mean of the four ratios; confusion counts are summed.
    pub fn mean(items: &[ClassMetrics]) -> ClassMetrics {
        if items.is_empty() {
            return ClassMetrics {
                degenerate: true,
                ..Default::default()
            };
        }
        let n = items.len() as f64;
        let mut confusion = Confusion::default();
        for m in items {
            confusion.merge(&m.confusion);
        }
        ClassMetrics {
            accuracy: items.iter().map(|m| m.accuracy).sum::<f64>() / n,
            precision: items.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: items.iter().map(|m| m.recall).sum::<f64>() / n,
            iou: items.iter().map(|m| m.iou).sum::<f64>() / n,
            confusion,
            degenerate: items.iter().any(|m| m.degenerate),
        }
    }
}

pub fn classification_metrics(pred: &BinaryMask, truth: &BinaryMask) -> Result<ClassMetrics> {
    Ok(ClassMetrics::from_confusion(Confusion::from_masks(pred, truth)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_perfect() {
        let m = BinaryMask::from_fn(4, 4, |x, y| x > y);
        let r = classification_metrics(&m, &m).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.iou), (1.0, 1.0, 1.0, 1.0));
        assert!(!r.degenerate);
    }

    #[test]
    fn all_false_prediction() {
        let truth = BinaryMask::from_fn(4, 2, |_, y| y == 0);
        let r = classification_metrics(&BinaryMask::new(4, 2), &truth).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.iou, 0.0);
        assert!(r.degenerate, "precision has no predicted positives");
    }

    #[test]
    fn hand_counted_ten_pixels() {
        // TP 3, FP 1, FN 2, TN 4
        let pred = BinaryMask::from_values(10, 1, [1, 1, 1, 1, 0, 0, 0, 0, 0, 0].map(|v| v == 1).to_vec()).unwrap();
        let truth = BinaryMask::from_values(10, 1, [1, 1, 1, 0, 1, 1, 0, 0, 0, 0].map(|v| v == 1).to_vec()).unwrap();
        let r = classification_metrics(&pred, &truth).unwrap();
        assert_eq!(r.confusion, Confusion { tp: 3, fp: 1, tn: 4, fn_: 2 });
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.6);
        assert_eq!(r.iou, 0.5);
        assert_eq!(r.accuracy, 0.7);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(classification_metrics(&BinaryMask::new(2, 2), &BinaryMask::new(2, 3)).is_err());
    }

    proptest! {
        #[test]
        fn identities_hold(pred in proptest::collection::vec(any::<bool>(), 36),
                           truth in proptest::collection::vec(any::<bool>(), 36)) {
            let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
            for (&p, &t) in pred.iter().zip(&truth) {
                match (p, t) { (true, true) => tp += 1, (true, false) => fp += 1,
                               (false, false) => tn += 1, (false, true) => fn_ += 1 }
            }
            let r = classification_metrics(
                &BinaryMask::from_values(6, 6, pred).unwrap(),
                &BinaryMask::from_values(6, 6, truth).unwrap()).unwrap();
            prop_assert_eq!(r.accuracy, (tp + tn) as f64 / 36.0);
            if tp + fp > 0 { prop_assert_eq!(r.precision, tp as f64 / (tp + fp) as f64); }
            if tp + fn_ > 0 { prop_assert_eq!(r.recall, tp as f64 / (tp + fn_) as f64); }
            if tp + fp + fn_ > 0 { prop_assert_eq!(r.iou, tp as f64 / (tp + fp + fn_) as f64); }
            prop_assert_eq!(r.degenerate, tp + fp == 0 || tp + fn_ == 0);
        }
    }
}
