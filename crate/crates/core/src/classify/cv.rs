use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict_mask, train_on_scenes, ClassMetrics, ClassifierKind, Confusion, HyperParams};
use crate::error::{Error, Result};
use crate::morphology::{denoise, DenoiseConfig};
use crate::raster::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Indices into the input scene list.
    pub test_scenes: Vec<usize>,
    pub raw: ClassMetrics,
    pub denoised: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kind: ClassifierKind,
    pub folds: Vec<FoldResult>,
    pub mean_raw: ClassMetrics,
    pub mean_denoised: ClassMetrics,
}

/// Shuffles scene indices by `seed` and cuts them into `k` contiguous folds
/// whose sizes differ by at most one.
pub fn fold_assignment(n_scenes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if n_scenes < k {
        return Err(Error::InvalidArgument(format!(
            "{n_scenes} scenes cannot fill {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n_scenes).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n_scenes / k, n_scenes % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Scene-level k-fold cross-validation. Within a fold the confusion counts of
/// all held-out scenes are pooled; the reported means average over folds.
pub fn cross_validate(
    kind: ClassifierKind,
    scenes: &[Scene],
    k: usize,
    seed: u64,
    hyper: &HyperParams,
    denoise_config: &DenoiseConfig,
) -> Result<CvReport> {
    for s in scenes {
        s.require_label()?;
    }
    let folds = fold_assignment(scenes.len(), k, seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(fi, test)| -> Result<FoldResult> {
            let train: Vec<Scene> = (0..scenes.len())
                .filter(|i| !test.contains(i))
                .map(|i| scenes[i].clone())
                .collect();
            let model = train_on_scenes(kind, &train, hyper)?;
            let mut raw = Confusion::default();
            let mut den = Confusion::default();
            for &i in test {
                let truth = scenes[i].label().expect("checked above");
                let pred = predict_mask(&model, &scenes[i]);
                raw.merge(&Confusion::from_masks(&pred, truth)?);
                den.merge(&Confusion::from_masks(&denoise(&pred, denoise_config)?, truth)?);
            }
            Ok(FoldResult {
                fold: fi,
                test_scenes: test.clone(),
                raw: ClassMetrics::from_confusion(raw),
                denoised: ClassMetrics::from_confusion(den),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let raws: Vec<ClassMetrics> = results.iter().map(|r| r.raw).collect();
    let dens: Vec<ClassMetrics> = results.iter().map(|r| r.denoised).collect();
    Ok(CvReport {
        kind,
        mean_raw: ClassMetrics::mean(&raws),
        mean_denoised: ClassMetrics::mean(&dens),
        folds: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn folds_partition_scenes(n in 2usize..60, k in 2usize..8, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let folds = fold_assignment(n, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(&folds, &fold_assignment(n, k, seed).unwrap());
        }
    }

    #[test]
    fn too_few_scenes() {
        assert!(fold_assignment(3, 5, 0).is_err());
    }
}
