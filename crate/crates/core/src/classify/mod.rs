//! Per-pixel plume classifiers.
//!
//! Every model sees one pixel at a time through its four normalized band
//! values; spatial context only enters later, during denoising.

mod cv;
pub mod logistic;
mod metrics;
pub mod mlp;
pub mod naive_bayes;
pub mod threshold;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, fold_assignment, CvReport, FoldResult};
pub use metrics::{classification_metrics, ClassMetrics, Confusion};
pub use threshold::{band_threshold, fit_band_threshold, Thresholds};

use crate::error::{Error, Result};
use crate::raster::{load_mask, BinaryMask, Scene};
use logistic::LogisticModel;
use mlp::Mlp;
use naive_bayes::GaussianNb;
use tree::{DecisionTree, RandomForest, TreeParams};

/// One labelled pixel: normalized `[red, green, blue, nir]` and its truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub features: [f64; 4],
    pub truth: bool,
}

impl PixelSample {
    pub fn new(features: [f64; 4], truth: bool) -> Result<Self> {
        if let Some(f) = features.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::InvalidArgument(format!("feature {f} outside [0,1]")));
        }
        Ok(Self { features, truth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    BandThreshold,
    GaussianNb,
    LogisticRegression,
    DecisionTree,
    RandomForest,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::BandThreshold,
        ClassifierKind::GaussianNb,
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::BandThreshold => "band-threshold",
            ClassifierKind::GaussianNb => "gaussian-nb",
            ClassifierKind::LogisticRegression => "logistic-regression",
            ClassifierKind::DecisionTree => "decision-tree",
            ClassifierKind::RandomForest => "random-forest",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown classifier {s:?}")))
    }
}

/// Training recipes. All fixed and seeded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub variance_floor: f64,
    pub lr_rate: f64,
    pub lr_epochs: usize,
    pub tree_max_depth: Option<usize>,
    pub tree_min_leaf: usize,
    pub forest_trees: usize,
    pub forest_features_per_split: usize,
    pub mlp_hidden: usize,
    pub mlp_init_std: f64,
    pub mlp_rate: f64,
    pub mlp_epochs: usize,
    /// Pixels drawn (without replacement) from the training scenes for the
    /// learned models. The band threshold always sees every pixel.
    pub max_train_samples: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            variance_floor: naive_bayes::VARIANCE_FLOOR,
            lr_rate: 0.1,
            lr_epochs: 500,
            tree_max_depth: Some(12),
            tree_min_leaf: 5,
            forest_trees: 20,
            forest_features_per_split: 2,
            mlp_hidden: 16,
            mlp_init_std: 0.1,
            mlp_rate: 0.5,
            mlp_epochs: 300,
            max_train_samples: 40_000,
            seed: 0,
        }
    }
}

/// Per-feature affine scaling to zero mean and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; 4],
    pub scale: [f64; 4],
}

impl Standardizer {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; 4],
            scale: [1.0; 4],
        }
    }

    pub fn fit(samples: &[PixelSample]) -> Self {
        let n = samples.len().max(1) as f64;
        let mut mean = [0.0; 4];
        for s in samples {
            for k in 0..4 {
                mean[k] += s.features[k];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; 4];
        for s in samples {
            for k in 0..4 {
                var[k] += (s.features[k] - mean[k]).powi(2);
            }
        }
        let scale = var.map(|v| {
            let sd = (v / n).sqrt();
            if sd > 1e-12 {
                1.0 / sd
            } else {
                1.0
            }
        });
        Self { mean, scale }
    }

    #[inline]
    pub fn apply(&self, f: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|k| (f[k] - self.mean[k]) * self.scale[k])
    }
}

pub(crate) fn require_both_classes(samples: &[PixelSample], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Training(format!("{what}: empty sample set")));
    }
    let pos = samples.iter().filter(|s| s.truth).count();
    if pos == 0 || pos == samples.len() {
        return Err(Error::Training(format!("{what}: training data has a single class")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "kebab-case")]
pub enum Model {
    BandThreshold(Thresholds),
    GaussianNb(GaussianNb),
    LogisticRegression(LogisticModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Mlp(Mlp),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::BandThreshold(_) => ClassifierKind::BandThreshold,
            Model::GaussianNb(_) => ClassifierKind::GaussianNb,
            Model::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            Model::DecisionTree(_) => ClassifierKind::DecisionTree,
            Model::RandomForest(_) => ClassifierKind::RandomForest,
            Model::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    #[inline]
    pub fn predict_pixel(&self, f: &[f64; 4]) -> bool {
        match self {
            Model::BandThreshold(t) => t.classify(f),
            Model::GaussianNb(m) => m.predict(f),
            Model::LogisticRegression(m) => m.predict(f),
            Model::DecisionTree(m) => m.predict(f),
            Model::RandomForest(m) => m.predict(f),
            Model::Mlp(m) => m.predict(f),
        }
    }
}

pub fn train_model(kind: ClassifierKind, samples: &[PixelSample], hyper: &HyperParams) -> Result<Model> {
    if samples.is_empty() {
        return Err(Error::Training("empty sample set".into()));
    }
    let tree_params = TreeParams {
        max_depth: hyper.tree_max_depth,
        min_leaf: hyper.tree_min_leaf,
        features_per_split: None,
    };
    Ok(match kind {
        ClassifierKind::BandThreshold => Model::BandThreshold(threshold::fit_band_threshold_groups(&[samples])?),
        ClassifierKind::GaussianNb => Model::GaussianNb(GaussianNb::fit(samples, hyper.variance_floor)?),
        ClassifierKind::LogisticRegression => {
            Model::LogisticRegression(LogisticModel::fit(samples, hyper.lr_rate, hyper.lr_epochs)?)
        }
        ClassifierKind::DecisionTree => Model::DecisionTree(DecisionTree::fit(samples, &tree_params)?),
        ClassifierKind::RandomForest => Model::RandomForest(RandomForest::fit(
            samples,
            hyper.forest_trees,
            &TreeParams {
                features_per_split: Some(hyper.forest_features_per_split),
                ..tree_params
            },
            hyper.seed,
        )?),
        ClassifierKind::Mlp => Model::Mlp(Mlp::fit(
            samples,
            hyper.mlp_hidden,
            hyper.mlp_init_std,
            hyper.mlp_rate,
            hyper.mlp_epochs,
            hyper.seed,
        )?),
    })
}

/// Every pixel of a labelled scene as a sample.
pub fn scene_samples(scene: &Scene) -> Result<Vec<PixelSample>> {
    let label = scene.require_label()?;
    Ok((0..scene.width() * scene.height())
        .map(|i| PixelSample {
            features: scene.features(i),
            truth: label.values()[i],
        })
        .collect())
}

/// Pooled pixels of all scenes, subsampled without replacement to at most
/// `max` samples (original order kept).
pub fn training_samples(scenes: &[Scene], max: usize, seed: u64) -> Result<Vec<PixelSample>> {
    let mut offsets = Vec::with_capacity(scenes.len());
    let mut total = 0usize;
    for s in scenes {
        s.require_label()?;
        offsets.push(total);
        total += s.width() * s.height();
    }
    let picks: Vec<usize> = if total > max {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = rand::seq::index::sample(&mut rng, total, max).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..total).collect()
    };
    Ok(picks
        .into_iter()
        .map(|g| {
            let si = offsets.partition_point(|&o| o <= g) - 1;
            let scene = &scenes[si];
            let i = g - offsets[si];
            PixelSample {
                features: scene.features(i),
                truth: scene.label().unwrap().values()[i],
            }
        })
        .collect())
}

/// Trains on labelled scenes. The band threshold is fitted with one IoU term
/// per scene; the other kinds train on pooled, subsampled pixels.
pub fn train_on_scenes(kind: ClassifierKind, scenes: &[Scene], hyper: &HyperParams) -> Result<Model> {
    if scenes.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    match kind {
        ClassifierKind::BandThreshold => Ok(Model::BandThreshold(fit_band_threshold(scenes)?)),
        _ => train_model(kind, &training_samples(scenes, hyper.max_train_samples, hyper.seed)?, hyper),
    }
}

/// Classifies each pixel independently.
pub fn predict_mask(model: &Model, scene: &Scene) -> BinaryMask {
    let (w, h) = scene.dims();
    let values: Vec<bool> = (0..w * h)
        .into_par_iter()
        .with_min_len(4096)
        .map(|i| model.predict_pixel(&scene.features(i)))
        .collect();
    BinaryMask::from_values(w, h, values).expect("one value per pixel")
}

/// Loads a mask produced outside this crate (e.g. by a segmentation network)
/// so it can stand in for a classifier output.
pub fn import_external_mask(path: impl AsRef<Path>, scene: &Scene) -> Result<BinaryMask> {
    let mask = load_mask(path)?;
    mask.check_dims(scene.dims())?;
    Ok(mask)
}

pub const MODEL_FORMAT: &str = "plumetarget-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub model: Model,
}

pub fn model_to_json(model: &Model) -> String {
    serde_json::to_string_pretty(&ModelDocument {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        model: model.clone(),
    })
    .expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!("unexpected format tag {:?}", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {}", doc.version)));
    }
    Ok(doc.model)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    model_from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::generate_dataset;

    #[test]
    fn kind_names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("unet".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn vacuous_threshold_model_is_all_plume() {
        let scene = &generate_dataset(1, 1, (64, 64)).unwrap()[0];
        let model = Model::BandThreshold(Thresholds { blue_min: 0.0, nir_max: 1.0 });
        assert_eq!(predict_mask(&model, scene).count(), 64 * 64);
    }

    #[test]
    fn prediction_is_deterministic_and_per_pixel() {
        let scenes = generate_dataset(2, 3, (64, 64)).unwrap();
        let hyper = HyperParams { forest_trees: 4, max_train_samples: 3000, ..Default::default() };
        let model = train_on_scenes(ClassifierKind::RandomForest, &scenes[..1], &hyper).unwrap();
        let a = predict_mask(&model, &scenes[1]);
        assert_eq!(a, predict_mask(&model, &scenes[1]));

        // permuting pixels and un-permuting the output gives the same mask
        let n = 64 * 64;
        let perm: Vec<usize> = (0..n).map(|i| (i * 1237) % n).collect();
        let bands: Vec<Vec<u16>> = scenes[1].bands().iter().map(|b| perm.iter().map(|&p| b[p]).collect()).collect();
        let shuffled = Scene::new("p", 64, 64, bands, None, 1.0).unwrap();
        let out = predict_mask(&model, &shuffled);
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(out.values()[i], a.values()[p]);
        }
    }

    #[test]
    fn model_json_round_trip_is_exact() {
        let scenes = generate_dataset(1, 5, (48, 48)).unwrap();
        let hyper = HyperParams {
            forest_trees: 3,
            lr_epochs: 20,
            mlp_epochs: 10,
            max_train_samples: 1500,
            ..Default::default()
        };
        for kind in ClassifierKind::ALL {
            let model = train_on_scenes(kind, &scenes, &hyper).unwrap();
            let back = model_from_json(&model_to_json(&model)).unwrap();
            assert_eq!(back, model, "{kind}");
            assert_eq!(back.kind(), kind);
        }
    }

    #[test]
    fn model_document_rejects_wrong_version() {
        let text = model_to_json(&Model::BandThreshold(Thresholds::empty())).replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(model_from_json(&text), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn training_errors() {
        let hyper = HyperParams::default();
        assert!(train_model(ClassifierKind::GaussianNb, &[], &hyper).is_err());
        let one = vec![PixelSample { features: [0.2; 4], truth: false }; 5];
        assert!(train_model(ClassifierKind::Mlp, &one, &hyper).is_err());
        assert!(train_model(ClassifierKind::LogisticRegression, &one, &hyper).is_err());
        assert!(PixelSample::new([0.0, 0.5, 1.0, 1.2], true).is_err());
    }

    #[test]
    fn subsampling_is_seeded_and_bounded() {
        let scenes = generate_dataset(2, 3, (40, 40)).unwrap();
        let a = training_samples(&scenes, 500, 1).unwrap();
        assert_eq!(a.len(), 500);
        assert_eq!(a, training_samples(&scenes, 500, 1).unwrap());
        assert_eq!(training_samples(&scenes, 10_000, 1).unwrap().len(), 3200);
    }

    #[test]
    fn external_mask_import() {
        let dir = tempfile::tempdir().unwrap();
        let scene = &generate_dataset(1, 2, (32, 32)).unwrap()[0];
        let path = dir.path().join("m.pgm");
        crate::raster::save_mask(scene.label().unwrap(), &path).unwrap();
        let m = import_external_mask(&path, scene).unwrap();
        let r = classification_metrics(&m, scene.label().unwrap()).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.iou), (1.0, 1.0, 1.0, 1.0));

        crate::raster::save_mask(&BinaryMask::new(31, 32), &path).unwrap();
        assert!(matches!(import_external_mask(&path, scene), Err(Error::DimensionMismatch { .. })));
    }
}
