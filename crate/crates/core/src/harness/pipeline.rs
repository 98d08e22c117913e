use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_trajectory, TrajectoryMetrics};
use super::fields::UtilityFields;
use crate::classify::{predict_mask, Model};
use crate::error::Result;
use crate::morphology::{denoise_polygons, reconstruct_mask, DenoiseConfig, PlumePolygon};
use crate::planner::{plan, Algorithm, Trajectory};
use crate::raster::{BinaryMask, Scene};

/// Classifier label used for baseline rows, which never look at a mask.
pub const NO_CLASSIFIER: &str = "N/A";

/// Where the plume mask comes from.
#[derive(Debug, Clone, Copy)]
pub enum MaskSource<'a> {
    Model(&'a Model),
    /// A mask produced elsewhere, e.g. by a segmentation network.
    External(&'a BinaryMask),
    /// The scene's own ground truth.
    Oracle,
}

impl MaskSource<'_> {
    pub fn name(&self) -> String {
        match self {
            MaskSource::Model(m) => m.kind().to_string(),
            MaskSource::External(_) => "external".into(),
            MaskSource::Oracle => "oracle".into(),
        }
    }

    pub fn mask(&self, scene: &Scene) -> Result<BinaryMask> {
        match self {
            MaskSource::Model(m) => Ok(predict_mask(m, scene)),
            MaskSource::External(mask) => {
                mask.check_dims(scene.dims())?;
                Ok((*mask).clone())
            }
            MaskSource::Oracle => Ok(scene.require_label()?.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub denoise: DenoiseConfig,
}

/// One row of the evaluation: metrics plus the onboard runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scene_id: String,
    pub classifier: String,
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub metrics: TrajectoryMetrics,
    /// Wall time of classify + denoise + plan.
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Raw classifier output; `None` for baselines.
    pub mask: Option<BinaryMask>,
    pub polygons: Vec<PlumePolygon>,
    pub trajectory: Trajectory,
    pub report: RunReport,
}

impl PipelineOutput {
    pub fn denoised_mask(&self, dims: (usize, usize)) -> Result<BinaryMask> {
        reconstruct_mask(&self.polygons, dims)
    }
}

/// Classify, denoise, plan, then score against ground truth. Baselines skip
/// the first two stages.
pub fn run_pipeline(scene: &Scene, source: MaskSource<'_>, algorithm: Algorithm, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.denoise.validate()?;
    let fields = UtilityFields::compute(scene)?;
    run_pipeline_with_fields(scene, &fields, source, algorithm, config)
}

pub(crate) fn run_pipeline_with_fields(
    scene: &Scene,
    fields: &UtilityFields,
    source: MaskSource<'_>,
    algorithm: Algorithm,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    let start = Instant::now();
    let (mask, polygons) = if algorithm.is_baseline() {
        (None, Vec::new())
    } else {
        let mask = source.mask(scene)?;
        let polygons = denoise_polygons(&mask, &config.denoise);
        (Some(mask), polygons)
    };
    let trajectory = plan(algorithm, &polygons, scene.dims());
    let runtime = start.elapsed();
    trajectory.validate(scene.dims())?;

    let metrics = evaluate_trajectory(&trajectory.waypoints, scene, fields)?;
    let classifier = if algorithm.is_baseline() { NO_CLASSIFIER.into() } else { source.name() };
    Ok(PipelineOutput {
        mask,
        polygons,
        report: RunReport {
            scene_id: scene.id().into(),
            classifier,
            algorithm,
            metrics,
            runtime_seconds: runtime.as_secs_f64(),
        },
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{filter_by_area, get_contours, merge_by_closing};
    use crate::synthgen::generate_dataset;

    #[test]
    fn pipeline_equals_staged_execution() {
        let scene = &generate_dataset(1, 11, (128, 128)).unwrap()[0];
        let config = PipelineConfig::default();
        for algorithm in Algorithm::ALL {
            let out = run_pipeline(scene, MaskSource::Oracle, algorithm, &config).unwrap();
            let label = scene.label().unwrap();
            let polygons = if algorithm.is_baseline() {
                vec![]
            } else {
                let merged = merge_by_closing(label, config.denoise.max_merge_iterations);
                filter_by_area(get_contours(&merged), config.denoise.min_area(scene.dims()))
            };
            let traj = plan(algorithm, &polygons, scene.dims());
            assert_eq!(out.trajectory, traj, "{algorithm}");
            let fields = UtilityFields::compute(scene).unwrap();
            assert_eq!(out.report.metrics, evaluate_trajectory(&traj.waypoints, scene, &fields).unwrap());
            assert!(out.report.runtime_seconds >= 0.0);
        }
    }

    #[test]
    fn external_mask_dims_checked() {
        let scene = &generate_dataset(1, 11, (64, 64)).unwrap()[0];
        let wrong = BinaryMask::new(32, 64);
        let r = run_pipeline(scene, MaskSource::External(&wrong), Algorithm::TrackCenter, &PipelineConfig::default());
        assert!(r.is_err());
    }
}
