//! End-to-end evaluation: utility fields, the classify → denoise → plan
//! pipeline, the experiment grid and its report files.

pub mod evaluate;
pub mod experiment;
pub mod fields;
pub mod overlay;
pub mod pipeline;

pub use evaluate::{evaluate_trajectory, TrajectoryMetrics};
pub use experiment::{run_experiment, split_indices, write_report_dir, AggregateRow, ExperimentConfig, ExperimentReport};
pub use fields::{gradient_field, intensity_field, sobel5, UtilityFields};
pub use overlay::emit_overlay;
pub use pipeline::{run_pipeline, MaskSource, PipelineConfig, PipelineOutput, RunReport, NO_CLASSIFIER};
