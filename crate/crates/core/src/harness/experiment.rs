//! The classifier × algorithm grid over held-out scenes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::TrajectoryMetrics;
use super::fields::UtilityFields;
use super::pipeline::{run_pipeline_with_fields, MaskSource, PipelineConfig, RunReport, NO_CLASSIFIER};
use crate::classify::{train_on_scenes, ClassifierKind, HyperParams, Model};
use crate::error::{Error, Result};
use crate::planner::Algorithm;
use crate::raster::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Scenes to synthesize when no dataset is supplied.
    pub scene_count: usize,
    pub width: usize,
    pub height: usize,
    /// Training share as `numerator / denominator`, rounded to whole scenes.
    pub train_share: (usize, usize),
    pub classifiers: Vec<ClassifierKind>,
    pub algorithms: Vec<Algorithm>,
    pub hyper: HyperParams,
    pub pipeline: PipelineConfig,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            scene_count: 38,
            width: 256,
            height: 256,
            train_share: (21, 38),
            classifiers: ClassifierKind::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            hyper: HyperParams { seed, ..Default::default() },
            pipeline: PipelineConfig::default(),
        }
    }
}

/// Seeded shuffle of scene indices, then the first `round(n * num / den)`
/// go to training. Both halves come back sorted.
pub fn split_indices(n: usize, share: (usize, usize), seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if share.1 == 0 || share.0 > share.1 {
        return Err(Error::InvalidArgument(format!("bad train share {}/{}", share.0, share.1)));
    }
    let n_train = (2 * n * share.0 + share.1) / (2 * share.1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub classifier: String,
    pub algorithm: Algorithm,
    pub scenes: usize,
    pub pixels_observed: f64,
    pub distinct_pixels: f64,
    pub ratio_plume: f64,
    pub mean_intensity: f64,
    pub mean_gradient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub train_scenes: Vec<String>,
    pub test_scenes: Vec<String>,
    pub details: Vec<RunReport>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn aggregate(&self, classifier: &str, algorithm: Algorithm) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|r| r.classifier == classifier && r.algorithm == algorithm)
    }

    /// The classifier whose rows score the highest plume ratio under
    /// `algorithm`; earlier classifiers win ties.
    pub fn best_classifier(&self, algorithm: Algorithm) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .filter(|r| r.algorithm == algorithm && r.classifier != NO_CLASSIFIER)
            .fold(None, |best: Option<&AggregateRow>, r| match best {
                Some(b) if b.ratio_plume >= r.ratio_plume => Some(b),
                _ => Some(r),
            })
    }

    pub fn timing_rows(&self) -> Vec<TimingCsvRow> {
        self.details
            .iter()
            .map(|r| TimingCsvRow {
                scene_id: r.scene_id.clone(),
                classifier: r.classifier.clone(),
                algorithm: r.algorithm,
                runtime_seconds: r.runtime_seconds,
            })
            .collect()
    }
}

/// Means of consecutive detail rows sharing a (classifier, algorithm) cell.
pub fn aggregate(details: &[RunReport]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    let mut sums: Vec<[f64; 5]> = Vec::new();
    for d in details {
        let same = out
            .last()
            .is_some_and(|a| a.classifier == d.classifier && a.algorithm == d.algorithm);
        if !same {
            out.push(AggregateRow {
                classifier: d.classifier.clone(),
                algorithm: d.algorithm,
                scenes: 0,
                pixels_observed: 0.0,
                distinct_pixels: 0.0,
                ratio_plume: 0.0,
                mean_intensity: 0.0,
                mean_gradient: 0.0,
            });
            sums.push([0.0; 5]);
        }
        let m = &d.metrics;
        let s = sums.last_mut().unwrap();
        s[0] += m.pixels_observed as f64;
        s[1] += m.distinct_pixels as f64;
        s[2] += m.ratio_plume;
        s[3] += m.mean_intensity;
        s[4] += m.mean_gradient;
        out.last_mut().unwrap().scenes += 1;
    }
    for (a, s) in out.iter_mut().zip(sums) {
        let n = a.scenes as f64;
        a.pixels_observed = s[0] / n;
        a.distinct_pixels = s[1] / n;
        a.ratio_plume = s[2] / n;
        a.mean_intensity = s[3] / n;
        a.mean_gradient = s[4] / n;
    }
    out
}

/// Splits `scenes`, trains every classifier on the training share and runs
/// the grid on the held-out share. Baselines run once per scene.
pub fn run_experiment(scenes: &[Scene], config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.pipeline.denoise.validate()?;
    let (train_idx, test_idx) = split_indices(scenes.len(), config.train_share, config.seed)?;
    if test_idx.is_empty() {
        return Err(Error::InvalidArgument("experiment needs at least one test scene".into()));
    }
    let train: Vec<Scene> = train_idx.iter().map(|&i| scenes[i].clone()).collect();
    let test: Vec<&Scene> = test_idx.iter().map(|&i| &scenes[i]).collect();
    let needs_models = config.algorithms.iter().any(|a| !a.is_baseline());
    if needs_models && !config.classifiers.is_empty() && train.is_empty() {
        return Err(Error::InvalidArgument("experiment needs at least one training scene".into()));
    }

    let models: Vec<Model> = if needs_models {
        config
            .classifiers
            .par_iter()
            .map(|&k| {
                log::info!("training {k} on {} scenes", train.len());
                train_on_scenes(k, &train, &config.hyper)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let fields: Vec<UtilityFields> = test
        .par_iter()
        .map(|s| UtilityFields::compute(s))
        .collect::<Result<_>>()?;

    // (model index or None for baselines, algorithm, test scene index)
    let mut cells: Vec<(Option<usize>, Algorithm, usize)> = Vec::new();
    for &a in config.algorithms.iter().filter(|a| a.is_baseline()) {
        cells.extend((0..test.len()).map(|s| (None, a, s)));
    }
    for m in 0..models.len() {
        for &a in config.algorithms.iter().filter(|a| !a.is_baseline()) {
            cells.extend((0..test.len()).map(|s| (Some(m), a, s)));
        }
    }

    let details = cells
        .par_iter()
        .map(|&(m, a, s)| {
            let source = m.map_or(MaskSource::Oracle, |m| MaskSource::Model(&models[m]));
            run_pipeline_with_fields(test[s], &fields[s], source, a, &config.pipeline).map(|o| o.report)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        config: config.clone(),
        train_scenes: train.iter().map(|s| s.id().to_string()).collect(),
        test_scenes: test.iter().map(|s| s.id().to_string()).collect(),
        aggregates: aggregate(&details),
        details,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetailCsvRow {
    pub scene_id: String,
    pub classifier: String,
    pub algorithm: Algorithm,
    pub pixels_observed: usize,
    pub distinct_pixels: usize,
    pub ratio_plume: f64,
    pub mean_intensity: f64,
    pub mean_gradient: f64,
    pub degenerate: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TimingCsvRow {
    pub scene_id: String,
    pub classifier: String,
    pub algorithm: Algorithm,
    pub runtime_seconds: f64,
}

impl From<&RunReport> for DetailCsvRow {
    fn from(r: &RunReport) -> Self {
        let TrajectoryMetrics {
            pixels_observed,
            distinct_pixels,
            ratio_plume,
            mean_intensity,
            mean_gradient,
            degenerate,
        } = r.metrics;
        Self {
            scene_id: r.scene_id.clone(),
            classifier: r.classifier.clone(),
            algorithm: r.algorithm,
            pixels_observed,
            distinct_pixels,
            ratio_plume,
            mean_intensity,
            mean_gradient,
            degenerate,
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const DETAIL_CSV: &str = "detail.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const TIMINGS_CSV: &str = "timings.csv";
pub const RUN_CONFIG_JSON: &str = "run_config.json";
pub const TABLE_TXT: &str = "table.txt";

#[derive(Serialize)]
struct RunConfigDoc<'a> {
    config: &'a ExperimentConfig,
    train_scenes: &'a [String],
    test_scenes: &'a [String],
}

/// Writes the report files. Everything except `timings.csv` is a pure
/// function of the inputs and seed.
pub fn write_report_dir(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join(DETAIL_CSV), report.details.iter().map(DetailCsvRow::from))?;
    write_csv(&dir.join(AGGREGATE_CSV), &report.aggregates)?;
    write_csv(&dir.join(TIMINGS_CSV), report.timing_rows())?;
    let doc = RunConfigDoc {
        config: &report.config,
        train_scenes: &report.train_scenes,
        test_scenes: &report.test_scenes,
    };
    let json = serde_json::to_string_pretty(&doc).expect("config serializes");
    let path = dir.join(RUN_CONFIG_JSON);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    let path = dir.join(TABLE_TXT);
    fs::write(&path, render_table(&report.aggregates, None)).map_err(|e| Error::io(&path, e))
}

pub fn read_aggregate_csv(path: impl AsRef<Path>) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_detail_csv(path: impl AsRef<Path>) -> Result<Vec<DetailCsvRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_timings_csv(path: impl AsRef<Path>) -> Result<Vec<TimingCsvRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Mean runtime per (classifier, algorithm), in first-seen order.
pub fn mean_timings(rows: &[TimingCsvRow]) -> Vec<(String, Algorithm, f64)> {
    let mut out: Vec<(String, Algorithm, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.0 == r.classifier && o.1 == r.algorithm) {
            Some(o) => {
                o.2 += r.runtime_seconds;
                o.3 += 1;
            }
            None => out.push((r.classifier.clone(), r.algorithm, r.runtime_seconds, 1)),
        }
    }
    out.into_iter().map(|(c, a, s, n)| (c, a, s / n as f64)).collect()
}

/// Fixed-width text table of the aggregate rows, with a runtime column when
/// timings are given.
pub fn render_table(rows: &[AggregateRow], runtimes: Option<&[(String, Algorithm, f64)]>) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{:<20} {:<19} {:>6} {:>10} {:>8} {:>9} {:>9}",
        "classifier", "algorithm", "scenes", "pixels", "plume", "intensity", "gradient"
    );
    if runtimes.is_some() {
        let _ = write!(s, " {:>11}", "runtime (s)");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{:<20} {:<19} {:>6} {:>10.3} {:>8.3} {:>9.3} {:>9.3}",
            r.classifier,
            r.algorithm.name(),
            r.scenes,
            r.pixels_observed,
            r.ratio_plume,
            r.mean_intensity,
            r.mean_gradient
        );
        if let Some(t) = runtimes {
            match t.iter().find(|t| t.0 == r.classifier && t.1 == r.algorithm) {
                Some(t) => {
                    let _ = write!(s, " {:>11.4}", t.2);
                }
                None => {
                    let _ = write!(s, " {:>11}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::generate_dataset;

    #[test]
    fn split_proportions() {
        let (tr, te) = split_indices(38, (21, 38), 3).unwrap();
        assert_eq!((tr.len(), te.len()), (21, 17));
        let (tr, te) = split_indices(45, (21, 38), 3).unwrap();
        assert_eq!((tr.len(), te.len()), (25, 20));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..45).collect::<Vec<_>>());
        assert_eq!(split_indices(45, (21, 38), 3).unwrap().0, tr);
    }

    #[test]
    fn one_cell_grid() {
        let scenes = generate_dataset(4, 9, (64, 64)).unwrap();
        let mut config = ExperimentConfig::new(9);
        config.classifiers = vec![ClassifierKind::BandThreshold];
        config.algorithms = vec![Algorithm::TrackCenter];
        config.train_share = (1, 2);
        let report = run_experiment(&scenes, &config).unwrap();
        assert_eq!(report.aggregates.len(), 1);
        assert_eq!(report.details.len(), 2);
        let a = &report.aggregates[0];
        let mean = report.details.iter().map(|d| d.metrics.ratio_plume).sum::<f64>() / 2.0;
        assert!((a.ratio_plume - mean).abs() < 1e-12);
    }

    #[test]
    fn empty_test_split_rejected() {
        let scenes = generate_dataset(2, 9, (32, 32)).unwrap();
        let mut config = ExperimentConfig::new(1);
        config.train_share = (1, 1);
        assert!(run_experiment(&scenes, &config).is_err());
    }

    #[test]
    fn table_renders_every_row() {
        let rows = vec![AggregateRow {
            classifier: "N/A".into(),
            algorithm: Algorithm::StraightNadir,
            scenes: 3,
            pixels_observed: 26.0,
            distinct_pixels: 26.0,
            ratio_plume: 0.08,
            mean_intensity: 0.05,
            mean_gradient: 0.01,
        }];
        let t = render_table(&rows, None);
        assert_eq!(t.lines().count(), 2);
        assert!(t.contains("straight-nadir"));
        let t = render_table(&rows, Some(&[("N/A".into(), Algorithm::StraightNadir, 0.5)]));
        assert!(t.contains("0.5000"));
    }
}
