use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use plumetarget::classify::{load_model, predict_mask, save_model, train_on_scenes, ClassifierKind, HyperParams};
use plumetarget::error::{Error, Result};
use plumetarget::harness::experiment::{
    mean_timings, read_aggregate_csv, read_timings_csv, render_table, AGGREGATE_CSV, TIMINGS_CSV,
};
use plumetarget::harness::{
    emit_overlay, evaluate_trajectory, run_experiment, run_pipeline, split_indices, write_report_dir,
    ExperimentConfig, MaskSource, PipelineConfig, UtilityFields,
};
use plumetarget::morphology::{denoise_polygons, get_contours, reconstruct_mask, write_contours_csv, DenoiseConfig};
use plumetarget::planner::{compute_step_size, plan_with_step, read_trajectory_csv, write_trajectory_csv, Algorithm};
use plumetarget::raster::{
    load_dataset, load_mask, load_scene, save_dataset_manifest, save_mask, save_scene, DatasetManifest,
};
use plumetarget::synthgen::generate_dataset;

/// Plume detection and narrow-field trajectory planning on four-band scenes.
#[derive(Parser)]
#[command(name = "plumetarget", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled dataset.
    Synth {
        #[arg(long, default_value_t = 38)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a per-pixel classifier on labelled scenes.
    Train {
        #[arg(long)]
        classifier: ClassifierKind,
        /// Dataset manifest (or a single scene manifest).
        #[arg(long)]
        train_manifest: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Predict a plume mask for one scene.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        mask_out: PathBuf,
    },
    /// Merge fragments, drop small regions and fill the rest.
    Denoise {
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        denoise: DenoiseArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the kept contours as CSV.
        #[arg(long)]
        contours_out: Option<PathBuf>,
    },
    /// Plan a trajectory over a (denoised) mask.
    Plan {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        /// Width the step size is derived from; defaults to the mask width.
        #[arg(long)]
        scene_width: Option<usize>,
        #[arg(long)]
        traj_out: PathBuf,
    },
    /// Score a trajectory against a labelled scene.
    Eval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        report_out: PathBuf,
    },
    /// Classify, denoise, plan and score one scene.
    Run {
        #[arg(long)]
        scene: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        algorithm: Algorithm,
        #[command(flatten)]
        denoise: DenoiseArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train every classifier and run the full algorithm grid.
    Experiment {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report_dir: PathBuf,
        /// Use these scenes instead of synthesizing a dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 38)]
        count: usize,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, value_delimiter = ',')]
        classifiers: Option<Vec<ClassifierKind>>,
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        #[command(flatten)]
        denoise: DenoiseArgs,
    },
    /// Print the aggregate table of an experiment report directory.
    Report {
        #[arg(long)]
        report_dir: PathBuf,
    },
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.001)]
    min_area_fraction: f64,
}

impl DenoiseArgs {
    fn config(&self) -> Result<DenoiseConfig> {
        let c = DenoiseConfig {
            max_merge_iterations: self.max_iters,
            min_area_fraction: self.min_area_fraction,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Trained model document.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Mask produced by an external segmenter.
    #[arg(long)]
    external_mask: Option<PathBuf>,
    /// Use the scene's ground-truth label as the mask.
    #[arg(long)]
    oracle: bool,
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { count, seed, width, height, out } => {
            let scenes = generate_dataset(count, seed, (width, height))?;
            mkdir(&out)?;
            let mut names = Vec::with_capacity(scenes.len());
            for s in &scenes {
                save_scene(s, &out)?;
                names.push(format!("{}.json", s.id()));
            }
            let (train, test) = split_indices(count, (21, 38), seed)?;
            let pick = |idx: &[usize]| DatasetManifest { scenes: idx.iter().map(|&i| names[i].clone()).collect() };
            save_dataset_manifest(&DatasetManifest { scenes: names.clone() }, &out, "dataset.json")?;
            save_dataset_manifest(&pick(&train), &out, "train.json")?;
            save_dataset_manifest(&pick(&test), &out, "test.json")?;
            println!("wrote {count} scenes to {} ({} train, {} test)", out.display(), train.len(), test.len());
        }
        Command::Train { classifier, train_manifest, model_out, seed } => {
            let scenes = load_dataset(&train_manifest)?;
            let hyper = HyperParams { seed, ..Default::default() };
            let t = Instant::now();
            let model = train_on_scenes(classifier, &scenes, &hyper)?;
            log::info!("trained {classifier} on {} scenes in {:.3}s", scenes.len(), t.elapsed().as_secs_f64());
            save_model(&model, &model_out)?;
        }
        Command::Classify { model, scene, mask_out } => {
            let model = load_model(&model)?;
            let scene = load_scene(&scene)?;
            let mask = predict_mask(&model, &scene);
            save_mask(&mask, &mask_out)?;
            println!("{} plume pixels of {}", mask.count(), scene.width() * scene.height());
        }
        Command::Denoise { mask, denoise, out, contours_out } => {
            let config = denoise.config()?;
            let mask = load_mask(&mask)?;
            let polygons = denoise_polygons(&mask, &config);
            save_mask(&reconstruct_mask(&polygons, mask.dims())?, &out)?;
            if let Some(path) = contours_out {
                write_contours_csv(&polygons, create(&path)?)?;
            }
            println!("{} regions kept", polygons.len());
        }
        Command::Plan { mask, algorithm, scene_width, traj_out } => {
            let mask = load_mask(&mask)?;
            let width = scene_width.unwrap_or(mask.width());
            if width == 0 {
                return Err(Error::InvalidArgument("scene width must be positive".into()));
            }
            let traj = plan_with_step(algorithm, &get_contours(&mask), mask.dims(), compute_step_size(width));
            traj.validate(mask.dims())?;
            write_trajectory_csv(&traj, create(&traj_out)?)?;
            println!("{} waypoints", traj.len());
        }
        Command::Eval { scene, traj, report_out } => {
            let scene = load_scene(&scene)?;
            let (waypoints, algorithm) = read_trajectory_csv(open(&traj)?)?;
            let fields = UtilityFields::compute(&scene)?;
            let metrics = evaluate_trajectory(&waypoints, &scene, &fields)?;
            write_json(
                &report_out,
                &serde_json::json!({
                    "scene_id": scene.id(),
                    "algorithm": algorithm.map(|a| a.name()),
                    "metrics": metrics,
                }),
            )?;
            println!(
                "pixels {} plume {:.3} intensity {:.3} gradient {:.3}",
                metrics.pixels_observed, metrics.ratio_plume, metrics.mean_intensity, metrics.mean_gradient
            );
        }
        Command::Run { scene, source, algorithm, denoise, out_dir } => {
            let io_start = Instant::now();
            let scene = load_scene(&scene)?;
            let model = source.model.as_deref().map(load_model).transpose()?;
            let external = source.external_mask.as_deref().map(load_mask).transpose()?;
            let mut io_time = io_start.elapsed();
            let source = match (&model, &external) {
                (Some(m), _) => MaskSource::Model(m),
                (_, Some(m)) => MaskSource::External(m),
                _ => MaskSource::Oracle,
            };
            let config = PipelineConfig { denoise: denoise.config()? };
            let out = run_pipeline(&scene, source, algorithm, &config)?;

            let io_start = Instant::now();
            mkdir(&out_dir)?;
            let denoised = out.denoised_mask(scene.dims())?;
            if let Some(mask) = &out.mask {
                save_mask(mask, out_dir.join("mask.pgm"))?;
                save_mask(&denoised, out_dir.join("denoised.pgm"))?;
            }
            write_trajectory_csv(&out.trajectory, create(&out_dir.join("trajectory.csv"))?)?;
            write_json(&out_dir.join("report.json"), &out.report)?;
            emit_overlay(&scene, &out.trajectory.waypoints, &denoised, out_dir.join("overlay.ppm"))?;
            io_time += io_start.elapsed();
            log::info!("io {:.3}s, onboard {:.3}s", io_time.as_secs_f64(), out.report.runtime_seconds);
            let m = &out.report.metrics;
            println!(
                "{} {}: pixels {} plume {:.3} intensity {:.3} gradient {:.3} runtime {:.4}s",
                out.report.classifier,
                algorithm,
                m.pixels_observed,
                m.ratio_plume,
                m.mean_intensity,
                m.mean_gradient,
                out.report.runtime_seconds
            );
        }
        Command::Experiment {
            seed,
            report_dir,
            dataset,
            count,
            width,
            height,
            classifiers,
            algorithms,
            denoise,
        } => {
            let mut config = ExperimentConfig::new(seed);
            config.scene_count = count;
            config.width = width;
            config.height = height;
            config.pipeline.denoise = denoise.config()?;
            if let Some(c) = classifiers {
                config.classifiers = c;
            }
            if let Some(a) = algorithms {
                config.algorithms = a;
            }
            let scenes = match &dataset {
                Some(path) => load_dataset(path)?,
                None => generate_dataset(count, seed, (width, height))?,
            };
            let report = run_experiment(&scenes, &config)?;
            write_report_dir(&report, &report_dir)?;
            print!("{}", render_table(&report.aggregates, Some(&mean_timings(&report.timing_rows()))));
        }
        Command::Report { report_dir } => {
            let rows = read_aggregate_csv(report_dir.join(AGGREGATE_CSV))?;
            let timings_path = report_dir.join(TIMINGS_CSV);
            let timings = if timings_path.exists() {
                Some(mean_timings(&read_timings_csv(&timings_path)?))
            } else {
                None
            };
            print!("{}", render_table(&rows, timings.as_deref()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
