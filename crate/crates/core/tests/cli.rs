use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plumetarget::planner::{read_trajectory_csv, Algorithm};
use plumetarget::raster::{load_mask, DatasetManifest};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plumetarget"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset; returns the directory and the first test scene.
fn dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data");
    ok(&["synth", "--count", "6", "--seed", "3", "--width", "96", "--height", "96", "--out", s(&data)]);
    let test: DatasetManifest = serde_json::from_str(&fs::read_to_string(data.join("test.json")).unwrap()).unwrap();
    let scene = data.join(&test.scenes[0]);
    (data, scene)
}

#[test]
fn staged_commands_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let (data, scene) = dataset(dir.path());
    let p = |name: &str| dir.path().join(name);
    let all: DatasetManifest = serde_json::from_str(&fs::read_to_string(data.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(all.scenes.len(), 6);

    ok(&["train", "--classifier", "decision-tree", "--train-manifest", s(&data.join("train.json")), "--model-out", s(&p("model.json"))]);
    ok(&["classify", "--model", s(&p("model.json")), "--scene", s(&scene), "--mask-out", s(&p("raw.pgm"))]);
    ok(&["denoise", "--mask", s(&p("raw.pgm")), "--out", s(&p("den.pgm")), "--contours-out", s(&p("contours.csv"))]);
    ok(&["plan", "--mask", s(&p("den.pgm")), "--algorithm", "lawnmower-transect", "--traj-out", s(&p("traj.csv"))]);
    ok(&["eval", "--scene", s(&scene), "--traj", s(&p("traj.csv")), "--report-out", s(&p("eval.json"))]);
    ok(&[
        "run", "--scene", s(&scene), "--model", s(&p("model.json")), "--algorithm", "lawnmower-transect",
        "--out-dir", s(&p("run")),
    ]);

    assert_eq!(load_mask(p("raw.pgm")).unwrap(), load_mask(p("run/mask.pgm")).unwrap());
    assert_eq!(load_mask(p("den.pgm")).unwrap(), load_mask(p("run/denoised.pgm")).unwrap());
    let staged = read_trajectory_csv(fs::File::open(p("traj.csv")).unwrap()).unwrap();
    let whole = read_trajectory_csv(fs::File::open(p("run/trajectory.csv")).unwrap()).unwrap();
    assert_eq!(staged, whole);
    assert_eq!(staged.1, Some(Algorithm::LawnmowerTransect));

    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("eval.json")).unwrap()).unwrap();
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("run/report.json")).unwrap()).unwrap();
    for key in ["pixels_observed", "ratio_plume", "mean_intensity", "mean_gradient"] {
        assert_eq!(eval["metrics"][key], run[key], "{key}");
    }
    assert_eq!(run["classifier"], "decision-tree");
    assert!(p("run/overlay.ppm").exists());
    assert!(fs::read_to_string(p("contours.csv")).unwrap().starts_with("componentId,pointIndex,x,y"));
}

#[test]
fn run_with_oracle_and_external_masks() {
    let dir = tempfile::tempdir().unwrap();
    let (_, scene) = dataset(dir.path());
    let label = fs::read_dir(scene.parent().unwrap())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            let stem = scene.file_stem().unwrap().to_str().unwrap();
            p.file_name().unwrap().to_str().unwrap() == format!("{stem}_label.pgm")
        })
        .expect("label written next to the scene");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["run", "--scene", s(&scene), "--oracle", "--algorithm", "track-center", "--out-dir", s(&a)]);
    ok(&["run", "--scene", s(&scene), "--external-mask", s(&label), "--algorithm", "track-center", "--out-dir", s(&b)]);
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());

    ok(&["run", "--scene", s(&scene), "--oracle", "--algorithm", "straight-nadir", "--out-dir", s(&a)]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["classifier"], "N/A");
}

#[test]
fn experiment_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let table = ok(&[
        "experiment", "--seed", "5", "--count", "6", "--width", "96", "--height", "96", "--classifiers",
        "band-threshold,gaussian-nb", "--algorithms", "straight-nadir,naive-transect,track-center", "--report-dir", s(&out),
    ]);
    for f in ["detail.csv", "aggregate.csv", "timings.csv", "run_config.json", "table.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(table.contains("track-center") && table.contains("gaussian-nb"));
    let reprinted = ok(&["report", "--report-dir", s(&out)]);
    assert!(reprinted.contains("straight-nadir"));
    // 3 held-out scenes: 2 baselines + 2 classifiers x 1 algorithm, each per scene
    let rows = fs::read_to_string(out.join("detail.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 3 * (2 + 2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (data, scene) = dataset(dir.path());
    let missing = dir.path().join("nope.json");
    let p = |name: &str| dir.path().join(name);

    assert_eq!(code(&["classify", "--model", s(&missing), "--scene", s(&scene), "--mask-out", s(&p("m.pgm"))]), 2);
    assert_eq!(code(&["train", "--classifier", "svm", "--train-manifest", s(&data), "--model-out", s(&p("x"))]), 2);
    assert_eq!(code(&["denoise", "--mask", s(&scene), "--out", s(&p("d.pgm"))]), 2);
    assert_eq!(code(&["plan", "--mask", s(&missing), "--algorithm", "zigzag", "--traj-out", s(&p("t.csv"))]), 2);
    assert_eq!(code(&["experiment", "--count", "2", "--min-area-fraction", "1.5", "--report-dir", s(&p("e"))]), 2);
    assert_eq!(code(&["bogus"]), 2);

    // a trajectory that leaves the frame breaks the evaluation contract
    fs::write(p("bad.csv"), "order,x,y,algorithm,step,width\n0,5,5,track-center,1,0\n1,500,5,track-center,1,0\n").unwrap();
    assert_eq!(code(&["eval", "--scene", s(&scene), "--traj", s(&p("bad.csv")), "--report-out", s(&p("r.json"))]), 3);

    fs::write(p("empty.json"), r#"{"scenes": []}"#).unwrap();
    assert_eq!(code(&["train", "--classifier", "mlp", "--train-manifest", s(&p("empty.json")), "--model-out", s(&p("x"))]), 2);
}
