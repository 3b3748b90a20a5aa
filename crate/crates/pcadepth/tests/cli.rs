use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pcadepth::config::{ConfigOverrides, RunConfig};
use pcadepth::io;
use pcadepth::synth;
use pcadepth_core::{learn_bases, Sample, SparseSamples, TrainingCorpus};
use tempfile::TempDir;

fn pcadepth(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcadepth"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for name in ["a", "b"] {
        let o = pcadepth(&["synth", "--out", name, "--count", "3", "--height", "20", "--width", "24", "--seed", "11"], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for i in 0..3 {
        for f in [synth::depth_file(Path::new(""), i), synth::colour_file(Path::new(""), i)] {
            let a = fs::read(dir.path().join("a").join(&f)).unwrap();
            let b = fs::read(dir.path().join("b").join(&f)).unwrap();
            assert_eq!(a, b, "{f:?}");
        }
        let d = io::read_depth(&synth::depth_file(&dir.path().join("a"), i)).unwrap();
        assert!(d.is_fully_valid());
    }
}

#[test]
fn synth_count_zero_fails() {
    let dir = TempDir::new().unwrap();
    let o = pcadepth(&["synth", "--out", "c", "--count", "0"], dir.path());
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("count = 0"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&pcadepth(&["nonsense"], dir.path())), 1);
    assert_eq!(code(&pcadepth(&["complete", "--basis", "b.bin", "--out", "x.png"], dir.path())), 1);
    assert_eq!(code(&pcadepth(&["--help"], dir.path())), 0);
}

/// Exactly spanned scene: a basis from the span corpus, plus 80 exact samples
/// of one of its maps in CSV.
fn spanned_setup(dir: &Path) -> Vec<f64> {
    let maps = synth::span_corpus(12, 16, 20, 5).unwrap();
    let truth = maps[3].values().to_vec();
    let basis = learn_bases(&TrainingCorpus::new(maps).unwrap(), 6).unwrap();
    io::write_basis(&dir.join("basis.bin"), &basis).unwrap();
    let entries = (0..80)
        .map(|i| {
            let p = (i * 37) % 320;
            Sample { row: p / 20, col: p % 20, depth: truth[p] }
        })
        .collect();
    io::write_samples_csv(&dir.join("s.csv"), &SparseSamples::new(16, 20, entries).unwrap()).unwrap();
    let colour = synth::scene(16, 20, 1).unwrap().colour;
    io::write_ppm(&dir.join("c.ppm"), &colour).unwrap();
    truth
}

#[test]
fn pca_on_spanned_scene_has_tiny_residual() {
    let dir = TempDir::new().unwrap();
    let truth = spanned_setup(dir.path());
    let o = pcadepth(&["complete", "--basis", "basis.bin", "--samples", "s.csv", "--method", "pca", "--out", "p.pfm"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let side = json(&dir.path().join("p.pfm.json"));
    assert!(side["residual_norm"].as_f64().unwrap() <= 1e-6, "{side}");
    assert_eq!(side["rank"], 6);
    let out = io::read_pfm(&dir.path().join("p.pfm")).unwrap();
    for (a, b) in out.values().iter().zip(&truth) {
        assert!((a - b).abs() <= 1e-5 * b);
    }
}

#[test]
fn guided_penalty_limit_matches_pca() {
    let dir = TempDir::new().unwrap();
    spanned_setup(dir.path());
    let base = ["complete", "--basis", "basis.bin", "--samples", "s.csv", "--colour", "c.ppm"];
    let o = pcadepth(&[&base[..], &["--method", "pca", "--out", "p.pfm"]].concat(), dir.path());
    assert_eq!(code(&o), 0);
    // At gamma = 1e6 rounding alone puts the joint residual near 1e-8.
    let o = pcadepth(
        &[&base[..], &["--method", "guided", "--lambda", "0", "--gamma", "1e6", "--cg-tol", "1e-6", "--out", "g.pfm"]].concat(),
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = io::read_pfm(&dir.path().join("p.pfm")).unwrap();
    let g = io::read_pfm(&dir.path().join("g.pfm")).unwrap();
    for (a, b) in g.values().iter().zip(p.values()) {
        assert!((a - b).abs() <= 1e-3 * b.abs());
    }
}

#[test]
fn guided_without_colour_is_usage_error() {
    let dir = TempDir::new().unwrap();
    spanned_setup(dir.path());
    let o = pcadepth(&["complete", "--basis", "basis.bin", "--samples", "s.csv", "--method", "guided", "--out", "g.png"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--colour"));
    assert!(!dir.path().join("g.png").exists());
}

#[test]
fn resolution_mismatch_is_data_error() {
    let dir = TempDir::new().unwrap();
    spanned_setup(dir.path());
    io::write_ppm(&dir.path().join("small.ppm"), &synth::scene(8, 8, 1).unwrap().colour).unwrap();
    let o = pcadepth(&["complete", "--basis", "basis.bin", "--samples", "s.csv", "--colour", "small.ppm", "--out", "g.png"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution mismatch"));

    fs::write(dir.path().join("bad.csv"), "row,col,depth\n0,0,1\n0,0,2\n").unwrap();
    let o = pcadepth(&["complete", "--basis", "basis.bin", "--samples", "bad.csv", "--method", "pca", "--out", "g.png"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn convergence_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    spanned_setup(dir.path());
    let o = pcadepth(
        &["complete", "--basis", "basis.bin", "--samples", "s.csv", "--colour", "c.ppm", "--cg-max-iters", "1", "--out", "g.pfm"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    assert_eq!(json(&dir.path().join("g.pfm.json"))["converged"], false);
}

#[test]
fn config_file_precedence_and_replay() {
    let dir = TempDir::new().unwrap();
    spanned_setup(dir.path());
    fs::write(dir.path().join("run.toml"), "lambda = 2.0\ngamma = 0.5\nsigma_i = 0.1\n").unwrap();
    let args = ["complete", "--basis", "basis.bin", "--samples", "s.csv", "--colour", "c.ppm", "--config", "run.toml", "--gamma", "0.25", "--out", "a.pfm"];
    assert_eq!(code(&pcadepth(&args, dir.path())), 0);
    let side = json(&dir.path().join("a.pfm.json"));
    assert_eq!(side["config"]["lambda"], 2.0);
    assert_eq!(side["config"]["gamma"], 0.25);
    assert_eq!(side["config"]["sigma_i"], 0.1);
    assert_eq!(side["config"]["window_radius"], 4);

    // The echoed configuration alone reproduces the output byte for byte.
    let echoed: RunConfig = serde_json::from_value(side["config"].clone()).unwrap();
    let text = echoed.to_toml();
    ConfigOverrides::from_toml(&text, Path::new("echo.toml")).unwrap();
    fs::write(dir.path().join("echo.toml"), text).unwrap();
    let replay = ["complete", "--basis", "basis.bin", "--samples", "s.csv", "--colour", "c.ppm", "--config", "echo.toml", "--out", "b.pfm"];
    assert_eq!(code(&pcadepth(&replay, dir.path())), 0);
    assert_eq!(fs::read(dir.path().join("a.pfm")).unwrap(), fs::read(dir.path().join("b.pfm")).unwrap());
}

#[test]
fn train_eval_and_compare() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(&pcadepth(&["synth", "--out", "train", "--count", "12", "--height", "24", "--width", "32", "--seed", "1"], d)), 0);
    assert_eq!(code(&pcadepth(&["synth", "--out", "test", "--count", "4", "--height", "24", "--width", "32", "--seed", "2"], d)), 0);
    let o = pcadepth(&["train", "--corpus", "train", "--k", "8", "--out", "basis.bin"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("component,singular_value,cumulative_energy"));
    assert_eq!(io::read_basis(&d.join("basis.bin")).unwrap().k(), 8);
    assert_eq!(code(&pcadepth(&["train", "--corpus", "train", "--k", "40", "--out", "x.bin"], d)), 2);
    assert_eq!(code(&pcadepth(&["train", "--corpus", "train", "--out", "x.bin"], d)), 1);

    let o = pcadepth(&["complete", "--basis", "basis.bin", "--depth", "test/depth_0000.png", "--colour", "test/colour_0000.ppm", "--stride", "4", "--out", "pred.png"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = pcadepth(&["eval", "--gt", "test/depth_0000.png", "--pred", "pred.png", "--dataset", "synth", "--header"], d);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "dataset,frame,method,mre,bpr,threshold,evaluated,excluded");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..3], ["synth", "depth_0000", "pred"]);
    assert_eq!(fields[5], "3");
    assert_eq!(fields[6..], ["768", "0"]);

    let o = pcadepth(&["compare", "--basis", "basis.bin", "--frames-dir", "test", "--every", "2", "--methods", "pca,ar,guided", "--csv", "--stride", "4"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let frames: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(frames, ["0000", "0000", "0000", "0002", "0002", "0002"]);

    let o = pcadepth(&["compare", "--basis", "basis.bin", "--gt", "test/depth_0001.png", "--colour", "test/colour_0001.ppm", "--mode", "middlebury"], d);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("BPR>1(%)") && table.contains("guided"), "{table}");

    // Lower-half crop needs a basis of the cropped size.
    let o = pcadepth(&["compare", "--basis", "basis.bin", "--gt", "test/depth_0001.png", "--crop-bottom-fraction", "0.5", "--methods", "pca"], d);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&pcadepth(&["train", "--corpus", "train", "--k", "8", "--crop-bottom-fraction", "0.5", "--out", "half.bin"], d)), 0);
    let o = pcadepth(&["compare", "--basis", "half.bin", "--gt", "test/depth_0001.png", "--crop-bottom-fraction", "0.5", "--methods", "pca", "--csv"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().lines().nth(1).unwrap().ends_with(",384,0"));
}
