use std::path::Path;
use std::process::{Command, Output};

fn pipeboot(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipeboot"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn pipeboot")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL_SWEEP: &str = r#"{
  "task": "denoise",
  "mode": "sweep",
  "seed": 5,
  "denoise": {
    "train_images": 4,
    "test_images": 2,
    "size": 16,
    "channels": 2,
    "sweep_depth": 2,
    "sweep_sgd": {"learning_rate": 0.03, "momentum": 0.9, "batch_size": 2, "epochs": 2, "seed": 0},
    "ratios": [0.5, 1.0]
  }
}"#;

#[test]
fn synth_then_denoise_reports_ssim() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeboot(&["synth-data", "--count", "2", "--size", "16", "--out-dir", "d"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let manifest = std::fs::read_to_string(dir.path().join("d/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 5);
    let o = pipeboot(
        &["denoise", "d/noisy_0000.pgm", "--output", "out.pgm", "--clean", "d/clean_0000.pgm"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = stdout(&o);
    let ssim: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("ssim="))
        .expect("ssim line")
        .parse()
        .unwrap();
    assert!((-1.0..=1.0).contains(&ssim));
    assert!(dir.path().join("out.pgm").exists());
}

#[test]
fn flag_misuse_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pipeboot(&["synth-data"], dir.path()).status.code(), Some(2));
    assert_eq!(pipeboot(&["denoise"], dir.path()).status.code(), Some(2));
    assert_eq!(pipeboot(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(pipeboot(&["denoise", "x.pgm", "--labels", "zero"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pipeboot(&["denoise", "nope.pgm"], dir.path()).status.code(), Some(1));
}

#[test]
fn config_schema_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"task": "denoise", "denoise": {"sigmaa": 3}}"#).unwrap();
    let o = pipeboot(&["sweep", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigmaa"));
    std::fs::write(dir.path().join("range.json"), r#"{"task": "classify", "classify": {"ratios": [2.0]}}"#).unwrap();
    assert_eq!(pipeboot(&["sweep", "range.json"], dir.path()).status.code(), Some(3));
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL_SWEEP).unwrap();
    let run = |out: &str| {
        let svg = format!("{out}.svg");
        let o = pipeboot(&["--out-dir", out, "sweep", "cfg.json", "--svg", &svg], dir.path());
        assert_eq!(o.status.code(), Some(0), "{o:?}");
        std::fs::read_to_string(dir.path().join(out).join("metrics.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "task,method,ratio_x,metric,value,flops");
    assert_eq!(lines.len(), 6, "{a}");
    assert!(std::fs::read_to_string(dir.path().join("a.svg")).unwrap().starts_with("<svg"));

    let o = pipeboot(&["report", "a/metrics.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), a);
}

#[test]
fn label_and_train_produce_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(pipeboot(&["synth-data", "--count", "2", "--size", "16", "--out-dir", "d"], p).status.code(), Some(0));
    let o = pipeboot(&["--out-dir", "l", "label", "d/manifest.csv", "--labels", "8"], p);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let o = pipeboot(&["--out-dir", "t", "train", "l/labels.csv", "--depth", "2", "--channels", "2", "--epochs", "1"], p);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("final_loss="));
    let net = pipeboot::nn::checkpoint::load_checkpoint(p.join("t/nn-skip-2.pbnn")).unwrap();
    assert_eq!(net.conv_skip_pairs(), vec![(1, 2)]);
}

#[test]
fn selftest_passes_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeboot(&["selftest"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("ok")).count(), 5);
    let o = pipeboot(&["selftest", "--corrupt-ssim"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL") && l.contains("ssim")));
}
