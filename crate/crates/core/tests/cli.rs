use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn fpes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpes"))
        .args(args)
        .env_remove("FPES_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// One synthetic baseline shared by the tests of this file.
fn baseline() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    let dir = DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        let out = d.path().join("base.ckpt");
        let o = fpes(&["train-base", "--synthetic", "--epochs", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        d
    });
    Box::leak(dir.path().join("base.ckpt").into_boxed_path())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn hwcost_defaults_print_the_block_sweep() {
    let o = fpes(&["hwcost"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    let get = |name: &str| rows.iter().map(|r| r[col(name)].clone()).collect::<Vec<_>>();
    assert_eq!(get("P"), ["1", "10", "100", "1000", "2000"]);
    assert_eq!(
        get("passes_per_iteration_per_image"),
        ["15700000", "1570000", "157000", "15700", "7850"]
    );
    assert_eq!(get("lut"), ["91", "910", "9100", "91000", "182000"]);
    assert_eq!(get("ff"), ["68", "680", "6800", "68000", "136000"]);
}

#[test]
fn hwcost_rejects_zero_blocks() {
    assert_eq!(code(&fpes(&["hwcost", "--P", "0"])), 2);
    assert_eq!(code(&fpes(&["hwcost", "--bogus"])), 2);
}

#[test]
fn hwcost_arrivals_emit_a_trace() {
    let d = tempfile::tempdir().unwrap();
    let arrivals = d.path().join("arrivals.txt");
    let trace = d.path().join("trace.csv");
    fs::write(&arrivals, "# seconds\n0.0000015\n0.01\n").unwrap();
    let o = fpes(&[
        "hwcost", "--P", "157000", "--M", "10", "--N", "10", "--k", "2", "--arrivals", p(&arrivals), "--trace-out",
        p(&trace),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("kind,start_s,duration_s,progress\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("inference,")).count(), 2);
    assert!(d.path().join("trace.csv.manifest.json").exists());

    fs::write(&arrivals, "1\n0.5\n").unwrap();
    assert_eq!(code(&fpes(&["hwcost", "--arrivals", p(&arrivals)])), 2);
}

#[test]
fn train_base_without_data_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("x.ckpt");
    assert_eq!(code(&fpes(&["train-base", "--out", p(&out)])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_fpes"))
        .args(["train-base", "--out", p(&out)])
        .env("FPES_DATA_DIR", d.path().join("missing"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn train_base_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a.ckpt");
    let b = d.path().join("b.ckpt");
    for out in [&a, &b] {
        let o = fpes(&["train-base", "--synthetic", "--epochs", "2", "--seed", "4", "--out", p(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest = fs::read_to_string(d.path().join("a.ckpt.manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"train-base\""));
    assert!(manifest.contains("\"seed\": 4"));
}

fn retrain(base: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["retrain", "--synthetic", "--checkpoint", p(base), "--pop", "6", "--iters", "4"];
    args.extend_from_slice(extra);
    fpes(&args)
}

#[test]
fn retrain_writes_history_and_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    let (out, hist) = (d.path().join("r.ckpt"), d.path().join("h.csv"));
    let o = retrain(baseline(), &["--out", p(&out), "--history", p(&hist)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h = fs::read_to_string(&hist).unwrap();
    let lines: Vec<&str> = h.lines().collect();
    assert_eq!(lines[0], "t,mean_loss,forward_passes");
    assert_eq!(lines.len(), 1 + 4);
    // 2000 retraining samples, N = 6
    assert!(lines[4].ends_with(",48000"));
    let manifest = fs::read_to_string(d.path().join("r.ckpt.manifest.json")).unwrap();
    assert!(manifest.contains("\"update_rounding\": \"stochastic\""), "{manifest}");
    assert!(manifest.contains("\"sampling\": \"mirrored\""));
    let again = retrain(&out, &["--update-rounding", "nearest", "--out", p(&d.path().join("r2.ckpt"))]);
    assert_eq!(code(&again), 0);
    assert_eq!(code(&retrain(baseline(), &["--precision", "fixed20.16", "--out", p(&d.path().join("r3.ckpt"))])), 2);
}

#[test]
fn retrain_config_errors() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("r.ckpt");
    assert_eq!(code(&retrain(baseline(), &["--iters", "0", "--out", p(&out)])), 2);
    assert_eq!(code(&retrain(baseline(), &["--layer", "7", "--out", p(&out)])), 2);
    assert_eq!(code(&retrain(baseline(), &["--precision", "float32", "--noise", "lfsr-clt", "--out", p(&out)])), 2);
    assert_eq!(code(&retrain(&d.path().join("none.ckpt"), &["--out", p(&out)])), 2);
    assert!(!out.exists());
}

#[test]
fn corrupt_checkpoint_is_a_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.ckpt");
    fs::write(&bad, b"not a checkpoint").unwrap();
    assert_eq!(code(&retrain(&bad, &["--out", p(&d.path().join("r.ckpt"))])), 1);
}

#[test]
fn retrain_resume_and_workers_are_bit_identical() {
    let d = tempfile::tempdir().unwrap();
    let path = |n: &str| -> PathBuf { d.path().join(n) };
    let fixed = ["--precision", "fixed12.8"];
    let full = retrain(baseline(), &[&fixed[..], &["--out", p(&path("full.ckpt"))]].concat());
    assert_eq!(code(&full), 0);
    let wide = retrain(baseline(), &[&fixed[..], &["--workers", "4", "--out", p(&path("wide.ckpt"))]].concat());
    assert_eq!(code(&wide), 0);
    let first = retrain(
        baseline(),
        &[&fixed[..], &["--suspend-at", "2", "--state-out", p(&path("s.bin"))]].concat(),
    );
    assert_eq!(code(&first), 0);
    assert!(!path("resumed.ckpt").exists());
    let second = retrain(
        baseline(),
        &[&fixed[..], &["--resume-state", p(&path("s.bin")), "--out", p(&path("resumed.ckpt"))]].concat(),
    );
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    let full = fs::read(path("full.ckpt")).unwrap();
    assert_eq!(full, fs::read(path("wide.ckpt")).unwrap());
    assert_eq!(full, fs::read(path("resumed.ckpt")).unwrap());

    // a state from another seed does not resume this run
    let other = retrain(
        baseline(),
        &[&fixed[..], &["--seed", "9", "--resume-state", p(&path("s.bin")), "--out", p(&path("x.ckpt"))]].concat(),
    );
    assert_eq!(code(&other), 2);
}

#[test]
fn experiment_report_rows() {
    let d = tempfile::tempdir().unwrap();
    let run = |out: &Path| {
        fpes(&[
            "experiment",
            "--synthetic",
            "--checkpoint",
            p(baseline()),
            "--pop",
            "4",
            "--iters",
            "2",
            "--retrain-samples",
            "200",
            "--noise-levels",
            "0,0.5",
            "--precisions",
            "float32,fixed12.8",
            "--seeds",
            "1,2",
            "--out",
            p(out),
        ])
    };
    let (a, b) = (d.path().join("a.csv"), d.path().join("b.csv"));
    assert_eq!(code(&run(&a)), 0);
    assert_eq!(code(&run(&b)), 0);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.starts_with("0,float32,2,")));
}
