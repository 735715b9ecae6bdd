use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dimest_cli::report::{Report, Status, VerdictStatus};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn out_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dimest-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn dimest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimest")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dimest(&args)
}

fn report(out: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn verify_passes_on_the_gasket() {
    let out = out_dir("verify");
    let o = run("verify", &config("sierpinski"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r.status, Status::Ok);
    let dim_s = r.dim_s.unwrap().value;
    assert!((dim_s - 3f64.ln() / 2f64.ln()).abs() < 1e-6);
    let applicable: Vec<_> = r.verdicts.iter().filter(|v| v.status != VerdictStatus::NotApplicable).collect();
    assert_eq!(applicable.len(), 3);
    assert!(applicable.iter().all(|v| v.status == VerdictStatus::Pass));
    assert!(r.verdicts.iter().any(|v| v.check == "repeller_box_le_dim_s" && v.status == VerdictStatus::NotApplicable));
    assert!(out.join("timings.json").exists());
}

#[test]
fn understated_dimension_is_a_violation() {
    let out = out_dir("override");
    let o = run("verify", &config("sierpinski_override"), &out, &[]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_VIOLATION));
    let r = report(&out);
    assert_eq!(r.status, Status::Violation);
    let v = r.verdicts.iter().find(|v| v.check == "box_le_dim_s").unwrap();
    assert_eq!(v.status, VerdictStatus::Fail);
    assert!(v.slack.unwrap() < 0.0);
    assert!(!r.warnings.is_empty());
}

#[test]
fn skipped_word_lengths_warn() {
    let out = out_dir("warn");
    let o = run("tn-bound", &config("perturbed_shared_diag"), &out, &["--budget", "1000"]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_WARN));
    let r = report(&out);
    assert_eq!(r.status, Status::Warn);
    assert!(!r.tn.is_empty());
    assert!(r.tn.iter().all(|t| t.n == 4));
}

#[test]
fn config_errors_carry_a_location() {
    let dir = out_dir("badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"schema_version\": 1,\n  \"sytem\": {}\n}\n").unwrap();
    let o = run("dim-s", &bad, &dir.join("out"), &[]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_CONFIG));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(!dir.join("out").exists());

    let o = run("dim-s", &dir.join("missing.json"), &dir.join("out"), &[]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_CONFIG));
    let o = run("dim-s", &config("sierpinski"), &dir.join("out"), &["--tol-s", "0"]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_CONFIG));
    let o = run("dim-s", &config("sierpinski"), &dir.join("out"), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_CONFIG));
    let o = dimest(&["dim-s", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(dimest_cli::EXIT_CONFIG));
}

#[test]
fn reports_do_not_depend_on_threads() {
    let a = out_dir("threads1");
    let b = out_dir("threads2");
    assert_eq!(run("box-dim", &config("shared_diag"), &a, &["--threads", "1", "--series"]).status.code(), Some(0));
    assert_eq!(run("box-dim", &config("shared_diag"), &b, &["--threads", "2", "--series"]).status.code(), Some(0));
    for f in ["report.json", "box_counts.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn seed_flag_reaches_the_sampler() {
    let a = out_dir("seed1");
    let b = out_dir("seed2");
    run("box-dim", &config("shared_diag"), &a, &["--seed", "3"]);
    run("box-dim", &config("shared_diag"), &b, &["--seed", "4"]);
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(ra.seed, 3);
    assert_eq!(rb.seed, 4);
    assert_ne!(ra.box_dim.unwrap().residual, rb.box_dim.unwrap().residual);
}

#[test]
fn series_files_have_headers() {
    let out = out_dir("series");
    assert_eq!(run("dim-s", &config("shared_diag"), &out, &["--series"]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("pressure_series.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,word_count,Pn,elapsed_ms"));
    assert!(csv.lines().count() > 2);

    let out = out_dir("cover");
    assert_eq!(run("cover", &config("sierpinski"), &out, &[]).status.code(), Some(0));
    let r = report(&out);
    let c = r.cover.unwrap();
    assert_eq!(c.fraction, 1.0);
    assert_eq!(c.word.letters(), &[0, 2, 1, 1, 2]);
    let csv = std::fs::read_to_string(out.join("cover.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x0,x1,radius"));
    assert_eq!(csv.lines().count(), c.balls + 1);
}

#[test]
fn theta_and_curve() {
    let out = out_dir("theta");
    assert_eq!(run("theta-slope", &config("theta_full_shift"), &out, &[]).status.code(), Some(0));
    let t = report(&out).theta.unwrap();
    assert!((t.value - 3f64.ln() / 2f64.ln()).abs() < 0.02);

    let out = out_dir("curve");
    assert_eq!(run("pressure-curve", &config("sierpinski"), &out, &[]).status.code(), Some(0));
    let curve = report(&out).pressure_curve;
    assert!(curve.windows(2).all(|w| w[1].value < w[0].value));
    assert!((curve[0].value - 3f64.ln()).abs() < 1e-9);

    let out = out_dir("theta-missing");
    assert_eq!(run("theta-slope", &config("sierpinski"), &out, &[]).status.code(), Some(dimest_cli::EXIT_FAILURE));
}
