//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runs without the libtest harness so the lines
//! always reach the terminal.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use dimest::ergodic::ShiftMeasure;
use dimest::geometry::cover_survey;
use dimest::pressure::{log_partition_sum, variational_gap_with, PressureModel, PressureOptions, VariationalOptions};
use dimest::shift::{stopping_family, Subshift, Word};
use dimest::svf::{product_spectrum, singular_values, SmallMatrix};
use dimest::systems::{chaos_game, presets, CodedSystem};
use dimest_cli::config::parse_config;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dimest-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// Runs the binary and returns the parsed report with the wall time.
fn run_cli(cmd: &str, config: &str) -> (i32, Value, Duration) {
    let out = scratch(&format!("{cmd}-{config}"));
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_dimest"))
        .args([cmd, "--config"])
        .arg(configs().join(format!("{config}.json")))
        .arg("--out")
        .arg(&out)
        .output()
        .expect("binary runs");
    let dt = t.elapsed();
    let text = std::fs::read_to_string(out.join("report.json")).unwrap_or_else(|_| "null".into());
    let _ = std::fs::remove_dir_all(&out);
    (status.status.code().unwrap_or(-1), serde_json::from_str(&text).unwrap_or(Value::Null), dt)
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

/// Report entry for a named measure.
fn by_measure<'a>(rows: &'a Value, name: &str) -> &'a Value {
    rows.as_array().and_then(|a| a.iter().find(|r| r["measure"] == name)).unwrap_or(&Value::Null)
}

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1() -> Outcome {
    let (code, r, dt) = run_cli("dim-s", "sierpinski");
    let v = num(&r["dim_s"]["value"]);
    let want = 3f64.ln() / 2f64.ln();
    check(code == 0 && (v - want).abs() <= 1e-6 && dt.as_secs_f64() < 5.0, format!("dim_s {v:.9} vs {want:.9}, {:.2} s", dt.as_secs_f64()))
}

fn c2() -> Outcome {
    let (code, r, dt) = run_cli("dim-s", "shared_diag");
    let v = num(&r["dim_s"]["value"]);
    let want = 1.0 + 1.5f64.ln() / 3f64.ln();
    check(code == 0 && (v - want).abs() <= 1e-6 && dt.as_secs_f64() < 10.0, format!("dim_s {v:.9} vs {want:.9}, {:.2} s", dt.as_secs_f64()))
}

fn c3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["sierpinski", "shared_diag", "perturbed_shared_diag"] {
        let (c1, s, _) = run_cli("dim-s", name);
        let (c2, b, dt) = run_cli("box-dim", name);
        let ds = num(&s["dim_s"]["value"]);
        let bx = num(&b["box_dim"]["value"]);
        let n = b["box_dim"]["n_points"].as_u64().unwrap_or(0);
        ok &= c1 == 0 && c2 == 0 && n >= 1_000_000 && bx <= ds + 0.1 && dt.as_secs_f64() < 60.0;
        parts.push(format!("{name}: box {bx:.4} <= {ds:.4} + 0.1 ({:.1} s)", dt.as_secs_f64()));
    }
    check(ok, parts.join("; "))
}

fn c4() -> Outcome {
    let (code, r, _) = run_cli("tn-bound", "shared_diag");
    let rows: Vec<(u64, u64, f64)> = r["tn"]
        .as_array()
        .map(|a| a.iter().map(|x| (x["n"].as_u64().unwrap_or(0), x["k"].as_u64().unwrap_or(0), num(&x["t"]))).collect())
        .unwrap_or_default();
    let mut ok = code == 0;
    let mut worst = 0.0f64;
    let mut prev = f64::INFINITY;
    for n in [5u64, 10, 20, 40] {
        let Some(&(_, _, t)) = rows.iter().find(|r| r.0 == n && r.1 == 1) else {
            return check(false, format!("missing t_n for n = {n}"));
        };
        let want = 1.0 + 1.5f64.ln() / 3f64.ln() + 16f64.ln() / (n as f64 * 3f64.ln());
        worst = worst.max((t - want).abs());
        ok &= t < prev;
        prev = t;
    }
    check(ok && worst <= 1e-6, format!("max |t_n - closed form| = {worst:.2e}, decreasing in n"))
}

fn c5() -> Outcome {
    let sys = presets::golden_mean_interval();
    let opts = PressureOptions::default();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut last = f64::NAN;
    for n in 2..=24 {
        let v = log_partition_sum(&sys, 0.0, n, &opts).map(|l| l / n as f64).unwrap_or(f64::NAN);
        // independent count: golden-mean words of length n number F(n+2)
        let (mut a, mut b) = (1u64, 2u64);
        for _ in 1..n {
            (a, b) = (b, a + b);
        }
        let exact = (b as f64).ln() / n as f64;
        monotone &= v <= prev + 1e-12 && (v - exact).abs() < 1e-9;
        prev = v;
        last = v;
    }
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    check(monotone && (last - golden).abs() <= 2e-2, format!("(1/24) log|X_24| = {last:.5}, log golden ratio {golden:.5}, non-increasing {monotone}"))
}

fn c6() -> Outcome {
    let (code, r, dt) = run_cli("theta-slope", "theta_full_shift");
    let t = num(&r["theta"]["value"]);
    let want = 3f64.ln() / 2f64.ln();
    let grid = (num(&r["theta"]["r_min"]), num(&r["theta"]["r_max"]));
    let grid_ok = (grid.0 - 2f64.powi(-18)).abs() < 1e-15 && (grid.1 - 2f64.powi(-5)).abs() < 1e-15;
    check(
        code == 0 && grid_ok && (t - want).abs() <= 0.02 && dt.as_secs_f64() < 10.0,
        format!("t {t:.5} vs {want:.5} over [{:.3e}, {:.3e}], {:.2} s", grid.0, grid.1, dt.as_secs_f64()),
    )
}

fn c7() -> Outcome {
    let (c1, l, _) = run_cli("dim-l", "diag_pair");
    let (c2, p, _) = run_cli("pack-dim", "diag_pair");
    let lu = num(&by_measure(&l["dim_l"], "uniform")["value"]);
    let pu = num(&by_measure(&p["packing"], "uniform")["value"]);
    let ls = num(&by_measure(&l["dim_l"], "skewed")["value"]);
    let ps = num(&by_measure(&p["packing"], "skewed")["value"]);
    check(
        c1 == 0 && c2 == 0 && (lu - 1.0).abs() <= 1e-6 && pu <= 1.1 && ps <= ls + 0.1,
        format!("uniform dim_L {lu:.7} pack {pu:.4} <= 1.1; (0.7, 0.3) pack {ps:.4} <= dim_L {ls:.4} + 0.1"),
    )
}

fn c8() -> Outcome {
    let (code, r, _) = run_cli("verify", "toral_repeller");
    let ds = num(&r["dim_s"]["value"]);
    let bx = num(&r["box_dim"]["value"]);
    let dl = num(&by_measure(&r["dim_l"], "uniform")["value"]);
    let pk = num(&by_measure(&r["packing"], "uniform")["value"]);
    check(
        code == 0 && (ds - 2.0).abs() <= 1e-6 && (bx - 2.0).abs() <= 0.1 && (dl - 2.0).abs() <= 1e-6 && pk <= 2.1,
        format!("dim_S* {ds:.7}, box {bx:.4}, dim_L* {dl:.7}, pack {pk:.4}"),
    )
}

fn c9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, sys) in [("sierpinski", presets::sierpinski()), ("shared_diag", presets::shared_diag())] {
        let m = ShiftMeasure::uniform_markov(sys.code_space());
        let base = match chaos_game(&sys, &m, 10_000, 60, 7) {
            Ok(b) => b,
            Err(e) => return check(false, format!("{name}: {e}")),
        };
        match cover_survey(&sys, &base, 8, 0) {
            Ok(s) => {
                ok &= s.min_fraction == 1.0 && s.max_control_fraction < 0.95;
                parts.push(format!("{name}: {} words, min {:.4}, control max {:.4}", s.words.len(), s.min_fraction, s.max_control_fraction));
            }
            Err(e) => return check(false, format!("{name}: {e}")),
        }
    }
    check(ok, parts.join("; "))
}

fn c10() -> Outcome {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs()).map(|d| d.filter_map(|e| e.ok().map(|e| e.path())).collect()).unwrap_or_default();
    entries.sort();
    let mut ok = !entries.is_empty();
    let mut parts = Vec::new();
    for path in entries {
        let src = std::fs::read_to_string(&path).unwrap_or_default();
        let cfg = match parse_config(&src, &path.display().to_string()) {
            Ok(c) => c,
            Err(e) => return check(false, e.to_string()),
        };
        let sys = &cfg.system;
        let model = match PressureModel::new(sys, &cfg.pressure_options()) {
            Ok(m) => m,
            Err(e) => return check(false, format!("{}: {e}", cfg.name)),
        };
        let s = match model.solve_dim_s(cfg.raw.solver.tol_s) {
            Ok(r) => r.s_star,
            Err(e) => return check(false, format!("{}: {e}", cfg.name)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst = f64::INFINITY;
        for i in 0..100 {
            let m = ShiftMeasure::random_markov(sys.code_space(), &mut rng);
            let opts = VariationalOptions { seed: i, ..VariationalOptions::default() };
            match variational_gap_with(sys, &model, s, &m, &opts) {
                Ok(g) => worst = worst.min(g.gap),
                Err(e) => return check(false, format!("{}: {e}", cfg.name)),
            }
        }
        ok &= worst >= -0.02;
        parts.push(format!("{} {worst:+.4}", cfg.name));
    }
    check(ok, format!("min gap over 100 measures: {}", parts.join(", ")))
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> SmallMatrix<f64> {
    loop {
        let e: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = SmallMatrix::new(d, &e).expect("valid dimension");
        if m.log_abs_det() > -20.0 {
            return m;
        }
    }
}

fn c11() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut submult_fail = 0;
    for _ in 0..10_000 {
        let d = rng.gen_range(1..=4);
        let (a, b) = (random_matrix(&mut rng, d), random_matrix(&mut rng, d));
        let s = rng.gen_range(0.0..(d as f64 + 1.0));
        let la = singular_values(&a).unwrap().log_phi(s);
        let lb = singular_values(&b).unwrap().log_phi(s);
        let lab = singular_values(&a.matmul(&b)).unwrap().log_phi(s);
        if lab > la + lb + 1e-9 * (1.0 + la.abs() + lb.abs()) {
            submult_fail += 1;
        }
    }
    let mut product_fail = 0;
    for _ in 0..2_000 {
        let d = rng.gen_range(1..=4);
        let len = rng.gen_range(1..=6);
        let mats: Vec<_> = (0..len).map(|_| random_matrix(&mut rng, d)).collect();
        let dense = mats[1..].iter().fold(mats[0], |acc, m| acc.matmul(m));
        let want = singular_values(&dense).unwrap();
        let got = product_spectrum(&mats, rng.gen_range(1..=3)).unwrap();
        // a dense SVD resolves alpha_i only to about eps * alpha_1
        let top = want.log_alpha()[0];
        let bad = got
            .log_alpha()
            .iter()
            .zip(want.log_alpha())
            .any(|(g, w)| (g - w).abs() > 1e-10 + 64.0 * f64::EPSILON * (top - w).exp());
        if bad {
            product_fail += 1;
        }
    }
    let x = Subshift::golden_mean();
    let h = [-0.4f64, -0.9];
    let fam = stopping_family(&x, |w: &Word| w.letters().iter().map(|&a| h[a]).sum(), 1e-3).unwrap();
    let sampler = ShiftMeasure::uniform_markov(&x).sampler();
    let mut partition_fail = 0;
    for _ in 0..1_000 {
        let w = sampler.word(fam.max_len() + rng.gen_range(1..20), &mut rng);
        if fam.prefixes_of(&w).count() != 1 || fam.find_prefix(&w).is_none() {
            partition_fail += 1;
        }
    }
    let dt = t.elapsed().as_secs_f64();
    check(
        submult_fail + product_fail + partition_fail == 0 && dt < 60.0,
        format!("failures: submultiplicative {submult_fail}/10000, dense product {product_fail}/2000, partition {partition_fail}/1000; {dt:.2} s"),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("self-similar dim_s", c1),
        ("self-affine dim_s", c2),
        ("box dimension below dim_s", c3),
        ("t_n ladder", c4),
        ("golden-mean entropy ladder", c5),
        ("theta slope", c6),
        ("Lyapunov and packing on the diagonal pair", c7),
        ("toral repeller", c8),
        ("cover validity", c9),
        ("variational inequality", c10),
        ("property suites", c11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {:>2} {name}: {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
