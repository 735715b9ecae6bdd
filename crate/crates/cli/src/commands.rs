//! Subcommand implementations.

use std::collections::HashMap;
use std::time::Instant;

use dimest::ergodic::{local_dims, lyapunov_dimension, lyapunov_exponents, LocalDims};
use dimest::geometry::{box_dimension, cover_survey, cover_word, cylinder_cloud, verify_cover, BoxCountSeries};
use dimest::pressure::{
    dyadic_grid, estimate_leaf_evals, theta_slope, tn_from_table, variational_gap_with, PressureModel, SpectrumTable, VariationalOptions,
};
use dimest::shift::Word;
use dimest::systems::{chaos_game, CodedSystem, DynSystem, PointCloud, ProbeSet};

use crate::config::RunConfig;
use crate::report::*;

/// Bisection tolerance used for `t_n`.
const TN_TOL: f64 = 1e-10;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    DimS,
    DimL,
    BoxDim,
    PackDim,
    TnBound,
    ThetaSlope,
    PressureCurve,
    Cover,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DimS => "dim-s",
            Command::DimL => "dim-l",
            Command::BoxDim => "box-dim",
            Command::PackDim => "pack-dim",
            Command::TnBound => "tn-bound",
            Command::ThetaSlope => "theta-slope",
            Command::PressureCurve => "pressure-curve",
            Command::Cover => "cover",
            Command::Verify => "verify",
        }
    }
}

/// Everything a run produces besides the report.
pub struct Outputs {
    pub report: Report,
    /// `(stage, milliseconds)` in execution order.
    pub timings: Vec<(String, f64)>,
    /// `(file name, contents)` of CSV series.
    pub files: Vec<(String, String)>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    series: bool,
    timings: Vec<(String, f64)>,
    files: Vec<(String, String)>,
    warnings: Vec<String>,
    clouds: HashMap<usize, PointCloud>,
    model: Option<PressureModel>,
}

fn csv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(f: F) -> String {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

impl<'a> Ctx<'a> {
    fn sys(&self) -> &'a DynSystem {
        &self.cfg.system
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t0 = Instant::now();
        let out = f(self);
        self.timings.push((stage.to_string(), t0.elapsed().as_secs_f64() * 1e3));
        out
    }

    fn warn_if_wide(&mut self, what: &str, width: f64) {
        let limit = self.cfg.raw.verify.warn_width;
        // NaN widths warn too
        if width.is_nan() || width > limit {
            self.warnings.push(format!("{what}: uncertainty {width:.3e} exceeds {limit:.3e}"));
        }
    }

    fn model(&mut self) -> dimest::Result<&PressureModel> {
        if self.model.is_none() {
            let opts = self.cfg.pressure_options();
            let sys = self.sys();
            let m = self.timed("pressure_tables", |_| PressureModel::new(sys, &opts))?;
            self.model = Some(m);
        }
        Ok(self.model.as_ref().unwrap())
    }

    fn cloud(&mut self, idx: usize) -> dimest::Result<&PointCloud> {
        if !self.clouds.contains_key(&idx) {
            let s = &self.cfg.raw.sampling;
            let (name, m) = &self.cfg.measures[idx];
            let sys = self.sys();
            let c = self.timed(&format!("chaos_game_{name}"), |_| chaos_game(sys, m, s.n_points, s.burn_in, s.seed))?;
            self.clouds.insert(idx, c);
        }
        Ok(&self.clouds[&idx])
    }

    fn dim_s(&mut self) -> dimest::Result<DimSReport> {
        let tol = self.cfg.raw.solver.tol_s;
        let r = self.model()?.solve_dim_s(tol)?;
        let n_list = self.model()?.n_list();
        if self.series {
            let model = self.model()?;
            let body = csv(|w| model.write_series_csv(r.s_star, w));
            self.files.push(("pressure_series.csv".into(), body));
        }
        let uncertainty = (r.s_bracket[1] - r.s_bracket[0]) + r.upper_root.map_or(f64::INFINITY, |u| (u - r.s_star).abs());
        self.warn_if_wide("dim_s", uncertainty);
        Ok(DimSReport {
            method: if r.exact { "pressure zero, exact cylinder suprema".into() } else { "pressure zero, probed cylinder suprema".into() },
            value: r.s_star,
            uncertainty,
            s_bracket: r.s_bracket,
            upper_root: r.upper_root,
            pressure_at_root: r.pressure_at_root,
            n_list,
            exact: r.exact,
        })
    }

    fn dim_l(&mut self) -> dimest::Result<Vec<DimLReport>> {
        let ly = self.cfg.raw.lyapunov.clone();
        let seed = self.cfg.raw.sampling.seed;
        let mut out = Vec::new();
        for (name, m) in &self.cfg.measures {
            let sys = self.sys();
            let l = self.timed(&format!("lyapunov_{name}"), |_| lyapunov_exponents(sys, m, ly.n_orbit, ly.n_samples, seed))?;
            let h = m.entropy();
            let value = lyapunov_dimension(h, &l.lambda)?;
            let mut uncertainty: f64 = 0.0;
            for sign in [-1.0, 1.0] {
                let shifted: Vec<f64> = l.lambda.iter().zip(&l.ci_half_width).map(|(x, c)| x + sign * c).collect();
                let mut sorted = shifted.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                uncertainty = uncertainty.max(match lyapunov_dimension(h, &sorted) {
                    Ok(v) => (v - value).abs(),
                    Err(_) => f64::INFINITY,
                });
            }
            self.warn_if_wide(&format!("dim_l[{name}]"), uncertainty);
            out.push(DimLReport {
                measure: name.clone(),
                method: "entropy over Lyapunov exponents, piecewise singular value function".into(),
                value,
                uncertainty,
                entropy: h,
                lambda: l.lambda,
                lambda_ci: l.ci_half_width,
            });
        }
        Ok(out)
    }

    fn box_dim(&mut self) -> dimest::Result<BoxReport> {
        let grid = self.cfg.raw.box_count.delta_grid.clone();
        let dom = self.sys().domain().clone();
        let side = dom.max.iter().zip(&dom.min).map(|(a, b)| a - b).fold(0.0, f64::max);
        let cloud = self.cloud(0)?.clone();
        let b: BoxCountSeries = self.timed("box_count", |_| box_dimension(&cloud, grid.as_deref(), &dom.min, side))?;
        let (lo, hi) = b.fit_window;
        let xs: Vec<f64> = b.entries[lo..hi].iter().map(|e| -e.0.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let dof = (xs.len() as f64 - 2.0).max(1.0);
        let uncertainty = b.residual * (xs.len() as f64 / dof).sqrt() / sxx.sqrt();
        self.warn_if_wide("box_dim", uncertainty);
        if self.series {
            self.files.push(("box_counts.csv".into(), csv(|w| b.write_csv(w))));
        }
        Ok(BoxReport {
            method: "grid occupancy counts, least squares over the fit window".into(),
            measure: self.cfg.measures[0].0.clone(),
            value: b.slope,
            uncertainty,
            residual: b.residual,
            n_points: cloud.len(),
            deltas: b.entries.iter().map(|e| e.0).collect(),
            counts: b.entries.iter().map(|e| e.1).collect(),
            fit_window: [lo, hi],
        })
    }

    fn packing(&mut self) -> dimest::Result<Vec<PackReport>> {
        let opts = self.cfg.local_options();
        let mut out = Vec::new();
        for idx in 0..self.cfg.measures.len() {
            let name = self.cfg.measures[idx].0.clone();
            let cloud = self.cloud(idx)?.clone();
            let ld: LocalDims = self.timed(&format!("local_dims_{name}"), |_| local_dims(&cloud, &opts))?;
            let uncertainty = quantile_half_width(&ld.points.iter().map(|p| p.slope).collect::<Vec<_>>(), ld.quantile);
            self.warn_if_wide(&format!("packing[{name}]"), uncertainty);
            if self.series {
                self.files.push((format!("local_dims_{name}.csv"), csv(|w| ld.write_csv(w))));
            }
            out.push(PackReport {
                measure: name,
                method: "quantile of per-point local dimension slopes".into(),
                value: ld.estimate,
                uncertainty,
                quantile: ld.quantile,
                probes: ld.points.len(),
                skipped: ld.skipped,
            });
        }
        Ok(out)
    }

    fn tn(&mut self) -> dimest::Result<Vec<TnRow>> {
        let spec = self.cfg.raw.tn.clone();
        let d = self.sys().dim();
        let ks = spec.k_values.clone().unwrap_or_else(|| (0..d).collect());
        let opts = self.cfg.pressure_options();
        let sys = self.sys();
        let probes = ProbeSet::new(sys, opts.k_probe, opts.probe_seed);
        let mut rows = Vec::new();
        for &n in &spec.n_values {
            let est = estimate_leaf_evals(sys, n, &probes);
            if est > opts.budget as f64 {
                self.warnings.push(format!("tn: n = {n} skipped, about {est:.3e} evaluations exceed the budget {}", opts.budget));
                continue;
            }
            let table = self.timed(&format!("tn_table_{n}"), |_| SpectrumTable::build(sys, n, &probes))?;
            for &k in &ks {
                let t = tn_from_table(&table, k, TN_TOL)?;
                rows.push(TnRow { n, k, t: t.t, uncertainty: TN_TOL });
            }
        }
        if self.series {
            self.files.push((
                "tn.csv".into(),
                csv(|w| {
                    use std::io::Write;
                    writeln!(w, "n,k,t")?;
                    for r in &rows {
                        writeln!(w, "{},{},{:.16e}", r.n, r.k, r.t)?;
                    }
                    Ok(())
                }),
            ));
        }
        Ok(rows)
    }

    fn theta(&mut self) -> dimest::Result<Option<ThetaReport>> {
        let Some((x, g, h)) = self.cfg.theta.clone() else {
            return Ok(None);
        };
        let spec = self.cfg.raw.theta.clone().expect("validated with theta");
        let grid = dyadic_grid(spec.r_exp_min, spec.r_exp_max);
        let th = self.timed("theta_slope", |_| theta_slope(&x, &g, &h, &grid))?;
        let fit: Vec<(f64, f64)> = th.points.iter().skip(th.dropped).map(|&(r, l)| (r.ln(), l)).collect();
        let mx = fit.iter().map(|p| p.0).sum::<f64>() / fit.len() as f64;
        let sxx: f64 = fit.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let ss: f64 = fit.iter().map(|&(x, y)| (y - th.slope * x - th.intercept).powi(2)).sum();
        let uncertainty = (ss / (fit.len() as f64 - 2.0).max(1.0)).sqrt() / sxx.sqrt();
        self.warn_if_wide("theta", uncertainty);
        if self.series {
            self.files.push((
                "theta.csv".into(),
                csv(|w| {
                    use std::io::Write;
                    writeln!(w, "r,log_theta")?;
                    for (r, l) in &th.points {
                        writeln!(w, "{r:.16e},{l:.16e}")?;
                    }
                    Ok(())
                }),
            ));
        }
        Ok(Some(ThetaReport {
            method: "least squares slope of log Theta_r against log r".into(),
            value: th.t,
            uncertainty,
            slope: th.slope,
            intercept: th.intercept,
            r_min: grid.iter().copied().fold(f64::INFINITY, f64::min),
            r_max: grid.iter().copied().fold(0.0, f64::max),
            dropped: th.dropped,
        }))
    }

    fn curve(&mut self) -> dimest::Result<Vec<CurvePoint>> {
        let c = self.cfg.raw.pressure_curve.clone();
        let hi = c.s_max.unwrap_or(self.sys().dim() as f64);
        let model = self.model()?;
        let mut pts = Vec::with_capacity(c.steps);
        for i in 0..c.steps {
            let s = c.s_min + (hi - c.s_min) * i as f64 / (c.steps - 1) as f64;
            let e = model.estimate(s)?;
            pts.push(CurvePoint { s, value: e.value, uncertainty: e.bracket_width, upper: e.upper, pn: e.pn });
        }
        if self.series {
            self.files.push((
                "pressure_curve.csv".into(),
                csv(|w| {
                    use std::io::Write;
                    writeln!(w, "s,P,upper,uncertainty")?;
                    for p in &pts {
                        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", p.s, p.value, p.upper, p.uncertainty)?;
                    }
                    Ok(())
                }),
            ));
        }
        Ok(pts)
    }

    fn cover(&mut self) -> dimest::Result<CoverReport> {
        let spec = self.cfg.raw.cover.clone();
        let sys = self.sys();
        let word = Word::new(spec.word.clone());
        let cov = self.timed("cover_word", |_| cover_word(sys, &word, spec.k))?;
        let (_, m) = &self.cfg.measures[0];
        let s = &self.cfg.raw.sampling;
        let base = chaos_game(sys, m, spec.check_points, s.burn_in, s.seed)?;
        let pts = cylinder_cloud(sys, &word, &base)?;
        let fraction = verify_cover(&cov, &pts);
        let survey = if spec.survey_len > 0 {
            let sv = self.timed("cover_survey", |_| cover_survey(sys, &base, spec.survey_len, spec.k))?;
            if self.series {
                self.files.push((
                    "cover_survey.csv".into(),
                    csv(|w| {
                        use std::io::Write;
                        writeln!(w, "word,balls,count_bound,radius,points,fraction,control_fraction")?;
                        for c in &sv.words {
                            writeln!(
                                w,
                                "{},{},{:.16e},{:.16e},{},{:.16e},{:.16e}",
                                c.word, c.balls, c.count_bound, c.radius, c.points, c.fraction, c.control_fraction
                            )?;
                        }
                        Ok(())
                    }),
                ));
            }
            Some(SurveyReport {
                max_len: sv.max_len,
                words: sv.words.len(),
                min_fraction: sv.min_fraction,
                max_control_fraction: sv.max_control_fraction,
            })
        } else {
            None
        };
        self.files.push(("cover.csv".into(), csv(|w| cov.write_csv(w))));
        Ok(CoverReport {
            word: cov.word.clone(),
            k: cov.k,
            balls: cov.len(),
            radius: cov.radius,
            count_bound: cov.certified_count_bound(),
            log_count_bound: cov.log_count_bound,
            c1: cov.log_c1.exp(),
            fraction,
            check_points: pts.len(),
            survey,
        })
    }

    fn variational(&mut self, s: f64) -> dimest::Result<Vec<VariationalRow>> {
        let ly = self.cfg.raw.lyapunov.clone();
        let opts = VariationalOptions { n_orbit: ly.n_orbit, n_samples: ly.n_samples, seed: self.cfg.raw.sampling.seed };
        self.model()?;
        let model = self.model.as_ref().unwrap();
        let mut rows = Vec::new();
        for (name, m) in &self.cfg.measures {
            let g = variational_gap_with(self.sys(), model, s, m, &opts)?;
            rows.push(VariationalRow {
                measure: name.clone(),
                s,
                gap: g.gap,
                uncertainty: g.slack,
                pressure: g.pressure,
                entropy: g.entropy,
                potential: g.potential,
            });
        }
        Ok(rows)
    }
}

/// Half-width of the distribution-free 95% interval for the `q`-quantile,
/// from the order statistics at ranks `nq -+ 1.96 sqrt(n q (1 - q))`.
fn quantile_half_width(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return f64::INFINITY;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let spread = Z95 * (n * q * (1.0 - q)).sqrt();
    let lo = (n * q - spread).floor().clamp(0.0, n - 1.0) as usize;
    let hi = (n * q + spread).ceil().clamp(0.0, n - 1.0) as usize;
    0.5 * (v[hi] - v[lo])
}

const BOX_STATEMENT: &str = "upper box dimension of the attractor <= singularity dimension";
const PACK_STATEMENT: &str = "packing dimension of the projected measure <= Lyapunov dimension";
const REP_BOX_STATEMENT: &str = "upper box dimension of the repeller <= singularity dimension of the inverse branches";
const REP_PACK_STATEMENT: &str = "packing dimension of the invariant measure <= Lyapunov dimension of the inverse branches";
const VAR_STATEMENT: &str = "pressure >= entropy + asymptotic potential";
const COVER_STATEMENT: &str = "every cylinder sample lies in the constructed cover";

fn summary(sys: &DynSystem) -> SystemSummary {
    SystemSummary {
        kind: if sys.is_repeller() { "repeller".into() } else { "ifs".into() },
        dim: sys.dim(),
        alphabet: sys.code_space().alphabet_size(),
        affine: sys.is_affine(),
        contraction: sys.contraction(),
    }
}

/// Runs one subcommand on a validated config.
pub fn execute(cmd: Command, cfg: &RunConfig, series: bool) -> dimest::Result<Outputs> {
    let mut ctx = Ctx { cfg, series, timings: Vec::new(), files: Vec::new(), warnings: Vec::new(), clouds: HashMap::new(), model: None };
    let mut report = Report {
        schema_version: crate::config::SCHEMA_VERSION,
        command: cmd.name().into(),
        config_name: cfg.name.clone(),
        seed: cfg.raw.sampling.seed,
        system: summary(&cfg.system),
        dim_s: None,
        dim_l: Vec::new(),
        tn: Vec::new(),
        box_dim: None,
        packing: Vec::new(),
        theta: None,
        pressure_curve: Vec::new(),
        cover: None,
        variational: Vec::new(),
        verdicts: Vec::new(),
        warnings: Vec::new(),
        status: Status::Ok,
    };
    let t0 = Instant::now();
    match cmd {
        Command::DimS => report.dim_s = Some(ctx.dim_s()?),
        Command::DimL => report.dim_l = ctx.dim_l()?,
        Command::BoxDim => report.box_dim = Some(ctx.box_dim()?),
        Command::PackDim => report.packing = ctx.packing()?,
        Command::TnBound => report.tn = ctx.tn()?,
        Command::ThetaSlope => {
            report.theta = ctx.theta()?;
            if report.theta.is_none() {
                return Err(dimest::Error::InvalidArgument("theta-slope needs a theta section in the config".into()));
            }
        }
        Command::PressureCurve => report.pressure_curve = ctx.curve()?,
        Command::Cover => {
            let c = ctx.cover()?;
            let tol = 0.0;
            report.verdicts.push(Verdict::check_le("cover_contains_cylinder", COVER_STATEMENT, None, 1.0 - c.fraction, 0.0, tol));
            if let Some(sv) = &c.survey {
                report.verdicts.push(Verdict::check_le("cover_survey_contains_cylinders", COVER_STATEMENT, None, 1.0 - sv.min_fraction, 0.0, tol));
            }
            report.cover = Some(c);
        }
        Command::Verify => verify(&mut ctx, &mut report)?,
    }
    ctx.timings.push(("total".into(), t0.elapsed().as_secs_f64() * 1e3));
    report.warnings = ctx.warnings;
    report.status = if report.verdicts.iter().any(|v| v.status == VerdictStatus::Fail) {
        Status::Violation
    } else if !report.warnings.is_empty() {
        Status::Warn
    } else {
        Status::Ok
    };
    Ok(Outputs { report, timings: ctx.timings, files: ctx.files })
}

fn verify(ctx: &mut Ctx<'_>, report: &mut Report) -> dimest::Result<()> {
    let v = ctx.cfg.raw.verify.clone();
    let repeller = ctx.sys().is_repeller();
    let dim_s = ctx.dim_s()?;
    let s_star = dim_s.value;
    let declared = match v.dim_s_override {
        Some(o) => {
            ctx.warnings.push(format!("dim_s overridden: computed {s_star:.6}, declared {o:.6}"));
            o
        }
        None => s_star,
    };
    let bx = ctx.box_dim()?;
    let dim_l = ctx.dim_l()?;
    let packing = ctx.packing()?;
    let variational = ctx.variational(s_star)?;

    let (box_check, pack_check, box_stmt, pack_stmt) = if repeller {
        ("repeller_box_le_dim_s", "repeller_packing_le_dim_l", REP_BOX_STATEMENT, REP_PACK_STATEMENT)
    } else {
        ("box_le_dim_s", "packing_le_dim_l", BOX_STATEMENT, PACK_STATEMENT)
    };
    let (na_box, na_pack, na_box_stmt, na_pack_stmt) = if repeller {
        ("box_le_dim_s", "packing_le_dim_l", BOX_STATEMENT, PACK_STATEMENT)
    } else {
        ("repeller_box_le_dim_s", "repeller_packing_le_dim_l", REP_BOX_STATEMENT, REP_PACK_STATEMENT)
    };
    let mut verdicts = vec![Verdict::check_le(box_check, box_stmt, None, bx.value, declared, v.tolerance)];
    for (p, l) in packing.iter().zip(&dim_l) {
        verdicts.push(Verdict::check_le(pack_check, pack_stmt, Some(&p.measure), p.value, l.value, v.tolerance));
    }
    verdicts.push(Verdict::not_applicable(na_box, na_box_stmt, v.tolerance));
    verdicts.push(Verdict::not_applicable(na_pack, na_pack_stmt, v.tolerance));
    for r in &variational {
        verdicts.push(Verdict::check_le("variational_gap_nonnegative", VAR_STATEMENT, Some(&r.measure), -r.gap, 0.0, v.variational_tolerance));
    }
    report.dim_s = Some(dim_s);
    report.box_dim = Some(bx);
    report.dim_l = dim_l;
    report.packing = packing;
    report.variational = variational;
    report.verdicts = verdicts;
    Ok(())
}
