use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::table::{estimate_leaf_evals, SpectrumTable};
use crate::systems::{CodedSystem, ProbeSet, DEFAULT_K_PROBE};

/// Default cap on stored spectra per pressure table.
pub const DEFAULT_BUDGET: u64 = 20_000_000;
/// Longest words considered when the budget allows.
pub const DEFAULT_MAX_N: usize = 64;
pub const TOL_S_EXACT: f64 = 1e-6;
pub const TOL_S_PROBED: f64 = 1e-3;
pub const TOL_P: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureOptions {
    /// Maximum number of stored spectra (words times probes) at the largest `n`.
    pub budget: u64,
    /// Explicit word lengths; chosen from the budget when absent.
    pub n_list: Option<Vec<usize>>,
    pub max_n: usize,
    /// Random tails per pool for nonlinear systems.
    pub k_probe: usize,
    pub probe_seed: u64,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions { budget: DEFAULT_BUDGET, n_list: None, max_n: DEFAULT_MAX_N, k_probe: DEFAULT_K_PROBE, probe_seed: 0 }
    }
}

/// Finite-`n` pressures and their extrapolation at one `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub s: f64,
    pub n_list: Vec<usize>,
    pub pn: Vec<f64>,
    /// Extrapolated pressure.
    pub value: f64,
    /// `min pn`; an upper bound on the pressure when suprema are exact.
    pub upper: f64,
    pub bracket_width: f64,
}

/// Aitken extrapolation of the last three terms when they are monotone,
/// otherwise the last term.
pub fn extrapolate(pn: &[f64]) -> f64 {
    let last = *pn.last().expect("non-empty sequence");
    if pn.len() < 3 {
        return last;
    }
    let (a, b, c) = (pn[pn.len() - 3], pn[pn.len() - 2], last);
    let (d1, d2) = (b - a, c - b);
    let monotone = (d1 > 0.0 && d2 > 0.0) || (d1 < 0.0 && d2 < 0.0);
    let denom = d2 - d1;
    if !monotone || denom.abs() <= 1e-14 * (1.0 + c.abs()) || d2.abs() >= d1.abs() {
        return last;
    }
    c - d2 * d2 / denom
}

/// Per-`n` pressure tables for one system, reused across many `s`.
#[derive(Clone, Debug)]
pub struct PressureModel {
    tables: Vec<SpectrumTable>,
    build_ms: Vec<f64>,
    exact: bool,
    gamma: f64,
    dim: usize,
}

/// Geometric ladder `{m, 2m, 4m}` with `4m <= top`, or `{1, .., top}` when short.
pub fn ladder(top: usize) -> Vec<usize> {
    if top >= 4 {
        let m = top / 4;
        vec![m, 2 * m, 4 * m]
    } else {
        (1..=top.max(1)).collect()
    }
}

impl PressureModel {
    pub fn new<S: CodedSystem + ?Sized>(sys: &S, opts: &PressureOptions) -> Result<Self> {
        let probes = ProbeSet::new(sys, opts.k_probe, opts.probe_seed);
        let n_list = match &opts.n_list {
            Some(list) => {
                if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) || list[0] == 0 {
                    return Err(Error::InvalidArgument("n_list must be non-empty, positive and strictly ascending".into()));
                }
                let top = *list.last().unwrap();
                let est = estimate_leaf_evals(sys, top, &probes);
                if est > opts.budget as f64 {
                    return Err(Error::BudgetExceeded { estimated: est, budget: opts.budget });
                }
                list.clone()
            }
            None => ladder(largest_feasible_n(sys, &probes, opts)?),
        };
        let mut tables = Vec::with_capacity(n_list.len());
        let mut build_ms = Vec::with_capacity(n_list.len());
        for &n in &n_list {
            let t0 = Instant::now();
            tables.push(SpectrumTable::build(sys, n, &probes)?);
            build_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        }
        Ok(PressureModel { tables, build_ms, exact: sys.is_affine(), gamma: sys.contraction(), dim: sys.dim() })
    }

    pub fn n_list(&self) -> Vec<usize> {
        self.tables.iter().map(SpectrumTable::n).collect()
    }

    pub fn tables(&self) -> &[SpectrumTable] {
        &self.tables
    }

    /// Wall time spent building each table.
    pub fn build_ms(&self) -> &[f64] {
        &self.build_ms
    }

    /// True when cylinder suprema are computed exactly (affine systems).
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contraction(&self) -> f64 {
        self.gamma
    }

    pub fn pn(&self, s: f64) -> Vec<f64> {
        self.tables.iter().map(|t| t.log_partition_sum(s) / t.n() as f64).collect()
    }

    pub fn estimate(&self, s: f64) -> Result<PressureEstimate> {
        if !(s >= 0.0) {
            return Err(Error::NegativeS(s));
        }
        let pn = self.pn(s);
        let value = extrapolate(&pn);
        let upper = pn.iter().copied().fold(f64::INFINITY, f64::min);
        let bracket_width = (pn.last().unwrap() - value).abs();
        Ok(PressureEstimate { s, n_list: self.n_list(), pn, value, upper, bracket_width })
    }

    /// CSV series `n,word_count,Pn,elapsed_ms` at `s`.
    pub fn write_series_csv<W: std::io::Write>(&self, s: f64, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,word_count,Pn,elapsed_ms")?;
        for ((t, p), ms) in self.tables.iter().zip(self.pn(s)).zip(&self.build_ms) {
            writeln!(w, "{},{:.16e},{:.16e},{:.3}", t.n(), t.log_word_count().exp(), p, ms)?;
        }
        Ok(())
    }

    /// Zero of `s -> pressure(s)` by bisection, plus the zero of the upper bound.
    pub fn solve_dim_s(&self, tol_s: Option<f64>) -> Result<DimensionSolveResult> {
        let tol_s = tol_s.unwrap_or(if self.exact { TOL_S_EXACT } else { TOL_S_PROBED });
        if !(tol_s > 0.0) {
            return Err(Error::InvalidArgument("tol_s must be positive".into()));
        }
        let value = |s: f64| self.estimate(s).map(|e| e.value).unwrap_or(f64::NAN);
        let p0 = value(0.0);
        if p0 < 0.0 {
            return Err(Error::NoSignChange { p_lo: p0 });
        }
        let main = bisect(value, 2.0 * self.dim as f64, tol_s)?;
        let upper = |s: f64| self.estimate(s).map(|e| e.upper).unwrap_or(f64::NAN);
        let conservative = bisect(upper, 2.0 * self.dim as f64, tol_s).map(|r| r.root).ok();
        let at_root = self.estimate(main.root)?;
        Ok(DimensionSolveResult {
            s_star: main.root,
            pressure_at_root: at_root.value,
            iterations: main.iterations,
            s_bracket: [main.lo, main.hi],
            n_used: *self.n_list().last().unwrap(),
            upper_root: conservative,
            bracket_width: at_root.bracket_width,
            exact: self.exact,
        })
    }
}

fn largest_feasible_n<S: CodedSystem + ?Sized>(sys: &S, probes: &ProbeSet, opts: &PressureOptions) -> Result<usize> {
    let fits = |n: usize| estimate_leaf_evals(sys, n, probes) <= opts.budget as f64;
    if !fits(1) {
        return Err(Error::BudgetExceeded { estimated: estimate_leaf_evals(sys, 1, probes), budget: opts.budget });
    }
    let mut n = 1;
    while n < opts.max_n.max(1) && fits(n + 1) {
        n += 1;
    }
    Ok(n)
}

/// Root of a decreasing function of `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionRoot {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Bisection for the zero of a non-increasing `f` with `f(0) >= 0`, starting
/// from `[0, hi]` and doubling `hi` until `f(hi) < 0`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, hi: f64, tol: f64) -> Result<BisectionRoot> {
    let mut lo = 0.0;
    let f_lo = f(lo);
    if f_lo.is_nan() {
        return Err(Error::NonFinite("pressure"));
    }
    if f_lo < 0.0 {
        return Err(Error::NoSignChange { p_lo: f_lo });
    }
    let mut hi = hi.max(tol);
    let mut grow = 0;
    while f(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NoSignChange { p_lo: f_lo });
        }
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.is_nan() {
            return Err(Error::NonFinite("pressure"));
        }
        if v >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(BisectionRoot { root: 0.5 * (lo + hi), lo, hi, iterations })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionSolveResult {
    pub s_star: f64,
    pub pressure_at_root: f64,
    pub iterations: usize,
    pub s_bracket: [f64; 2],
    pub n_used: usize,
    /// Root of `min_n P_n`, a conservative companion of `s_star`.
    pub upper_root: Option<f64>,
    /// Extrapolation gap at the root.
    pub bracket_width: f64,
    /// Whether suprema over cylinders were exact.
    pub exact: bool,
}

/// `log Lambda_n(s)` for a single `n`.
pub fn log_partition_sum<S: CodedSystem + ?Sized>(sys: &S, s: f64, n: usize, opts: &PressureOptions) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::NegativeS(s));
    }
    let probes = ProbeSet::new(sys, opts.k_probe, opts.probe_seed);
    let est = estimate_leaf_evals(sys, n, &probes);
    if est > opts.budget as f64 {
        return Err(Error::BudgetExceeded { estimated: est, budget: opts.budget });
    }
    Ok(SpectrumTable::build(sys, n, &probes)?.log_partition_sum(s))
}

/// Pressure at `s` over the given word lengths.
pub fn pressure<S: CodedSystem + ?Sized>(sys: &S, s: f64, n_list: &[usize], opts: &PressureOptions) -> Result<PressureEstimate> {
    let opts = PressureOptions { n_list: Some(n_list.to_vec()), ..opts.clone() };
    PressureModel::new(sys, &opts)?.estimate(s)
}

/// Singularity dimension: zero of the sub-additive pressure of `log phi^s`.
pub fn solve_dim_s<S: CodedSystem + ?Sized>(sys: &S, tol_s: Option<f64>, opts: &PressureOptions) -> Result<DimensionSolveResult> {
    PressureModel::new(sys, opts)?.solve_dim_s(tol_s)
}
