use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::estimate::{bisect, PressureOptions};
use crate::pressure::lse::LogSumExp;
use crate::pressure::table::{estimate_leaf_evals, SpectrumTable};
use crate::shift::Subshift;
use crate::svf::log_phi_sorted;
use crate::systems::{CodedSystem, ProbeSet};

/// Zero of the additive pressure of `log G_n + t log H_n` on the `n`-block shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TnBound {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub log_c: f64,
    pub iterations: usize,
}

/// `log((2d)^d)`, the covering constant for ellipsoid images of balls.
pub fn log_cover_constant(d: usize) -> f64 {
    d as f64 * (2.0 * d as f64).ln()
}

/// `t_n` from a prebuilt table at level `n`. Each word contributes
/// `C phi^k / alpha_{k+1}^k * alpha_{k+1}^t` of its product differential.
pub fn tn_from_table(table: &SpectrumTable, k: usize, tol: f64) -> Result<TnBound> {
    let d = table.dim();
    if k >= d {
        return Err(Error::InvalidArgument(format!("k = {k} must be below the dimension {d}")));
    }
    let log_c = log_cover_constant(d);
    let f = |t: f64| {
        table.reduce(|l| {
            let h = l[k];
            log_c + log_phi_sorted(l, k as f64) - k as f64 * h + t * h
        })
    };
    let r = bisect(f, 2.0 * d as f64, tol)?;
    Ok(TnBound { n: table.n(), k, t: r.root, log_c, iterations: r.iterations })
}

/// `t_n` for one word length and one `k`.
pub fn solve_tn<S: CodedSystem + ?Sized>(sys: &S, n: usize, k: usize, opts: &PressureOptions) -> Result<TnBound> {
    let probes = ProbeSet::new(sys, opts.k_probe, opts.probe_seed);
    let est = estimate_leaf_evals(sys, n, &probes);
    if est > opts.budget as f64 {
        return Err(Error::BudgetExceeded { estimated: est, budget: opts.budget });
    }
    let table = SpectrumTable::build(sys, n, &probes)?;
    tn_from_table(&table, k, 1e-10)
}

/// Slope fit of `log Theta_r` against `log r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSlope {
    /// `-slope`, the exponent `t` with `Theta_r ~ r^{-t}`.
    pub t: f64,
    pub slope: f64,
    pub intercept: f64,
    /// `(r, log Theta_r)` for every grid value, including dropped ones.
    pub points: Vec<(f64, f64)>,
    /// Number of largest `r` values left out of the fit.
    pub dropped: usize,
}

/// Symbolwise potentials: `g[a]` and `h[a]` depend on the first letter only.
fn check_potentials(x: &Subshift, g: &[f64], h: &[f64]) -> Result<()> {
    let ell = x.alphabet_size();
    if g.len() != ell || h.len() != ell {
        return Err(Error::DimensionMismatch { expected: ell, got: if g.len() != ell { g.len() } else { h.len() } });
    }
    if g.iter().chain(h).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("potential"));
    }
    if let Some(a) = h.iter().position(|&v| v >= 0.0) {
        return Err(Error::NonContractiveH(vec![a]));
    }
    Ok(())
}

/// `log Theta_r`, the log of the sum of `exp(S_|I| g)` over the stopping
/// family `{I : S_|I| h < log r <= S_{|I|-1} h}`.
///
/// Words sharing their last letter and remaining budget `S h - log r` have
/// identical continuations, so sums are memoized on that pair instead of
/// listing the family.
pub fn log_theta(x: &Subshift, g: &[f64], h: &[f64], r: f64) -> Result<f64> {
    check_potentials(x, g, h)?;
    let r0 = h.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
    if !(r > 0.0 && r < r0) {
        return Err(Error::InvalidArgument(format!("r = {r} must lie in (0, {r0})")));
    }
    let mut memo: HashMap<(usize, u64), f64> = HashMap::new();
    let root = -r.ln();
    let mut total = LogSumExp::new();
    for a in 0..x.alphabet_size() {
        total.add(g[a] + continuation(x, g, h, a, root + h[a], &mut memo));
    }
    Ok(total.value())
}

/// Log-sum over stopped extensions of a word ending in `last` with
/// remaining budget `rem`; zero (one empty extension) once `rem < 0`.
fn continuation(x: &Subshift, g: &[f64], h: &[f64], last: usize, rem: f64, memo: &mut HashMap<(usize, u64), f64>) -> f64 {
    if rem < 0.0 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(last, rem.to_bits())) {
        return v;
    }
    let mut acc = LogSumExp::new();
    for b in 0..x.alphabet_size() {
        if x.allows(last, b) {
            acc.add(g[b] + continuation(x, g, h, b, rem + h[b], memo));
        }
    }
    let v = acc.value();
    memo.insert((last, rem.to_bits()), v);
    v
}

/// Least-squares slope of `log Theta_r` against `log r`, leaving out the two
/// largest `r` values.
pub fn theta_slope(x: &Subshift, g: &[f64], h: &[f64], r_grid: &[f64]) -> Result<ThetaSlope> {
    const DROP: usize = 2;
    let mut rs = r_grid.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    if rs.len() < DROP + 2 {
        return Err(Error::InvalidArgument(format!("need at least {} distinct r values", DROP + 2)));
    }
    let points = rs.iter().map(|&r| log_theta(x, g, h, r).map(|v| (r, v))).collect::<Result<Vec<_>>>()?;
    let fit: Vec<(f64, f64)> = points[DROP..].iter().map(|&(r, v)| (r.ln(), v)).collect();
    let (slope, intercept) = least_squares(&fit);
    Ok(ThetaSlope { t: -slope, slope, intercept, points, dropped: DROP })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `2^-lo, 2^-(lo+1), ..., 2^-hi`.
pub fn dyadic_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::{stopping_family, Word};
    use crate::systems::presets;

    #[test]
    fn tn_closed_forms() {
        let s = presets::shared_diag();
        let opts = PressureOptions::default();
        for n in [5usize, 10, 20, 40] {
            let b = solve_tn(&s, n, 1, &opts).unwrap();
            let want = 1.0 + 1.5f64.ln() / 3f64.ln() + 16f64.ln() / (n as f64 * 3f64.ln());
            assert!((b.t - want).abs() < 1e-6, "n = {n}: {} vs {want}", b.t);
        }
        let sier = presets::sierpinski();
        let b = solve_tn(&sier, 7, 1, &opts).unwrap();
        let want = 3f64.ln() / 2f64.ln() + 16f64.ln() / (7.0 * 2f64.ln());
        assert!((b.t - want).abs() < 1e-6);
        assert!(solve_tn(&sier, 3, 2, &opts).is_err());
    }

    #[test]
    fn theta_matches_explicit_family() {
        let x = Subshift::golden_mean();
        let g = [-0.3, -0.1];
        let h = [-0.5f64, -0.8];
        for r in [0.3, 0.05, 0.01] {
            let fam = stopping_family(&x, |w: &Word| w.letters().iter().map(|&a| h[a]).sum(), r).unwrap();
            let mut direct = LogSumExp::new();
            for w in &fam.words {
                direct.add(w.letters().iter().map(|&a| g[a]).sum());
            }
            let memo = log_theta(&x, &g, &h, r).unwrap();
            assert!((memo - direct.value()).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn slopes_of_constant_potentials() {
        let grid = dyadic_grid(5, 18);
        let full3 = Subshift::full(3).unwrap();
        let half = 0.5f64.ln();
        let t = theta_slope(&full3, &[0.0; 3], &[half; 3], &grid).unwrap();
        assert!((t.t - 3f64.ln() / 2f64.ln()).abs() < 0.02);
        let full2 = Subshift::full(2).unwrap();
        // log 2 + log(1/2) + t log(1/2) = 0 gives t = 0: Theta_r is identically 1.
        let t = theta_slope(&full2, &[half; 2], &[half; 2], &grid).unwrap();
        assert!(t.t.abs() < 0.02);
        let t = theta_slope(&full2, &[0.0; 2], &[half; 2], &grid).unwrap();
        assert!((t.t - 1.0).abs() < 0.02);
    }

    #[test]
    fn potential_checks() {
        let x = Subshift::full(2).unwrap();
        assert!(matches!(log_theta(&x, &[0.0, 0.0], &[-0.1, 0.0], 0.1), Err(Error::NonContractiveH(_))));
        assert!(log_theta(&x, &[0.0, 0.0], &[-0.1, -0.2], 0.95).is_err());
        assert!(log_theta(&x, &[0.0], &[-0.1, -0.2], 0.5).is_err());
    }
}
