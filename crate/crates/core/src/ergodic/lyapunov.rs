use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ergodic::ShiftMeasure;
use crate::error::{Error, Result};
use crate::svf::log_phi_sorted;
use crate::systems::CodedSystem;
use crate::Accumulator;

pub const DEFAULT_N_ORBIT: usize = 200;
pub const DEFAULT_N_SAMPLES: usize = 64;
/// Normal quantile for two-sided 95% intervals.
const Z95: f64 = 1.959963984540054;

/// Lyapunov exponents in nats per symbol with 95% half-widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    pub lambda: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    pub n_orbit: usize,
    pub n_samples: usize,
}

/// Monte Carlo exponents: the mean over sampled orbits of
/// `(1/n) log alpha_i(D f_{x|n})` at `Pi(sigma^n x)`.
pub fn lyapunov_exponents<S: CodedSystem + ?Sized>(
    sys: &S,
    m: &ShiftMeasure,
    n_orbit: usize,
    n_samples: usize,
    seed: u64,
) -> Result<LyapunovSpectrum> {
    if n_orbit == 0 || n_samples < 2 {
        return Err(Error::InvalidArgument("need n_orbit >= 1 and n_samples >= 2".into()));
    }
    m.check_support(sys.code_space())?;
    let d = sys.dim();
    let depth = sys.coding_depth();
    let sampler = m.sampler();
    let center = sys.domain().center();
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut letters = Vec::new();
            sampler.fill(&mut letters, n_orbit + depth + 1, &mut rng);
            let mut z = center.clone();
            let mut buf = vec![0.0; d];
            for k in (n_orbit..n_orbit + depth).rev() {
                sys.branch(letters[k], letters[k + 1]).eval(&z, &mut buf);
                std::mem::swap(&mut z, &mut buf);
            }
            let mut acc = Accumulator::new(d);
            for k in (0..n_orbit).rev() {
                let f = sys.branch(letters[k], letters[k + 1]);
                acc.prepend(&f.jacobian(&z));
                f.eval(&z, &mut buf);
                std::mem::swap(&mut z, &mut buf);
            }
            acc.spectrum().log_alpha().iter().map(|l| l / n_orbit as f64).collect()
        })
        .collect();
    let ns = n_samples as f64;
    let mut lambda = vec![0.0; d];
    let mut ci = vec![0.0; d];
    for i in 0..d {
        let mean = samples.iter().map(|s| s[i]).sum::<f64>() / ns;
        let var = samples.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (ns - 1.0);
        lambda[i] = mean;
        ci[i] = Z95 * (var / ns).sqrt();
    }
    Ok(LyapunovSpectrum { lambda, ci_half_width: ci, n_orbit, n_samples })
}

fn check_exponents(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::InvalidArgument("empty exponent list".into()));
    }
    if let Some(&l) = lambda.iter().find(|&&l| !(l < 0.0)) {
        return Err(Error::NonNegativeExponent(l));
    }
    if lambda.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("exponents must be non-increasing".into()));
    }
    Ok(())
}

/// `lambda_1 + ... + lambda_k + (s - k) lambda_{k+1}` (or `(s/d) sum lambda` above `d`).
pub fn lyapunov_potential(lambda: &[f64], s: f64) -> f64 {
    log_phi_sorted(lambda, s)
}

/// Zero of `s -> h + lyapunov_potential(lambda, s)`, solved segment by segment.
pub fn lyapunov_dimension(h: f64, lambda: &[f64]) -> Result<f64> {
    check_exponents(lambda)?;
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("entropy must be finite and non-negative, got {h}")));
    }
    let mut acc = h;
    for (k, &l) in lambda.iter().enumerate() {
        if acc + l <= 0.0 {
            return Ok(k as f64 + acc / -l);
        }
        acc += l;
    }
    let total: f64 = lambda.iter().sum();
    Ok(lambda.len() as f64 * h / -total)
}
