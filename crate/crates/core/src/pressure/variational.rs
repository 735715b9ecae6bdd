use serde::{Deserialize, Serialize};

use crate::ergodic::{lyapunov_exponents, lyapunov_potential, LyapunovSpectrum, ShiftMeasure};
use crate::error::{Error, Result};
use crate::pressure::{PressureEstimate, PressureModel, PressureOptions};
use crate::systems::CodedSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalOptions {
    pub n_orbit: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        VariationalOptions { n_orbit: crate::ergodic::DEFAULT_N_ORBIT, n_samples: crate::ergodic::DEFAULT_N_SAMPLES, seed: 0 }
    }
}

/// `P(s) - (h_m + G_*(m))` with its error budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalGap {
    pub s: f64,
    pub gap: f64,
    pub pressure: f64,
    pub entropy: f64,
    /// `lim (1/n) int log phi^s` under the measure.
    pub potential: f64,
    /// Pressure bracket plus the confidence half-width of the potential.
    pub slack: f64,
}

impl VariationalGap {
    pub fn from_parts(p: &PressureEstimate, entropy: f64, lyap: &LyapunovSpectrum) -> Result<Self> {
        if !(p.s >= 0.0) {
            return Err(Error::NegativeS(p.s));
        }
        let potential = lyapunov_potential(&lyap.lambda, p.s);
        // The potential is linear in the exponents with weights in [0, max(1, s/d)].
        let d = lyap.lambda.len() as f64;
        let w = (p.s / d).max(1.0);
        let ci = lyap.ci_half_width.iter().sum::<f64>() * w;
        Ok(VariationalGap {
            s: p.s,
            gap: p.value - (entropy + potential),
            pressure: p.value,
            entropy,
            potential,
            slack: p.bracket_width + ci,
        })
    }

    pub fn within(&self, tol: f64) -> bool {
        self.gap >= -tol
    }
}

/// Gap for one measure against an already built pressure model.
pub fn variational_gap_with<S: CodedSystem + ?Sized>(
    sys: &S,
    model: &PressureModel,
    s: f64,
    m: &ShiftMeasure,
    opts: &VariationalOptions,
) -> Result<VariationalGap> {
    m.check_support(sys.code_space())?;
    let p = model.estimate(s)?;
    let lyap = lyapunov_exponents(sys, m, opts.n_orbit, opts.n_samples, opts.seed)?;
    VariationalGap::from_parts(&p, m.entropy(), &lyap)
}

/// Gap between the pressure of `log phi^s` and the free energy of `m`.
pub fn variational_gap<S: CodedSystem + ?Sized>(
    sys: &S,
    s: f64,
    m: &ShiftMeasure,
    popts: &PressureOptions,
    opts: &VariationalOptions,
) -> Result<VariationalGap> {
    m.check_support(sys.code_space())?;
    let model = PressureModel::new(sys, popts)?;
    variational_gap_with(sys, &model, s, m, opts)
}
