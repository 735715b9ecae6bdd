use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::{Subshift, Word};

const ROW_SUM_TOL: f64 = 1e-9;

/// Shift-invariant Bernoulli or Markov measure on sequences over `ell` symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShiftMeasure {
    Bernoulli { p: Vec<f64> },
    Markov { transition: Vec<Vec<f64>>, stationary: Vec<f64> },
}

fn normalized(row: &[f64], what: &str) -> Result<Vec<f64>> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidMeasure(format!("{what}: probabilities must be finite and non-negative")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::InvalidMeasure(format!("{what}: probabilities sum to {total}, not 1")));
    }
    Ok(row.iter().map(|p| p / total).collect())
}

impl ShiftMeasure {
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidMeasure("need at least two symbols".into()));
        }
        Ok(ShiftMeasure::Bernoulli { p: normalized(p, "Bernoulli weights")? })
    }

    pub fn uniform(ell: usize) -> Self {
        ShiftMeasure::Bernoulli { p: vec![1.0 / ell as f64; ell] }
    }

    /// Markov measure with the given row-stochastic matrix; the stationary vector
    /// is found by lazy power iteration from the uniform vector.
    pub fn markov(transition: &[Vec<f64>]) -> Result<Self> {
        let n = transition.len();
        if n < 2 {
            return Err(Error::InvalidMeasure("need at least two symbols".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMeasure(format!("transition row {i} has {} entries, expected {n}", row.len())));
            }
            rows.push(normalized(row, &format!("transition row {i}"))?);
        }
        let stationary = stationary_vector(&rows)?;
        Ok(ShiftMeasure::Markov { transition: rows, stationary })
    }

    /// Markov measure choosing uniformly among the allowed successors.
    pub fn uniform_markov(x: &Subshift) -> Self {
        let ell = x.alphabet_size();
        let rows: Vec<Vec<f64>> = (0..ell)
            .map(|i| {
                let deg = x.successors(i).count() as f64;
                (0..ell).map(|j| if x.allows(i, j) { 1.0 / deg } else { 0.0 }).collect()
            })
            .collect();
        Self::markov(&rows).expect("uniform successor chain is stochastic")
    }

    /// Random Markov measure supported on the allowed transitions of `x`, with
    /// every allowed transition given positive weight.
    pub fn random_markov<R: Rng + ?Sized>(x: &Subshift, rng: &mut R) -> Self {
        let ell = x.alphabet_size();
        let rows: Vec<Vec<f64>> = (0..ell)
            .map(|i| {
                let w: Vec<f64> = (0..ell).map(|j| if x.allows(i, j) { rng.gen_range(0.05..1.0) } else { 0.0 }).collect();
                let t: f64 = w.iter().sum();
                w.iter().map(|v| v / t).collect()
            })
            .collect();
        Self::markov(&rows).expect("random chain is stochastic")
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            ShiftMeasure::Bernoulli { p } => p.len(),
            ShiftMeasure::Markov { stationary, .. } => stationary.len(),
        }
    }

    /// Probability of the first symbol.
    pub fn initial(&self) -> &[f64] {
        match self {
            ShiftMeasure::Bernoulli { p } => p,
            ShiftMeasure::Markov { stationary, .. } => stationary,
        }
    }

    /// Conditional probability of `j` following `i`.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        match self {
            ShiftMeasure::Bernoulli { p } => p[j],
            ShiftMeasure::Markov { transition, .. } => transition[i][j],
        }
    }

    /// Entropy per symbol in nats.
    pub fn entropy(&self) -> f64 {
        let plogp = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
        match self {
            ShiftMeasure::Bernoulli { p } => p.iter().map(|&q| plogp(q)).sum(),
            ShiftMeasure::Markov { transition, stationary } => stationary
                .iter()
                .zip(transition)
                .map(|(pi, row)| pi * row.iter().map(|&q| plogp(q)).sum::<f64>())
                .sum(),
        }
    }

    /// Errors unless every cylinder of positive measure is admissible in `x`.
    pub fn check_support(&self, x: &Subshift) -> Result<()> {
        let ell = self.alphabet_size();
        if ell != x.alphabet_size() {
            return Err(Error::MeasureSupportMismatch(format!(
                "measure has {ell} symbols, subshift has {}",
                x.alphabet_size()
            )));
        }
        let init = self.initial();
        for i in 0..ell {
            if init[i] == 0.0 {
                continue;
            }
            for j in 0..ell {
                if self.transition(i, j) > 0.0 && !x.allows(i, j) {
                    return Err(Error::MeasureSupportMismatch(format!("transition {i}->{j} has positive mass but is forbidden")));
                }
            }
        }
        Ok(())
    }

    /// Sampler for finite words distributed as the measure.
    pub fn sampler(&self) -> WordSampler {
        let init = WeightedIndex::new(self.initial()).expect("measure has positive total mass");
        let ell = self.alphabet_size();
        let rows = (0..ell)
            .map(|i| WeightedIndex::new((0..ell).map(|j| self.transition(i, j))).ok())
            .collect();
        WordSampler { init, rows }
    }

    /// Sampler of the time-reversed chain, used to grow sequences on the left.
    pub fn reversed_sampler(&self) -> WordSampler {
        let ell = self.alphabet_size();
        let pi = self.initial();
        let init = WeightedIndex::new(pi).expect("measure has positive total mass");
        let rows = (0..ell)
            .map(|j| WeightedIndex::new((0..ell).map(|i| if pi[j] > 0.0 { pi[i] * self.transition(i, j) / pi[j] } else { 0.0 })).ok())
            .collect();
        WordSampler { init, rows }
    }
}

fn stationary_vector(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * rows[i][j];
            }
        }
        let mut delta: f64 = 0.0;
        for j in 0..n {
            let lazy = 0.5 * (pi[j] + next[j]);
            delta = delta.max((lazy - pi[j]).abs());
            pi[j] = lazy;
        }
        if delta < 1e-16 {
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    for j in 0..n {
        let img: f64 = (0..n).map(|i| pi[i] * rows[i][j]).sum();
        if (img - pi[j]).abs() > 1e-10 {
            return Err(Error::InvalidMeasure("power iteration did not reach a stationary vector".into()));
        }
    }
    Ok(pi)
}

/// Draws words from a Bernoulli or Markov chain.
#[derive(Clone, Debug)]
pub struct WordSampler {
    init: WeightedIndex<f64>,
    rows: Vec<Option<WeightedIndex<f64>>>,
}

impl WordSampler {
    pub fn first<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.init.sample(rng)
    }

    pub fn next<R: Rng + ?Sized>(&self, prev: usize, rng: &mut R) -> usize {
        match &self.rows[prev] {
            Some(d) => d.sample(rng),
            None => self.init.sample(rng),
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, out: &mut Vec<usize>, n: usize, rng: &mut R) {
        out.clear();
        if n == 0 {
            return;
        }
        let mut a = self.first(rng);
        out.push(a);
        for _ in 1..n {
            a = self.next(a, rng);
            out.push(a);
        }
    }

    pub fn word<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Word {
        let mut v = Vec::with_capacity(n);
        self.fill(&mut v, n, rng);
        Word::new(v)
    }
}
