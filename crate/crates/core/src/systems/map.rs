use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svf::{singular_values, MAX_DIM};
use crate::Matrix;

/// Axis-aligned box `U = [min_1, max_1] x ... x [min_d, max_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Domain {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch { expected: min.len(), got: max.len() });
        }
        crate::svf::check_dim(min.len())?;
        if min.iter().zip(&max).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidSystem("domain box must have finite min < max on every axis".into()));
        }
        Ok(Domain { min, max })
    }

    pub fn unit_cube(d: usize) -> Self {
        Domain { min: vec![0.0; d], max: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn diameter(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim() && z.iter().zip(self.min.iter().zip(&self.max)).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Regular grid of probe points, corners included, at most about 4096 points.
    pub fn probe_grid(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let per_axis = ((4096f64).powf(1.0 / d as f64).floor() as usize).clamp(2, 65);
        let total = per_axis.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut p = vec![0.0; d];
            for (k, x) in p.iter_mut().enumerate() {
                let t = (idx % per_axis) as f64 / (per_axis - 1) as f64;
                idx /= per_axis;
                *x = self.min[k] + t * (self.max[k] - self.min[k]);
            }
            out.push(p);
        }
        out
    }
}

/// Closed-form smooth perturbation added to an affine map, with analytic Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// `f(z)_k += epsilon * sin(pi * z_{(k+1) mod d})`.
    Sine { epsilon: f64 },
    /// `f(z)_k += epsilon * z_k^2`.
    Quadratic { epsilon: f64 },
}

impl Perturbation {
    pub fn epsilon(&self) -> f64 {
        match *self {
            Perturbation::Sine { epsilon } | Perturbation::Quadratic { epsilon } => epsilon,
        }
    }
}

/// Affine map `z -> A z + b`, optionally plus a smooth perturbation.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    linear: Matrix,
    translation: [f64; MAX_DIM],
    perturbation: Option<Perturbation>,
    /// Largest Jacobian operator norm seen on the probe grid of the domain.
    contraction: f64,
}

impl SmoothMap {
    pub fn affine(linear: Matrix, translation: &[f64], domain: &Domain) -> Result<Self> {
        Self::new(linear, translation, None, domain)
    }

    pub fn new(linear: Matrix, translation: &[f64], perturbation: Option<Perturbation>, domain: &Domain) -> Result<Self> {
        let d = linear.dim();
        if translation.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: translation.len() });
        }
        if domain.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: domain.dim() });
        }
        if translation.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("translation"));
        }
        if let Some(p) = perturbation {
            if !p.epsilon().is_finite() {
                return Err(Error::NonFinite("perturbation amplitude"));
            }
        }
        let mut t = [0.0; MAX_DIM];
        t[..d].copy_from_slice(translation);
        let mut map = SmoothMap { linear, translation: t, perturbation: perturbation.filter(|p| p.epsilon() != 0.0), contraction: 0.0 };
        let mut gamma: f64 = 0.0;
        let probes = if map.is_affine() { vec![domain.center()] } else { domain.probe_grid() };
        for z in &probes {
            let j = map.jacobian(z);
            if !j.is_finite() {
                return Err(Error::NonFinite("Jacobian"));
            }
            let s = singular_values(&j)?;
            gamma = gamma.max(s.log_alpha()[0].exp());
        }
        if gamma >= 1.0 {
            return Err(Error::InvalidSystem(format!("map is not a contraction: Jacobian norm {gamma} >= 1")));
        }
        map.contraction = gamma;
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation[..self.dim()]
    }

    pub fn perturbation(&self) -> Option<Perturbation> {
        self.perturbation
    }

    pub fn is_affine(&self) -> bool {
        self.perturbation.is_none()
    }

    /// Certified contraction ratio (max sampled Jacobian norm).
    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    pub fn eval(&self, z: &[f64], out: &mut [f64]) {
        let d = self.dim();
        self.linear.apply(z, out);
        for k in 0..d {
            out[k] += self.translation[k];
        }
        match self.perturbation {
            None => {}
            Some(Perturbation::Sine { epsilon }) => {
                for k in 0..d {
                    out[k] += epsilon * (PI * z[(k + 1) % d]).sin();
                }
            }
            Some(Perturbation::Quadratic { epsilon }) => {
                for k in 0..d {
                    out[k] += epsilon * z[k] * z[k];
                }
            }
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval(z, &mut out);
        out
    }

    /// Differential `D_z f`.
    pub fn jacobian(&self, z: &[f64]) -> Matrix {
        let d = self.dim();
        let mut j = self.linear;
        match self.perturbation {
            None => {}
            Some(Perturbation::Sine { epsilon }) => {
                for k in 0..d {
                    let c = (k + 1) % d;
                    j.set(k, c, j.get(k, c) + epsilon * PI * (PI * z[c]).cos());
                }
            }
            Some(Perturbation::Quadratic { epsilon }) => {
                for k in 0..d {
                    j.set(k, k, j.get(k, k) + 2.0 * epsilon * z[k]);
                }
            }
        }
        j
    }

    /// Checks that the map sends the probe grid of `domain` into `domain`.
    pub(crate) fn check_self_map(&self, domain: &Domain, what: &str) -> Result<()> {
        let mut out = vec![0.0; self.dim()];
        for z in domain.probe_grid() {
            self.eval(&z, &mut out);
            if !domain.contains(&out) {
                return Err(Error::InvalidSystem(format!("{what} maps {z:?} to {out:?}, outside the domain")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_matches_finite_differences() {
        let dom = Domain::new(vec![-0.1, -0.1], vec![1.1, 1.1]).unwrap();
        let lin = Matrix::new(2, &[0.5, 0.1, 0.0, 0.3]).unwrap();
        for p in [Perturbation::Sine { epsilon: 0.01 }, Perturbation::Quadratic { epsilon: 0.02 }] {
            let f = SmoothMap::new(lin, &[0.1, 0.2], Some(p), &dom).unwrap();
            let z = [0.37, 0.81];
            let j = f.jacobian(&z);
            let h = 1e-6;
            for c in 0..2 {
                let mut zp = z;
                let mut zm = z;
                zp[c] += h;
                zm[c] -= h;
                let (fp, fm) = (f.apply(&zp), f.apply(&zm));
                for r in 0..2 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    assert!((fd - j.get(r, c)).abs() < 1e-8, "entry ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn zero_epsilon_is_affine() {
        let dom = Domain::unit_cube(2);
        let lin = Matrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
        let f = SmoothMap::new(lin, &[0.0, 0.0], Some(Perturbation::Sine { epsilon: 0.0 }), &dom).unwrap();
        assert!(f.is_affine());
        assert_eq!(f.jacobian(&[0.3, 0.4]), lin);
        assert!((f.contraction() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_expanding_map() {
        let dom = Domain::unit_cube(1);
        let lin = Matrix::diag(&[1.5]).unwrap();
        assert!(SmoothMap::affine(lin, &[0.0], &dom).is_err());
        let lin = Matrix::diag(&[0.9]).unwrap();
        let bumped = SmoothMap::new(lin, &[0.0], Some(Perturbation::Quadratic { epsilon: 0.2 }), &dom);
        assert!(bumped.is_err());
    }
}
