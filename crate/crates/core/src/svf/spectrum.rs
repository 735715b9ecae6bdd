use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::svf::jacobi::ScaledColumns;
use crate::svf::matrix::{SmallMatrix, MAX_DIM};

/// Smallest `|det|` accepted for a single matrix.
pub const MIN_ABS_DET: f64 = 1e-300;

/// Log singular values `log alpha_1 >= ... >= log alpha_d`.
#[derive(Clone, Copy, PartialEq)]
pub struct SingularSpectrum<T: Real> {
    d: usize,
    log_alpha: [T; MAX_DIM],
}

impl<T: Real> SingularSpectrum<T> {
    /// Builds a spectrum from log singular values, sorting them in descending order.
    pub fn from_log_alpha(values: &[T]) -> Result<Self> {
        crate::svf::matrix::check_dim(values.len())?;
        if values.iter().any(|x| x.is_nan() || *x == T::infinity()) {
            return Err(Error::NonFinite("log singular values"));
        }
        let mut log_alpha = [T::zero(); MAX_DIM];
        log_alpha[..values.len()].copy_from_slice(values);
        log_alpha[..values.len()].sort_by(|a, b| b.partial_cmp(a).expect("not NaN"));
        Ok(SingularSpectrum { d: values.len(), log_alpha })
    }

    pub(crate) fn from_sorted_unchecked(d: usize, log_alpha: [T; MAX_DIM]) -> Self {
        SingularSpectrum { d, log_alpha }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn log_alpha(&self) -> &[T] {
        &self.log_alpha[..self.d]
    }

    /// Singular values `alpha_i` (may underflow for long products).
    pub fn alpha(&self) -> Vec<T> {
        self.log_alpha().iter().map(|x| x.exp()).collect()
    }

    pub fn log_abs_det(&self) -> T {
        self.log_alpha().iter().copied().sum()
    }

    /// `log phi^s` without the `s >= 0` check.
    #[inline]
    pub fn log_phi(&self, s: T) -> T {
        log_phi_sorted(self.log_alpha(), s)
    }

    /// `log phi^s`, the log of the singular value function.
    pub fn log_phi_s(&self, s: T) -> Result<T> {
        if s < T::zero() || s.is_nan() {
            return Err(Error::NegativeS(s.to_f64_lossy()));
        }
        Ok(self.log_phi(s))
    }

    /// Converts to an `f64` spectrum.
    pub fn to_f64(&self) -> SingularSpectrum<f64> {
        let mut la = [0.0; MAX_DIM];
        for (dst, src) in la.iter_mut().zip(self.log_alpha()) {
            *dst = src.to_f64_lossy();
        }
        SingularSpectrum { d: self.d, log_alpha: la }
    }
}

impl<T: Real> std::fmt::Debug for SingularSpectrum<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularSpectrum").field("log_alpha", &self.log_alpha()).finish()
    }
}

impl Serialize for SingularSpectrum<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.log_alpha().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SingularSpectrum<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(de)?;
        SingularSpectrum::from_log_alpha(&v).map_err(serde::de::Error::custom)
    }
}

/// Full singular value decomposition `T = U diag(alpha) V^T` of a small matrix.
#[derive(Clone, Copy, Debug)]
pub struct Svd<T: Real> {
    /// Left singular vectors as columns.
    pub u: SmallMatrix<T>,
    pub spectrum: SingularSpectrum<T>,
    /// Right singular vectors as columns.
    pub v: SmallMatrix<T>,
}

/// `log phi^s` evaluated on descending log singular values (or any
/// descending exponents), without the `s >= 0` check.
#[inline]
pub fn log_phi_sorted<T: Real>(log_alpha: &[T], s: T) -> T {
    let d = log_alpha.len();
    let dt = T::from_usize(d).expect("small integer");
    if s > dt {
        let total = log_alpha.iter().fold(T::zero(), |a, &b| a + b);
        return s / dt * total;
    }
    let k = s.floor().to_usize().unwrap_or(0).min(d);
    let mut acc = T::zero();
    for &la in &log_alpha[..k] {
        acc = acc + la;
    }
    if k < d {
        let frac = s - T::from_usize(k).expect("small integer");
        if frac > T::zero() {
            acc = acc + frac * log_alpha[k];
        }
    }
    acc
}

/// Singular value decomposition by one-sided Jacobi.
pub fn svd<T: Real>(m: &SmallMatrix<T>) -> Result<Svd<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix entries"));
    }
    let d = m.dim();
    let mut cols = ScaledColumns::from_matrix(m);
    let mut rot = SmallMatrix::identity(d);
    cols.orthogonalize(Some(&mut rot));
    let order = cols.descending_order();
    let mut log_alpha = [T::zero(); MAX_DIM];
    let mut u = SmallMatrix::zeros(d);
    let mut v = SmallMatrix::zeros(d);
    for (new, &old) in order[..d].iter().enumerate() {
        log_alpha[new] = cols.l[old];
        for i in 0..d {
            u.set(i, new, cols.v[old][i]);
            v.set(i, new, rot.get(i, old));
        }
    }
    let log_det: T = log_alpha[..d].iter().copied().sum();
    if !(log_det >= T::lit(MIN_ABS_DET.ln())) {
        return Err(Error::SingularMatrix { log_det: log_det.to_f64_lossy() });
    }
    Ok(Svd { u, spectrum: SingularSpectrum::from_sorted_unchecked(d, log_alpha), v })
}

/// Log singular values of `m`, descending.
pub fn singular_values<T: Real>(m: &SmallMatrix<T>) -> Result<SingularSpectrum<T>> {
    svd(m).map(|s| s.spectrum)
}

/// `log phi^s` of a spectrum; see [`SingularSpectrum::log_phi_s`].
pub fn log_phi_s<T: Real>(spec: &SingularSpectrum<T>, s: T) -> Result<T> {
    spec.log_phi_s(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    /// Singular values of a 2x2 matrix from the closed-form eigenvalues of `T^T T`.
    fn two_by_two_oracle(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
        let p = a * a + c * c;
        let q = a * b + c * d;
        let r = b * b + d * d;
        let mean = 0.5 * (p + r);
        let disc = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        ((mean + disc).sqrt(), (mean - disc).max(0.0).sqrt())
    }

    #[test]
    fn identity_and_diagonal() {
        let s = singular_values(&SmallMatrix::<f64>::identity(2)).unwrap();
        assert_eq!(s.log_alpha(), &[0.0, 0.0]);
        let s = singular_values(&SmallMatrix::diag(&[0.5, 1.0 / 3.0]).unwrap()).unwrap();
        assert!(close(s.log_alpha()[0], 0.5f64.ln(), 1e-15));
        assert!(close(s.log_alpha()[1], (1.0f64 / 3.0).ln(), 1e-15));
        // ordering is by magnitude, not by position
        let s = singular_values(&SmallMatrix::diag(&[0.1, -0.7, 0.3]).unwrap()).unwrap();
        assert!(close(s.log_alpha()[0], 0.7f64.ln(), 1e-15));
        assert!(close(s.log_alpha()[2], 0.1f64.ln(), 1e-15));
    }

    #[test]
    fn upper_triangular_example_matches_oracle() {
        let (a1, a2) = two_by_two_oracle(0.5, 0.25, 0.0, 0.3);
        assert!(close(a1, 0.579154, 1e-6));
        assert!(close(a2, 0.258998, 1e-6));
        assert!(close(a1 * a2, 0.15, 1e-14));
        let m = SmallMatrix::new(2, &[0.5, 0.25, 0.0, 0.3]).unwrap();
        let s = singular_values(&m).unwrap();
        assert!(close(s.log_alpha()[0], a1.ln(), 1e-13));
        assert!(close(s.log_alpha()[1], a2.ln(), 1e-13));
        assert!(close(s.log_abs_det(), 0.15f64.ln(), 1e-12));
    }

    #[test]
    fn svd_reconstructs_input() {
        let m = SmallMatrix::new(3, &[0.3, -0.1, 0.2, 0.05, 0.4, 0.0, -0.2, 0.1, 0.25]).unwrap();
        let f = svd(&m).unwrap();
        let alpha = f.spectrum.alpha();
        for i in 0..3 {
            for j in 0..3 {
                let rec: f64 = (0..3).map(|k| f.u.get(i, k) * alpha[k] * f.v.get(j, k)).sum();
                assert!((rec - m.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_and_nonfinite_inputs() {
        let m = SmallMatrix::new(2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(singular_values(&m), Err(Error::SingularMatrix { .. })));
        let tiny = SmallMatrix::diag(&[1e-160, 1e-160]).unwrap();
        assert!(matches!(singular_values(&tiny), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn phi_examples() {
        let s = singular_values(&SmallMatrix::diag(&[0.5, 1.0 / 3.0]).unwrap()).unwrap();
        let want = (0.5 * (1.0f64 / 3.0).sqrt()).ln();
        assert!(close(s.log_phi_s(1.5).unwrap(), want, 1e-14));
        assert!(close(s.log_phi_s(1.5).unwrap(), 0.288675f64.ln(), 1e-6));
        assert!(close(s.log_phi_s(3.0).unwrap(), 1.5 * (1.0f64 / 6.0).ln(), 1e-14));
        assert!(close(s.log_phi_s(3.0).unwrap(), 0.0680414f64.ln(), 1e-6));
        assert_eq!(s.log_phi_s(0.0).unwrap(), 0.0);
        assert!(close(s.log_phi_s(1.0).unwrap(), 0.5f64.ln(), 1e-15));
        assert!(close(s.log_phi_s(2.0).unwrap(), (1.0f64 / 6.0).ln(), 1e-15));
        assert!(matches!(s.log_phi_s(-0.1), Err(Error::NegativeS(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let m = SmallMatrix::<f32>::new(2, &[0.5, 0.25, 0.0, 0.3]).unwrap();
        let s = singular_values(&m).unwrap();
        assert!((s.log_alpha()[0] - 0.579_154f32.ln()).abs() < 1e-5);
        assert!((s.log_abs_det() - 0.15f32.ln()).abs() < 1e-5);
    }
}
