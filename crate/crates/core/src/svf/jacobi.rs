//! One-sided (Hestenes) Jacobi orthogonalization on log-scaled columns.
//!
//! Each column is stored as `exp(l_j) * v_j` with `|v_j| = 1`, so column
//! norms spanning thousands of orders of magnitude never over- or underflow.
//! Rotations are parameterized by the norm ratio `rho = exp(l_small - l_big)`
//! and stay finite as `rho -> 0`, where they degenerate to a Gram-Schmidt step.

use crate::scalar::Real;
use crate::svf::matrix::{SmallMatrix, MAX_DIM};

const MAX_SWEEPS: usize = 60;

#[derive(Clone, Copy, Debug)]
pub(crate) struct ScaledColumns<T: Real> {
    pub d: usize,
    /// `v[j]` is the unit direction of column `j`.
    pub v: [[T; MAX_DIM]; MAX_DIM],
    /// Natural log of the norm of column `j`.
    pub l: [T; MAX_DIM],
}

impl<T: Real> ScaledColumns<T> {
    pub fn identity(d: usize) -> Self {
        let mut v = [[T::zero(); MAX_DIM]; MAX_DIM];
        for (j, col) in v.iter_mut().enumerate().take(d) {
            col[j] = T::one();
        }
        ScaledColumns { d, v, l: [T::zero(); MAX_DIM] }
    }

    /// Columns of `m`, normalized.
    pub fn from_matrix(m: &SmallMatrix<T>) -> Self {
        let d = m.dim();
        let mut out = ScaledColumns { d, v: [[T::zero(); MAX_DIM]; MAX_DIM], l: [T::zero(); MAX_DIM] };
        for j in 0..d {
            for i in 0..d {
                out.v[j][i] = m.get(i, j);
            }
            out.l[j] = T::zero();
            out.renormalize(j);
        }
        out
    }

    /// Replaces every column `c` by `m * c`, adding `log_scale` to every column log norm.
    pub fn left_multiply(&mut self, m: &SmallMatrix<T>, log_scale: T) {
        let d = self.d;
        let mut tmp = [T::zero(); MAX_DIM];
        for j in 0..d {
            if self.l[j] == T::neg_infinity() {
                continue;
            }
            m.apply(&self.v[j][..d], &mut tmp[..d]);
            self.v[j][..d].copy_from_slice(&tmp[..d]);
            self.l[j] = self.l[j] + log_scale;
            self.renormalize(j);
        }
    }

    fn renormalize(&mut self, j: usize) {
        let d = self.d;
        let col = &mut self.v[j][..d];
        let scale = col.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if scale == T::zero() || !scale.is_finite() {
            col.iter_mut().for_each(|x| *x = T::zero());
            self.l[j] = T::neg_infinity();
            return;
        }
        let norm = scale * col.iter().map(|&x| (x / scale) * (x / scale)).sum::<T>().sqrt();
        col.iter_mut().for_each(|x| *x = *x / norm);
        self.l[j] = self.l[j] + norm.ln();
    }

    fn dot(&self, a: usize, b: usize) -> T {
        (0..self.d).map(|i| self.v[a][i] * self.v[b][i]).sum()
    }

    /// Runs Jacobi sweeps until all column pairs are orthogonal to working precision.
    ///
    /// When `rot` is given, the right rotations are accumulated into it
    /// (`A * rot` equals the orthogonalized columns).
    pub fn orthogonalize(&mut self, mut rot: Option<&mut SmallMatrix<T>>) -> usize {
        let d = self.d;
        let tol = T::epsilon() * T::lit(4.0);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        for sweep in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..d {
                for q in p + 1..d {
                    if self.l[p] == T::neg_infinity() || self.l[q] == T::neg_infinity() {
                        continue;
                    }
                    let g = self.dot(p, q);
                    if g.abs() <= tol {
                        continue;
                    }
                    rotated = true;
                    let (big, small) = if self.l[p] >= self.l[q] { (p, q) } else { (q, p) };
                    let rho = (self.l[small] - self.l[big]).exp();
                    let one_m = T::one() - rho * rho;
                    let kappa = -g.signum() * two * g.abs()
                        / (one_m + (four * rho * rho * g * g + one_m * one_m).sqrt());
                    let t = kappa * rho;
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    let kr2 = kappa * rho * rho;
                    for i in 0..d {
                        let vb = self.v[big][i];
                        let vs = self.v[small][i];
                        self.v[big][i] = c * (vb - kr2 * vs);
                        self.v[small][i] = c * (kappa * vb + vs);
                    }
                    self.renormalize(big);
                    self.renormalize(small);
                    if let Some(r) = rot.as_deref_mut() {
                        for i in 0..d {
                            let rb = r.get(i, big);
                            let rs = r.get(i, small);
                            r.set(i, big, c * rb - s * rs);
                            r.set(i, small, s * rb + c * rs);
                        }
                    }
                }
            }
            if !rotated {
                return sweep;
            }
        }
        MAX_SWEEPS
    }

    /// Column order by descending log norm.
    pub fn descending_order(&self) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for (i, x) in idx.iter_mut().enumerate() {
            *x = i;
        }
        let l = self.l;
        idx[..self.d].sort_by(|&a, &b| l[b].partial_cmp(&l[a]).unwrap_or(std::cmp::Ordering::Equal));
        idx
    }
}
