use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// Dense `d x d` matrix with inline row-major storage, `1 <= d <= 8`.
#[derive(Clone, Copy, PartialEq)]
pub struct SmallMatrix<T: Real> {
    d: usize,
    data: [T; MAX_DIM * MAX_DIM],
}

impl<T: Real> SmallMatrix<T> {
    fn blank(d: usize) -> Self {
        SmallMatrix { d, data: [T::zero(); MAX_DIM * MAX_DIM] }
    }

    /// Builds a matrix from `d*d` row-major entries.
    pub fn new(d: usize, row_major: &[T]) -> Result<Self> {
        check_dim(d)?;
        if row_major.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: row_major.len() });
        }
        if row_major.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let mut m = Self::blank(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i * MAX_DIM + j] = row_major[i * d + j];
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.len();
        check_dim(d)?;
        let mut flat = Vec::with_capacity(d * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            flat.extend_from_slice(r);
        }
        Self::new(d, &flat)
    }

    pub fn zeros(d: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "dimension {d} out of range");
        Self::blank(d)
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * MAX_DIM + i] = T::one();
        }
        m
    }

    pub fn diag(entries: &[T]) -> Result<Self> {
        let d = entries.len();
        check_dim(d)?;
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let mut m = Self::blank(d);
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * MAX_DIM + i] = x;
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.d && j < self.d);
        self.data[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.d && j < self.d);
        self.data[i * MAX_DIM + j] = v;
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.d * self.d);
        for i in 0..self.d {
            out.extend_from_slice(&self.data[i * MAX_DIM..i * MAX_DIM + self.d]);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::blank(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                t.data[j * MAX_DIM + i] = self.data[i * MAX_DIM + j];
            }
        }
        t
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut m = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                m.data[i * MAX_DIM + j] = m.data[i * MAX_DIM + j] * c;
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d, "dimension mismatch");
        let mut m = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                let k = i * MAX_DIM + j;
                m.data[k] = m.data[k] + other.data[k];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d, "dimension mismatch");
        let d = self.d;
        let mut out = Self::blank(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * MAX_DIM + k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..d {
                    let idx = i * MAX_DIM + j;
                    out.data[idx] = out.data[idx] + a * other.data[k * MAX_DIM + j];
                }
            }
        }
        out
    }

    /// `y = self * x`; `x.len()` must equal `d`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.d);
        for i in 0..self.d {
            let mut acc = T::zero();
            for j in 0..self.d {
                acc = acc + self.data[i * MAX_DIM + j] * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.d {
            for j in 0..self.d {
                m = m.max(self.data[i * MAX_DIM + j].abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.d).all(|i| (0..self.d).all(|j| self.data[i * MAX_DIM + j].is_finite()))
    }

    /// `log |det|` by LU with partial pivoting; `-inf` for exactly singular input.
    pub fn log_abs_det(&self) -> T {
        let d = self.d;
        let mut a = *self;
        let mut acc = T::zero();
        for c in 0..d {
            let mut piv = c;
            for r in c + 1..d {
                if a.get(r, c).abs() > a.get(piv, c).abs() {
                    piv = r;
                }
            }
            let p = a.get(piv, c);
            if p == T::zero() {
                return T::neg_infinity();
            }
            if piv != c {
                for j in 0..d {
                    a.data.swap(piv * MAX_DIM + j, c * MAX_DIM + j);
                }
            }
            acc = acc + p.abs().ln();
            for r in c + 1..d {
                let f = a.get(r, c) / p;
                if f != T::zero() {
                    for j in c..d {
                        let v = a.get(r, j) - f * a.get(c, j);
                        a.set(r, j, v);
                    }
                }
            }
        }
        acc
    }
}

impl<T: Real> Mul for SmallMatrix<T> {
    type Output = SmallMatrix<T>;

    fn mul(self, rhs: Self) -> Self {
        self.matmul(&rhs)
    }
}

impl<T: Real> fmt::Debug for SmallMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<T>> = (0..self.d)
            .map(|i| (0..self.d).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("SmallMatrix").field("d", &self.d).field("rows", &rows).finish()
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}
