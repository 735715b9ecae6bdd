use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::svf::jacobi::ScaledColumns;
use crate::svf::matrix::{SmallMatrix, MAX_DIM};
use crate::svf::spectrum::{SingularSpectrum, MIN_ABS_DET};

/// Default number of factors multiplied densely between re-orthogonalizations.
pub const DEFAULT_RENORM_EVERY: usize = 16;

/// Running log-domain singular spectrum of a product `M_1 M_2 ... M_n`.
///
/// The product can be grown on the right ([`push`](Self::push)) or on the
/// left ([`prepend`](Self::prepend)), but not both on the same accumulator.
/// Internally holds the product (or its transpose, when appending) times an
/// unknown orthogonal matrix, as mutually orthogonal log-scaled columns. A new
/// factor multiplies those columns and they are re-orthogonalized, which
/// leaves the singular values unchanged while keeping every quantity bounded.
#[derive(Clone, Copy, Debug)]
pub struct ProductAccumulator<T: Real> {
    cols: ScaledColumns<T>,
    factors: usize,
    side: Side,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Side {
    Unset,
    Right,
    Left,
}

impl<T: Real> ProductAccumulator<T> {
    /// Empty product (the identity).
    pub fn new(d: usize) -> Self {
        ProductAccumulator { cols: ScaledColumns::identity(d), factors: 0, side: Side::Unset }
    }

    pub fn dim(&self) -> usize {
        self.cols.d
    }

    /// Number of factors absorbed so far.
    pub fn len(&self) -> usize {
        self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors == 0
    }

    /// Appends `m` on the right.
    pub fn push(&mut self, m: &SmallMatrix<T>) {
        self.push_scaled(m, T::zero(), 1);
    }

    /// Appends `exp(log_scale) * m` on the right, counting it as `factors` factors.
    pub fn push_scaled(&mut self, m: &SmallMatrix<T>, log_scale: T, factors: usize) {
        self.lock(Side::Right);
        debug_assert_eq!(m.dim(), self.cols.d);
        self.cols.left_multiply(&m.transpose(), log_scale);
        self.cols.orthogonalize(None);
        self.factors += factors;
    }

    /// Prepends `m` on the left.
    pub fn prepend(&mut self, m: &SmallMatrix<T>) {
        self.lock(Side::Left);
        debug_assert_eq!(m.dim(), self.cols.d);
        self.cols.left_multiply(m, T::zero());
        self.cols.orthogonalize(None);
        self.factors += 1;
    }

    fn lock(&mut self, side: Side) {
        assert!(
            self.side == Side::Unset || self.side == side,
            "cannot mix left and right multiplication on one accumulator"
        );
        self.side = side;
    }

    /// Quantized canonical form of the internal state. Two accumulators with
    /// equal keys agree (to about `1e-11`) on every future extension, so
    /// enumerations can merge them.
    pub fn canonical_key(&self, out: &mut Vec<i64>) {
        let d = self.cols.d;
        let order = self.cols.descending_order();
        out.push(self.side as i64);
        for &j in &order[..d] {
            let l = self.cols.l[j].to_f64_lossy();
            out.push(if l.is_finite() { (l * 1e11).round() as i64 } else { i64::MIN });
            let v = &self.cols.v[j][..d];
            let pivot = v.iter().copied().find(|x| x.abs().to_f64_lossy() > 1e-6).unwrap_or(T::one());
            let sign = if pivot < T::zero() { -1.0 } else { 1.0 };
            for x in v {
                out.push((sign * x.to_f64_lossy() * 1e11).round() as i64);
            }
        }
    }

    pub fn spectrum(&self) -> SingularSpectrum<T> {
        let order = self.cols.descending_order();
        let mut la = [T::zero(); MAX_DIM];
        for (dst, &src) in la.iter_mut().zip(order[..self.cols.d].iter()) {
            *dst = self.cols.l[src];
        }
        SingularSpectrum::from_sorted_unchecked(self.cols.d, la)
    }
}

/// Log singular spectrum of the ordered product `mats[0] * mats[1] * ...`,
/// multiplying `renorm_every` factors densely between re-orthogonalizations.
pub fn product_spectrum<T: Real>(mats: &[SmallMatrix<T>], renorm_every: usize) -> Result<SingularSpectrum<T>> {
    let first = mats.first().ok_or_else(|| Error::InvalidArgument("empty matrix product".into()))?;
    if renorm_every == 0 {
        return Err(Error::InvalidArgument("renorm_every must be at least 1".into()));
    }
    let d = first.dim();
    let min_log_det = T::lit(MIN_ABS_DET.ln());
    for m in mats {
        if m.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries"));
        }
        let ld = m.log_abs_det();
        if !(ld >= min_log_det) {
            return Err(Error::SingularMatrix { log_det: ld.to_f64_lossy() });
        }
    }
    let mut acc = ProductAccumulator::new(d);
    for block in mats.chunks(renorm_every) {
        let (b, log_scale) = scaled_block_product(block);
        acc.push_scaled(&b, log_scale, block.len());
    }
    Ok(acc.spectrum())
}

/// Dense product of a short block, rescaled after every factor; returns the
/// block divided by `exp(log_scale)` together with `log_scale`.
fn scaled_block_product<T: Real>(block: &[SmallMatrix<T>]) -> (SmallMatrix<T>, T) {
    let mut b = block[0];
    let mut log_scale = T::zero();
    for m in &block[1..] {
        b = b.matmul(m);
        let s = b.max_abs();
        if s > T::zero() && s.is_finite() {
            b = b.scaled(T::one() / s);
            log_scale = log_scale + s.ln();
        }
    }
    (b, log_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svf::spectrum::singular_values;

    #[test]
    fn long_diagonal_product_does_not_underflow() {
        let m = SmallMatrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
        let mats = vec![m; 100];
        let s = product_spectrum(&mats, DEFAULT_RENORM_EVERY).unwrap();
        assert!((s.log_alpha()[0] - 100.0 * 0.5f64.ln()).abs() < 1e-11);
        assert!((s.log_alpha()[1] - 100.0 * (1.0f64 / 3.0).ln()).abs() < 1e-11);
        let long = vec![m; 5000];
        let s = product_spectrum(&long, 1).unwrap();
        assert!((s.log_alpha()[1] / (5000.0 * (1.0f64 / 3.0).ln()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_factor_matches_direct() {
        let m = SmallMatrix::<f64>::new(2, &[0.5, 0.25, 0.0, 0.3]).unwrap();
        let a = product_spectrum(&[m], 16).unwrap();
        let b = singular_values(&m).unwrap();
        for (x, y) in a.log_alpha().iter().zip(b.log_alpha()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn order_of_factors_matters() {
        let a = SmallMatrix::<f64>::new(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let b = SmallMatrix::diag(&[2.0, 0.5]).unwrap();
        let ab = singular_values(&(a * b)).unwrap();
        let got = product_spectrum(&[a, b], 1).unwrap();
        for (x, y) in got.log_alpha().iter().zip(ab.log_alpha()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn prepend_matches_push() {
        let a = SmallMatrix::<f64>::new(2, &[0.4, 0.1, -0.2, 0.3]).unwrap();
        let b = SmallMatrix::new(2, &[0.2, 0.0, 0.3, 0.5]).unwrap();
        let c = SmallMatrix::new(2, &[0.6, -0.3, 0.1, 0.1]).unwrap();
        let mut right = ProductAccumulator::new(2);
        let mut left = ProductAccumulator::new(2);
        for m in [&a, &b, &c] {
            right.push(m);
        }
        for m in [&c, &b, &a] {
            left.prepend(m);
        }
        let direct = singular_values(&(a * b * c)).unwrap();
        for ((x, y), z) in right.spectrum().log_alpha().iter().zip(left.spectrum().log_alpha()).zip(direct.log_alpha()) {
            assert!((x - z).abs() < 1e-13 && (y - z).abs() < 1e-13);
        }
    }

    #[test]
    #[should_panic]
    fn mixing_sides_panics() {
        let mut acc = ProductAccumulator::<f64>::new(2);
        acc.push(&SmallMatrix::identity(2));
        acc.prepend(&SmallMatrix::identity(2));
    }

    #[test]
    fn errors() {
        let empty: Vec<SmallMatrix<f64>> = vec![];
        assert!(product_spectrum(&empty, 4).is_err());
        let s = SmallMatrix::new(2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            product_spectrum(&[SmallMatrix::identity(2), s], 4),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(product_spectrum(&[SmallMatrix::<f64>::identity(2)], 0).is_err());
    }
}
