//! Dimension estimates for attractors of C1 iterated function systems and
//! for repellers of expanding maps coded by subshifts of finite type.
//!
//! The singular value machinery in [`svf`] is generic over the scalar type;
//! the dynamical layers above it work in `f64` through the aliases below.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ergodic;
pub mod error;
pub mod geometry;
pub mod pressure;
pub mod scalar;
pub mod shift;
pub mod svf;
pub mod systems;

pub use error::{Error, Result};
pub use scalar::Real;

/// `d x d` matrix of `f64`.
pub type Matrix = svf::SmallMatrix<f64>;
/// Log singular spectrum in `f64`.
pub type Spectrum = svf::SingularSpectrum<f64>;
/// Product accumulator in `f64`.
pub type Accumulator = svf::ProductAccumulator<f64>;
