//! Singular values of small matrices, the singular value function, and
//! log-domain spectra of long matrix products.

mod jacobi;
mod matrix;
mod product;
mod spectrum;

pub(crate) use matrix::check_dim;
pub use matrix::{SmallMatrix, MAX_DIM};
pub use product::{product_spectrum, ProductAccumulator, DEFAULT_RENORM_EVERY};
pub use spectrum::{log_phi_s, log_phi_sorted, singular_values, svd, SingularSpectrum, Svd, MIN_ABS_DET};
