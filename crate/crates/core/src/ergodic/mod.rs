//! Shift-invariant measures, entropy, Lyapunov exponents and dimensions, and
//! local dimensions of sampled measures.

mod local;
mod lyapunov;
mod measure;

pub use local::{default_r_grid, local_dims, quantile, LocalDim, LocalDimOptions, LocalDims, DEFAULT_MIN_COUNT, DEFAULT_PROBES, DEFAULT_QUANTILE};
pub use lyapunov::{lyapunov_dimension, lyapunov_exponents, lyapunov_potential, LyapunovSpectrum, DEFAULT_N_ORBIT, DEFAULT_N_SAMPLES};
pub use measure::{ShiftMeasure, WordSampler};
