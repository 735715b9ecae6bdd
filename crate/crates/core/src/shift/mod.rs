//! Symbolic dynamics: words, full shifts and subshifts of finite type, block
//! shifts and stopping families.

mod stopping;
mod subshift;
mod word;

pub use stopping::{stopping_family, StoppingFamily};
pub use subshift::{BlockShift, ShiftKind, Subshift, TransferMatrix, Words};
pub use word::Word;
