//! Concrete dynamical models: C1 iterated function systems and expanding
//! repellers given by inverse branches.

mod chaos;
mod coded;
mod map;
pub mod presets;

pub use chaos::{chaos_game, PointCloud};
pub use coded::{
    code_point, code_point_with_tail, jacobians_along, periodic_tail, random_tail, CodePoint, CodedSystem, DynSystem, IfsSystem,
    ProbeSet, RepellerSystem, Tail, CODING_TOL, DEFAULT_K_PROBE,
};
pub use map::{Domain, Perturbation, SmoothMap};
