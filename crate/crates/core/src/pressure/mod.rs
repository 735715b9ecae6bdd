//! Sub-additive topological pressure from word sums, dimension solvers, the
//! covering-number bounds `t_n`, and stopping-family slopes.

mod bounds;
mod estimate;
mod lse;
mod table;
mod variational;

pub use bounds::{dyadic_grid, least_squares, log_cover_constant, log_theta, solve_tn, theta_slope, tn_from_table, ThetaSlope, TnBound};
pub use estimate::{
    bisect, extrapolate, ladder, log_partition_sum, pressure, solve_dim_s, BisectionRoot, DimensionSolveResult, PressureEstimate,
    PressureModel, PressureOptions, DEFAULT_BUDGET, DEFAULT_MAX_N, TOL_P, TOL_S_EXACT, TOL_S_PROBED,
};
pub use lse::{log_add, LogSumExp};
pub use table::{affine_state_counts, estimate_leaf_evals, SpectrumTable, FRONTIER_CAP};
pub use variational::{variational_gap, variational_gap_with, VariationalGap, VariationalOptions};
