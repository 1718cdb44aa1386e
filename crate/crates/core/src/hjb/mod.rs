//! Grid solver for the stationary HJB equation `λV + H(x, −∇V) = 0` on an
//! invariant domain, and the vanishing-discount experiments built on it.

mod reach;
mod residual;
mod scheme;
mod sweep;

pub use reach::{reachability_graph, reachable_value, reachable_values, EDGE_WEIGHT_TOL};
pub use residual::{
    check_system_h, check_system_s, discounted_joint_residual, reduced_residual, SystemHResiduals, SystemSResiduals,
};
pub use scheme::{solve_hjb, solve_hjb_from, HjbOptions, HjbSolveResult, SemiLagrangian, SolveMetadata};
pub use sweep::{rate_check, rescaled_sweep, RateRow, RateTable, RescaledSweep};
