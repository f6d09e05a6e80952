//! Alternating optimisation over bandwidth, auxiliary bounds and
//! power/location blocks.

pub mod ao;
pub mod auxiliary;
pub mod bandwidth;
pub mod config;
pub mod dual;
pub mod kkt;
pub mod model;
pub mod power;
pub mod state;

pub use ao::{alternating_optimize, init_allocation, optimize_blocks, BlockMask, KktReport, SolveReport};
pub use auxiliary::solve_auxiliary;
pub use bandwidth::{solve_bandwidth, tighten_b_s2r};
pub use config::{DualSteps, SolverConfig};
pub use dual::dual_update;
pub use kkt::{kkt_residual, KktComponents};
pub use power::solve_power_location;
pub use state::{AuxState, ClusterAux, DualState, Events, LinkAux, Multipliers};
