//! Independent oracles: static optimization, exact maxflow, Laplacian solves
//! and finite differences. Small instances only; none of this is fast.

mod fd;
mod laplacian;
mod maxflow;
mod pnorm;

pub use fd::{finite_diff, finite_diff_check};
pub use laplacian::{effective_resistance, grounded_solve};
pub use maxflow::{exact_maxflow, MaxflowResult};
pub use pnorm::{static_pnorm_opt, static_pnorm_opt_from, tree_routing, OracleReport, OracleSettings};
