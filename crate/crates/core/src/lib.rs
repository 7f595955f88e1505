//! Incremental thresholded smoothed p-norm flow.
//!
//! The crate maintains, under edge insertions into an undirected multigraph,
//! either a certificate that the optimal smoothed p-norm energy exceeds a
//! threshold `F`, or a feasible flow whose energy is at most `F + eps`. The
//! solver is an iterative-refinement loop whose residual problems are solved
//! by an l1 multiplicative-weights method on top of a monotone min-ratio
//! cycle oracle. Two reductions sit on top: incremental approximate
//! undirected maxflow and incremental effective-resistance thresholding.
//!
//! The crate is `no_std` with `alloc`; IO, stream formats and the command
//! line live in the companion `incflow-cli` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod drivers;
mod error;
pub mod graph;
pub mod mrc;
pub mod mwu;
pub mod numeric;
pub mod objective;
pub mod refine;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{DemandTracker, EdgeId, IncrementalGraph, SparseFlow, VertexId};
pub use mrc::{Backend, CycleSolution, MonotoneMrcState, MrcInstance, MrcUpdate};
pub use mwu::{MwuOutcome, MwuParams, MwuState, MwuStep};
pub use objective::{EdgeAttrs, PNormInstance};
pub use refine::{IncrementalPNorm, RefineConfig, ResidualProblem, StepRule, Verdict};
