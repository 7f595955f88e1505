//! End-user reductions on top of the refinement engine.

mod effres;
mod maxflow;

pub use effres::{EffResVerdict, IncrementalEffRes, GAMMA};
pub use maxflow::{phase_bound, IncrementalMaxflow, MaxflowEvent, MaxflowParams, ObserverFactory};
