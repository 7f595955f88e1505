//! Stream format, runners, oracle checks, generators and the `incflow`
//! command line on top of the `incflow` core crate.

pub mod app;
pub mod check;
pub mod gen;
pub mod runner;
pub mod stream;
pub mod trace;

pub use check::{check_run, CheckReport};
pub use runner::{run_stream, run_stream_with, EventRecord, MetricsRecord, Outcome, RunOptions, RunReport};
pub use stream::{parse_stream, EdgeSpec, Header, ParseError, Problem, UpdateStream};
