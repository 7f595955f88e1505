use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("demand is not routable on the current graph")]
    NotRoutable,
    #[error("vertices {0} and {1} are disconnected")]
    Disconnected(usize, usize),
    #[error("length of edge {edge} would decrease from {old} to {new}")]
    Monotonicity { edge: usize, old: f64, new: f64 },
    #[error("instance with {vertices} vertices and {edges} edges exceeds the enumeration bound")]
    EnumerationBound { vertices: usize, edges: usize },
    #[error("edge {got} inserted out of order (expected id {expected})")]
    EdgeOrder { expected: usize, got: usize },
    #[error("oracle contract breach: {0}")]
    ContractBreach(String),
    #[error("tree collection missed a cycle: tree ratio {tree_ratio}, exact ratio {exact_ratio}")]
    KappaViolation { tree_ratio: f64, exact_ratio: f64 },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}
