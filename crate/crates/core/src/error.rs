//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A user or channel index does not exist in the instance.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// An operation-specific precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An assignment breaks a structural invariant (overlap between private
    /// and shared membership, out-of-range indices, ...).
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    /// A trace is missing, or does not describe the assignment it was
    /// presented with.
    #[error("assignment trace missing or inconsistent: {0}")]
    InvalidTrace(String),

    /// No window up to `w_max` meets the first-collision target.
    #[error("no window W <= {w_max} meets the collision target; P_c({w_max}) = {p_at_w_max:.6}")]
    WindowSolverFailure { w_max: u32, p_at_w_max: f64 },

    /// The backoff-plus-handshake time does not fit in one cycle.
    #[error("MAC overhead {overhead:.4} >= 1 at W = {window}: cycle shorter than the handshake")]
    OverheadTooLarge { window: u32, overhead: f64 },

    /// A brute-force oracle was asked for more work than its size guard
    /// permits. Oracles never approximate, so they refuse instead.
    #[error("oracle size guard exceeded: {0}")]
    OracleGuard(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
