use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("not a valid density matrix: {0}")]
    InvalidState(String),
    #[error("rank {rank} out of range for dimension {dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("depolarizing parameter {0} outside its allowed range")]
    BadLambda(f64),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("block index {index} out of range 1..={blocks}")]
    BadBlockIndex { index: usize, blocks: usize },
    #[error("index {index} out of range for {len} members")]
    BadIndex { index: usize, len: usize },
    #[error("global dimension 2^{qubits} exceeds the limit 2^{limit}")]
    SizeLimit { qubits: usize, limit: usize },
    #[error("bound (n-1)*base^(2k) <= 1 cannot be reached with lambda = 0 and n = {0}")]
    Unreachable(usize),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("layer {layer}: {reason}")]
    BadLayer { layer: usize, reason: String },
    #[error("numeric overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
