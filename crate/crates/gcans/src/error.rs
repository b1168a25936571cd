use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty Hamiltonian: {0}")]
    EmptyObservable(String),

    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },

    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParameterMismatch { expected: usize, got: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("dense diagonalization limited to {max} qubits, got {got}")]
    TooManyQubits { got: usize, max: usize },

    #[error("all sampling weights are zero")]
    ZeroWeights,

    #[error("deterministic allocation starves term {term} ({shots} shots over {terms} terms)")]
    StarvedTerm {
        term: usize,
        shots: u64,
        terms: usize,
    },

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("shot budget {budget} cannot cover one iteration ({required} shots)")]
    BudgetTooSmall { budget: u64, required: u64 },

    #[error("gradient is zero; idealized shot rule is undefined")]
    ZeroGradient,

    #[error("gap sequence has no positive prefix to fit")]
    DegenerateGaps,
}
