use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel {kernel} cannot be applied to {column} data")]
    KernelMismatch {
        kernel: &'static str,
        column: &'static str,
    },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Gram matrix must be centered")]
    NotCentered,

    #[error("sample too small: need at least {min}, got {got}")]
    TooSmall { min: usize, got: usize },

    #[error("empty cell: {0}")]
    EmptyCell(String),

    #[error("every stratum was skipped because of empty cells")]
    AllStrataSkipped,

    #[error("rank {requested} exceeds available rank {available}")]
    RankTooLarge { requested: usize, available: usize },

    #[error("linear program is {0}")]
    Lp(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("{}", format_location(*line, message))]
    Format { line: Option<usize>, message: String },

    #[error("evidence has probability zero")]
    ImpossibleEvidence,

    #[error("state space of {0} configurations exceeds the enumeration budget")]
    StateSpaceTooLarge(u128),
}

fn format_location(line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("line {l}: {message}"),
        None => message.to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
