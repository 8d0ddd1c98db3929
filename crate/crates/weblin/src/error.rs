use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("jet shape mismatch: expected (nvars={}, order={}), got (nvars={}, order={})",
        expected.0, expected.1, got.0, got.1)]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("division by a non-unit jet (constant term magnitude {magnitude:.3e})")]
    DivisionByNonUnit { magnitude: f64 },

    #[error("domain error: {func} applied to constant term {value}")]
    DomainError { func: &'static str, value: f64 },

    #[error("jet order exhausted: operation needs order >= {needed}, have {have}")]
    OrderExhausted { needed: usize, have: usize },

    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("evaluation failed at offset {offset}: {source}")]
    EvalAt {
        offset: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular system at base point: {detail}")]
    SingularAtPoint { detail: String },

    #[error("foliation {foliation} fails transversality: {detail}")]
    TransversalityFailure { foliation: usize, detail: String },

    #[error("foliation {foliation} slope field is not integrable (residual {residual:.3e})")]
    IntegrabilityFailure { foliation: usize, residual: f64 },

    #[error("underdetermined web: {equations} equations for {unknowns} unknowns")]
    UnderdeterminedWeb { equations: usize, unknowns: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach a source-span offset to an evaluation error, without re-wrapping
    /// errors that already carry one.
    pub(crate) fn at_offset(self, offset: usize) -> Error {
        match self {
            e @ Error::EvalAt { .. } => e,
            e @ Error::Syntax { .. } => e,
            e @ Error::UnknownIdentifier { .. } => e,
            e => Error::EvalAt {
                offset,
                source: Box::new(e),
            },
        }
    }
}
