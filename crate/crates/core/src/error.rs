use thiserror::Error;

/// Errors surfaced by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },

    #[error("variable z{index} out of range for dimension {dimension}")]
    VariableOutOfRange { index: usize, dimension: usize },

    #[error("domain error in `{subexpr}`: {reason}{}", at_point(.point))]
    Domain {
        subexpr: String,
        reason: String,
        point: Option<Vec<[f64; 2]>>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate gradient: |grad f| = {norm:e} <= {tol:e}")]
    DegenerateGradient { norm: f64, tol: f64 },

    #[error("function is not real-valued: imaginary part {imag:e} exceeds {tol:e}")]
    NotRealValued { imag: f64, tol: f64 },

    #[error("no interior point found among {trials} trial samples")]
    NoInteriorPoint { trials: usize },

    #[error("point is outside the domain")]
    PointOutsideDomain,

    #[error("sampling exhausted: accepted {accepted} of {attempted} draws")]
    SamplingExhausted { accepted: usize, attempted: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn at_point(point: &Option<Vec<[f64; 2]>>) -> String {
    match point {
        Some(p) => format!(" at {p:?}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a sample point to a domain error; other variants pass through.
    pub fn with_point(self, z: &crate::CPoint) -> Self {
        match self {
            Error::Domain {
                subexpr, reason, ..
            } => Error::Domain {
                subexpr,
                reason,
                point: Some(z.iter().map(|c| [c.re, c.im]).collect()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
