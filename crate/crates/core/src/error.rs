use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Gram matrix is {found}x{found} but the degree-{basis_degree} basis has {expected} monomials")]
    GramSize {
        basis_degree: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("relaxation order {order} below minimum {minimum} required by {what}")]
    RelaxationOrder {
        order: usize,
        minimum: usize,
        what: String,
    },

    #[error("solver failure ({status}): {detail}")]
    Solver { status: String, detail: String },

    #[error("set may be unbounded: relaxation for coordinate {coordinate} ({side} side) is unbounded")]
    Unbounded { coordinate: usize, side: &'static str },

    #[error("polynomial density has zero mass on the fiber at coordinate {coordinate}")]
    DegenerateFiber { coordinate: usize },

    #[error("sampler stalled: {accepted} accepted out of {proposals} proposals; dominating polynomial too loose")]
    SamplerStalled { accepted: u64, proposals: u64 },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
