use thiserror::Error;

/// Errors raised by lattice, polytope, functional and search operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis is singular: |det| = {det:e} below threshold {threshold:e}")]
    SingularBasis { det: f64, threshold: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension {dim} exceeds the supported maximum {max} for {operation}")]
    DimensionTooLarge {
        operation: &'static str,
        dim: usize,
        max: usize,
    },
    #[error("lattice enumeration exceeded the budget of {budget} candidates")]
    EnumerationBudgetExceeded { budget: u64 },
    #[error("half-space intersection is unbounded")]
    Unbounded,
    #[error("half-space intersection has empty interior")]
    EmptyInterior,
    #[error("too many half-spaces ({count}) for dimension {dim}")]
    TooManyHalfSpaces { count: usize, dim: usize },
    #[error("degenerate facet: {0}")]
    DegenerateFacet(String),
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("fractional order s = {0} is outside (0, 1)")]
    SNotInRange(f64),
    #[error("Riesz exponent alpha = {alpha} is outside (0, {dim})")]
    AlphaNotInRange { alpha: f64, dim: usize },
    #[error("polytope has zero inradius")]
    ZeroInradius,
    #[error("degenerate face: {0}")]
    DegenerateFace(String),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("degenerate lattice: Gram condition number {condition:e} exceeds cap {cap:e}")]
    DegenerateLattice { condition: f64, cap: f64 },
    #[error("all {0} restarts failed")]
    AllRestartsFailed(usize),
    #[error("format `{format}` is not supported in dimension {dim}")]
    UnsupportedFormatForDim { format: String, dim: usize },
}

impl Error {
    /// Name of the subsystem an error originates from, used to qualify CLI messages.
    pub fn module(&self) -> &'static str {
        match self {
            Error::SingularBasis { .. }
            | Error::UnknownCatalogEntry(_)
            | Error::DimensionMismatch(_)
            | Error::DimensionTooLarge { .. }
            | Error::EnumerationBudgetExceeded { .. } => "lattice",
            Error::Unbounded
            | Error::EmptyInterior
            | Error::TooManyHalfSpaces { .. }
            | Error::DegenerateFacet(_)
            | Error::LpFailure(_)
            | Error::UnsupportedFormatForDim { .. } => "polytope",
            Error::SNotInRange(_) | Error::AlphaNotInRange { .. } | Error::ZeroInradius => {
                "functionals"
            }
            Error::DegenerateFace(_) | Error::UnsupportedDimension(_) => "plateau",
            Error::DegenerateLattice { .. } | Error::AllRestartsFailed(_) => "optimizer",
            Error::InvalidInput(_) => "input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
