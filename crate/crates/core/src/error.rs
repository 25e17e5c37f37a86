use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: only d = 1 is implemented")]
    UnsupportedDimension(usize),

    #[error("cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("band {band} exceeds grid cutoff {cutoff}")]
    BandTooLarge { band: usize, cutoff: usize },

    #[error("coefficient for mode {mode} lies outside the grid band |k| <= {cutoff}")]
    ModeOutOfBand { mode: i64, cutoff: usize },

    #[error("grid mismatch: cutoff {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("unknown built-in name `{0}`")]
    UnknownName(String),

    #[error("potential is not conjugate-symmetric at mode {0}")]
    NotConjugateSymmetric(i64),

    #[error("operator is not symmetric (max |A - A*| = {0:e})")]
    NotSymmetric(f64),

    #[error("alpha must exceed {min}, got {alpha}")]
    InvalidAlpha { alpha: f64, min: f64 },

    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),

    #[error("stability function pole at z = 2")]
    Pole,

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("operator is not unitary (||U*U - I|| = {0:e})")]
    NotUnitary(f64),

    #[error("eigenvalue phase {phase} within {margin:e} of the branch cut at ±π (resonant step size)")]
    BranchAmbiguity { phase: f64, margin: f64 },

    #[error("recursion needs {needed} operator products, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("requested truncation order {requested} but only {available} corrections are available")]
    TruncationOrder { requested: usize, available: usize },

    #[error("eigendecomposition failed to converge")]
    NoConvergence,
}

impl Error {
    /// True for failures of the numerics (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::NotSymmetric(_)
                | Error::Pole
                | Error::NotUnitary(_)
                | Error::BranchAmbiguity { .. }
                | Error::NoConvergence
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
