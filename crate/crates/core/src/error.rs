use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Regime,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Regime => 3,
            ErrorCategory::Numerical => 4,
            ErrorCategory::Io => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Regime => "regime",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }
}

/// A label that could not be assigned to a unique eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub struct ContestedLabel {
    pub label: Vec<u8>,
    /// Candidate eigenindices with their squared overlaps.
    pub candidates: Vec<(usize, f64)>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid circuit specification: {0}")]
    InvalidSpec(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("outside the single-well regime: {0}")]
    Regime(String),

    #[error("singular matrix (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("ambiguous state labeling for {} label(s)", .0.len())]
    Labeling(Vec<ContestedLabel>),

    #[error("perturbative pole at {resonance}: |denominator| = {magnitude:.3e} rad/ns")]
    Pole { resonance: String, magnitude: f64 },

    #[error("degenerate case: {0}")]
    Degenerate(String),

    #[error("Hilbert space dimension {dim} exceeds budget {budget}; use an excitation cutoff")]
    Resource { dim: usize, budget: usize },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("target frequency {target_ghz:.6} GHz outside reachable range [{min_ghz:.6}, {max_ghz:.6}] GHz")]
    Unreachable {
        target_ghz: f64,
        min_ghz: f64,
        max_ghz: f64,
    },

    #[error("virtual-Z compensation unreliable: |U_kk| = {magnitude:.3e} for computational state {index}")]
    Compensation { index: usize, magnitude: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidSpec(_) | Error::Config(_) => ErrorCategory::Config,
            Error::Regime(_) | Error::Unreachable { .. } | Error::Degenerate(_) => {
                ErrorCategory::Regime
            }
            Error::Singular { .. }
            | Error::Labeling(_)
            | Error::Pole { .. }
            | Error::Resource { .. }
            | Error::Convergence(_)
            | Error::Compensation { .. } => ErrorCategory::Numerical,
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}
