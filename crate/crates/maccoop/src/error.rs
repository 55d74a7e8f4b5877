use thiserror::Error;

/// Crate-wide error type.
///
/// Exit-code mapping for the CLI: validation, size-limit, budget, and I/O
/// problems exit 1; an exhausted search without a certificate exits 2;
/// usage errors are handled by the argument parser and exit 64.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input.
    #[error("validation: {0}")]
    Validation(String),

    /// A request exceeded an enumeration guard.
    #[error("size limit: {0}")]
    SizeLimit(String),

    /// An exact computation was requested beyond the exhaustive budget.
    #[error("exact search over {pairs} cases exceeds the budget of {limit}")]
    ExactBudget {
        /// Number of cases the exact search would visit.
        pairs: u128,
        /// Configured ceiling.
        limit: u128,
    },

    /// A permutation search ended without a good pair.
    ///
    /// With `exhaustive` set the failure is definitive: no good pair exists.
    /// Otherwise the randomized budget ran out and the payload carries the
    /// best attempt seen.
    #[error("{} (existence bound {bound:.6e}, best attempt leaves {violations} empty blocks)",
        if *.exhaustive { "no good permutation pair exists" } else { "permutation search budget exhausted" })]
    UncertifiedPlan {
        /// Existence bound computed for the instance.
        bound: f64,
        /// Empty blocks left by the best attempt.
        violations: usize,
        /// Row permutation of the best attempt.
        best_pi1: Vec<usize>,
        /// Column permutation of the best attempt.
        best_pi2: Vec<usize>,
        /// True when the search space was fully enumerated.
        exhaustive: bool,
    },

    /// Filesystem failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// JSON parse or serialization failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Builds a validation error from any message.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UncertifiedPlan { .. } => 2,
            _ => 1,
        }
    }
}
