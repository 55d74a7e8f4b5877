//! Desk-scale, exact analysis of cooperation in two-user multiple access
//! channels.
//!
//! The crate revolves around five building blocks:
//!
//! * [`channel`] — finite discrete memoryless MACs, their n-th extensions,
//!   and entropy/mutual-information primitives (all in bits).
//! * [`code`] — explicit `(n, M1, M2, J)` cooperation codes, exact error
//!   matrices, and the `(r1, r2)` error spectrum that interpolates between
//!   average and maximal error.
//! * [`blockperm`] — existence bounds and search for permutation pairs that
//!   place a zero in every `k × k` block of a `(0,1)`-matrix.
//! * [`transform`] — constructive code transformations that convert small
//!   average error into small blockwise error at slightly inflated
//!   cooperation budgets, plus the conferencing best-quarter transformation.
//! * [`capacity`] — support functions `C^alpha`, region reconstruction from
//!   support samples, closed-form bounds for the contraction MAC, and
//!   conferencing rate quantities via numerical optimization.
//!
//! Numeric code is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which is what the CLI and
//! the test suites use.

pub mod blockperm;
pub mod capacity;
pub mod channel;
pub mod cli;
pub mod code;
pub mod files;
pub mod report;
pub mod scalar;
pub mod transform;

mod error;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// How a reported value is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// The value was computed by full enumeration.
    Exact,
    /// The value is achievable; the optimum may be lower.
    UpperBound,
    /// The value is achievable; the optimum may be higher.
    LowerBound,
    /// No guarantee is attached.
    Uncertified,
}

impl Certificate {
    /// The label embedded in reports.
    pub fn label(self) -> &'static str {
        match self {
            Certificate::Exact => "exact",
            Certificate::UpperBound => "upper_bound",
            Certificate::LowerBound => "lower_bound",
            Certificate::Uncertified => "uncertified",
        }
    }
}

/// Double-precision MAC, the instantiation used by the CLI.
pub type DiscreteMac = channel::DiscreteMac<f64>;
/// Double-precision product input distribution.
pub type ProductInput = channel::ProductInput<f64>;
/// Double-precision joint distribution over (U, X1, X2, Y).
pub type JointDist = channel::JointDist<f64>;
/// Double-precision link-capacity pair.
pub type LinkCapacities = code::LinkCapacities<f64>;
/// Double-precision cooperation code.
pub type CooperationCode = code::CooperationCode<f64>;
/// Double-precision error matrix.
pub type ErrorMatrix = code::ErrorMatrix<f64>;
/// Double-precision support curve.
pub type SupportCurve = capacity::SupportCurve<f64>;
/// Double-precision region polytope.
pub type RegionPolytope = capacity::RegionPolytope<f64>;
