//! Weighted capacity quantities for two-user channels.
//!
//! Everything here works with the weighted combination
//! `alpha R1 + (1 - alpha) R2` for a weight `alpha` in `[0, 1]`:
//!
//! - [`geometry`] relates rate regions in the plane to their support
//!   functions `alpha -> C^alpha` and back;
//! - [`optimize`] maximizes the no-cooperation average-error combination
//!   over product inputs by multi-start coordinate ascent;
//! - [`conferencing`] does the same over inputs with an auxiliary
//!   variable for channels with conference links, including the
//!   single-user intercepts and continuity checks;
//! - [`dueck`] evaluates the closed-form contraction-channel bounds that
//!   separate maximal- from average-error behavior.
//!
//! Optimizer outputs are always labeled lower bounds: the reported input
//! attains the reported value, and no global-optimality claim is made.

pub mod conferencing;
pub mod dueck;
pub mod geometry;
pub mod optimize;

pub use conferencing::{conferencing_calpha, continuity_checks, rstar, ContinuityRow};
pub use dueck::{dueck_avg_lower, dueck_gap_report, dueck_max_upper, dueck_pstar, DueckGapRow};
pub use geometry::{c_alpha_of_polytope, region_from_support, RegionPolytope, SupportCurve};
pub use optimize::{mac_avg_calpha, OptimizeOutcome, OptimizerConfig};

use crate::scalar::Real;
use crate::{Error, Result};

/// Shared weight validation.
pub(crate) fn check_alpha<F: Real>(alpha: F) -> Result<()> {
    if alpha.is_nan() || alpha < F::zero() || alpha > F::one() {
        return Err(Error::validation("alpha must lie in [0, 1]"));
    }
    Ok(())
}
