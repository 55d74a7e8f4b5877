//! Closed-form bounds for the contraction channel, where the maximal- and
//! average-error weighted capacities provably separate.
//!
//! For the weight `alpha` the maximal-error quantity is capped by
//!
//! ```text
//! alpha (log2 3 - 1) + (1 - alpha) log2 (1 + 2^{alpha / (1 - alpha)})
//! ```
//!
//! while average error achieves at least
//!
//! ```text
//! (1 - alpha) h(p*) + alpha (log2 3 - p*/3),
//! p* = 1 / (1 + 2^{alpha / (1 - alpha)}),
//! ```
//!
//! with `h` the binary entropy. Both continue to `log2 3` as
//! `alpha -> 1`. The gap between them is `(2 alpha / 3) p*`, strictly
//! positive for `alpha` strictly inside the unit interval and as large as
//! `1/9` at `alpha = 1/2`.

use serde::Serialize;

use crate::channel::binary_entropy;
use crate::scalar::Real;
use crate::Result;

use super::check_alpha;

/// `log2(1 + 2^t)` without overflow for large `t`.
fn log2_one_plus_exp2<F: Real>(t: F) -> F {
    let two = F::of_f64(2.0);
    t.max(F::zero()) + (F::one() + two.powf(-t.abs())).log2()
}

/// The crossover probability `p* = 1 / (1 + 2^{alpha/(1-alpha)})`
/// optimizing the average-error bound; continued to `0` at `alpha = 1`.
///
/// # Errors
/// Validation error when `alpha` is outside `[0, 1]`.
pub fn dueck_pstar<F: Real>(alpha: F) -> Result<F> {
    check_alpha(alpha)?;
    if alpha == F::one() {
        return Ok(F::zero());
    }
    let two = F::of_f64(2.0);
    let t = alpha / (F::one() - alpha);
    Ok(F::one() / (F::one() + two.powf(t)))
}

/// Upper bound on the maximal-error weighted capacity of the contraction
/// channel; equals `log2 3` in the limit `alpha -> 1`.
///
/// # Errors
/// Validation error when `alpha` is outside `[0, 1]`.
pub fn dueck_max_upper<F: Real>(alpha: F) -> Result<F> {
    check_alpha(alpha)?;
    let log2_3 = F::of_f64(3.0).log2();
    if alpha == F::one() {
        return Ok(log2_3);
    }
    let t = alpha / (F::one() - alpha);
    Ok(alpha * (log2_3 - F::one()) + (F::one() - alpha) * log2_one_plus_exp2(t))
}

/// Lower bound on the average-error weighted capacity of the contraction
/// channel, `(1 - alpha) h(p*) + alpha (log2 3 - p*/3)`.
///
/// # Errors
/// Validation error when `alpha` is outside `[0, 1]`.
pub fn dueck_avg_lower<F: Real>(alpha: F) -> Result<F> {
    check_alpha(alpha)?;
    let log2_3 = F::of_f64(3.0).log2();
    let p = dueck_pstar(alpha)?;
    Ok((F::one() - alpha) * binary_entropy(p) + alpha * (log2_3 - p / F::of_f64(3.0)))
}

/// One row of a bound comparison: the average-error lower bound sits above
/// the maximal-error upper bound by `gap = lower - upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DueckGapRow<F> {
    pub alpha: F,
    pub lower: F,
    pub upper: F,
    pub gap: F,
}

/// Evaluates both bounds and their gap on a grid of weights.
///
/// # Errors
/// Validation error when any `alpha` is outside `[0, 1]`.
pub fn dueck_gap_report<F: Real>(alphas: &[F]) -> Result<Vec<DueckGapRow<F>>> {
    alphas
        .iter()
        .map(|&alpha| {
            let lower = dueck_avg_lower(alpha)?;
            let upper = dueck_max_upper(alpha)?;
            let gap = lower - upper;
            debug_assert!(
                gap >= -F::of_f64(1e-12),
                "average lower bound fell below the maximal upper bound"
            );
            Ok(DueckGapRow {
                alpha,
                lower,
                upper,
                gap,
            })
        })
        .collect()
}
