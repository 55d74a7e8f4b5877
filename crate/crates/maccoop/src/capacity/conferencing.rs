//! Weighted capacity quantities under conference links.
//!
//! With one-shot conferencing at link rates `c12` (user 1 to user 2) and
//! `c21` (user 2 to user 1), the achievable region over a fixed input
//! `p(u) p(x1|u) p(x2|u)` is
//!
//! ```text
//! (R1 - c12)+ <= I(X1; Y | U, X2)
//! (R2 - c21)+ <= I(X2; Y | U, X1)
//! (R1 - c12)+ + (R2 - c21)+ <= I(X1, X2; Y | U)
//! R1 + R2 <= I(X1, X2; Y)
//! ```
//!
//! Because the first and second right-hand sides never exceed the third,
//! the clipped constraints collapse to plain caps `R1 <= c12 + a`,
//! `R2 <= c21 + b`, `R1 + R2 <= min(c12 + c21 + c, d)`, and the weighted
//! maximum over `(R1, R2)` is a tiny linear program solved at a vertex.
//! The outer maximization over inputs reuses the coordinate-ascent
//! backend, so every reported value is a lower bound attained by the
//! reported input.

use serde::Serialize;

use crate::channel::{mutual_info, DiscreteMac, Grouping, ProductInput};
use crate::scalar::Real;
use crate::{Certificate, Error, Result};

use super::check_alpha;
use super::optimize::{ascend_multistart, OptimizeOutcome, OptimizerConfig};

fn check_link<F: Real>(value: F, name: &str) -> Result<()> {
    if !value.is_finite() || value < F::zero() {
        return Err(Error::validation(format!(
            "{name} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Simplex lengths for `p(u)`, the rows of `p(x1|u)`, and the rows of
/// `p(x2|u)`.
fn state_dims<F: Real>(mac: &DiscreteMac<F>, u: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(1 + 2 * u);
    dims.push(u);
    dims.extend(std::iter::repeat_n(mac.n1(), u));
    dims.extend(std::iter::repeat_n(mac.n2(), u));
    dims
}

fn input_from_state<F: Real>(state: &[Vec<F>], u: usize) -> Result<ProductInput<F>> {
    ProductInput::with_aux(
        state[0].clone(),
        state[1..1 + u].to_vec(),
        state[1 + u..1 + 2 * u].to_vec(),
    )
}

/// Converts caller seed points into ascent states, checking they match
/// the channel and the configured auxiliary cardinality.
fn seed_states<F: Real>(
    mac: &DiscreteMac<F>,
    config: &OptimizerConfig<F>,
) -> Result<Vec<Vec<Vec<F>>>> {
    let u = config.u_cardinality;
    let mut out = Vec::with_capacity(config.seed_points.len());
    for point in &config.seed_points {
        if point.u_cardinality() != u {
            return Err(Error::validation(format!(
                "seed input has auxiliary cardinality {}, config says {u}",
                point.u_cardinality()
            )));
        }
        if point.px1(0).len() != mac.n1() || point.px2(0).len() != mac.n2() {
            return Err(Error::validation(
                "seed input alphabets do not match the channel",
            ));
        }
        let mut state = Vec::with_capacity(1 + 2 * u);
        state.push(point.pu().to_vec());
        for row in 0..u {
            state.push(point.px1(row).to_vec());
        }
        for row in 0..u {
            state.push(point.px2(row).to_vec());
        }
        out.push(state);
    }
    Ok(out)
}

/// Maximizes `alpha R1 + (1 - alpha) R2` over `R1 <= r1_cap`,
/// `R2 <= r2_cap`, `R1 + R2 <= sum_cap`, `R >= 0`. The optimum sits at a
/// vertex; all caps are nonnegative here.
fn lp_value<F: Real>(alpha: F, r1_cap: F, r2_cap: F, sum_cap: F) -> F {
    let mut best = F::zero();
    let mut consider = |r1: F, r2: F| {
        let v = alpha * r1 + (F::one() - alpha) * r2;
        if v > best {
            best = v;
        }
    };
    consider(r1_cap.min(sum_cap), F::zero());
    consider(F::zero(), r2_cap.min(sum_cap));
    if sum_cap >= r1_cap {
        consider(r1_cap, r2_cap.min(sum_cap - r1_cap));
    }
    if sum_cap >= r2_cap {
        consider(r1_cap.min(sum_cap - r2_cap), r2_cap);
    }
    best
}

/// The four informations of the region at one input, in the order
/// `(a, b, c, d)` used by the inequalities above.
fn region_terms<F: Real>(
    state: &[Vec<F>],
    u: usize,
    mac: &DiscreteMac<F>,
) -> Option<(F, F, F, F)> {
    let input = input_from_state(state, u).ok()?;
    let joint = input.joint_with(mac).ok()?;
    Some((
        mutual_info(&joint, Grouping::X1YGivenUX2),
        mutual_info(&joint, Grouping::X2YGivenUX1),
        mutual_info(&joint, Grouping::X1X2YGivenU),
        mutual_info(&joint, Grouping::X1X2Y),
    ))
}

/// Shared outer maximization over `p(u) p(x1|u) p(x2|u)`.
fn maximize_with_aux<F, O>(
    mac: &DiscreteMac<F>,
    config: &OptimizerConfig<F>,
    objective: O,
) -> Result<OptimizeOutcome<F>>
where
    F: Real,
    O: Fn(&[Vec<F>]) -> F + Sync,
{
    let u = config.u_cardinality;
    if u == 0 {
        return Err(Error::validation("auxiliary cardinality must be at least 1"));
    }
    let seeds = seed_states(mac, config)?;
    let best = ascend_multistart(&state_dims(mac, u), seeds, config, objective)?;
    let input = input_from_state(&best.state, u)?;
    Ok(OptimizeOutcome {
        value: best.value,
        certificate: Certificate::LowerBound,
        input,
        converged: best.converged,
        evaluations: best.evaluations,
        best_restart: best.index,
    })
}

/// Weighted capacity lower bound `max alpha R1 + (1 - alpha) R2` over the
/// conferencing region with link rates `(c12, c21)` and auxiliary
/// cardinality `config.u_cardinality`.
///
/// # Errors
/// Validation error on `alpha` outside `[0, 1]`, negative or non-finite
/// link rates, a degenerate config, or mismatched seed points.
pub fn conferencing_calpha<F: Real>(
    mac: &DiscreteMac<F>,
    c12: F,
    c21: F,
    alpha: F,
    config: &OptimizerConfig<F>,
) -> Result<OptimizeOutcome<F>> {
    check_alpha(alpha)?;
    check_link(c12, "c12")?;
    check_link(c21, "c21")?;
    let u = config.u_cardinality;
    let objective = |state: &[Vec<F>]| -> F {
        match region_terms(state, u, mac) {
            Some((a, b, c, d)) => lp_value(alpha, c12 + a, c21 + b, (c12 + c21 + c).min(d)),
            None => F::neg_infinity(),
        }
    };
    maximize_with_aux(mac, config, objective)
}

/// The two single-user intercepts under conferencing:
/// `R1* = max min(I(X1;Y|U,X2) + c12, I(X1,X2;Y))` and the mirrored
/// `R2*`, each maximized over `p(u) p(x1|u) p(x2|u)` by the same backend.
///
/// # Errors
/// Validation error on negative or non-finite link rates, a degenerate
/// config, or mismatched seed points.
pub fn rstar<F: Real>(
    mac: &DiscreteMac<F>,
    c12: F,
    c21: F,
    config: &OptimizerConfig<F>,
) -> Result<(OptimizeOutcome<F>, OptimizeOutcome<F>)> {
    check_link(c12, "c12")?;
    check_link(c21, "c21")?;
    let u = config.u_cardinality;
    let first = maximize_with_aux(mac, config, |state: &[Vec<F>]| {
        match region_terms(state, u, mac) {
            Some((a, _, _, d)) => (a + c12).min(d),
            None => F::neg_infinity(),
        }
    })?;
    let second = maximize_with_aux(mac, config, |state: &[Vec<F>]| {
        match region_terms(state, u, mac) {
            Some((_, b, _, d)) => (b + c21).min(d),
            None => F::neg_infinity(),
        }
    })?;
    Ok((first, second))
}

/// One row of a continuity check at link rates `(c12, c21)`.
///
/// The two bounds restate the reductions to a silenced link:
/// `value <= C(c12, 0) + (1 - alpha) c21` and
/// `value <= C(0, c21) + alpha c12`. `pigeonhole_offset` is the
/// `(c12 + c21) / 2` slack that a maximal-error argument pays when both
/// links are folded away at `alpha = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityRow<F> {
    pub c12: F,
    pub c21: F,
    pub value: F,
    pub bound_from_zero_c21: F,
    pub bound_from_zero_c12: F,
    pub within_tolerance: bool,
    pub pigeonhole_offset: F,
}

/// Evaluates the link-silencing continuity bounds on a grid of link-rate
/// pairs, running every side through the identical optimizer config.
///
/// # Errors
/// Validation error on bad `alpha`, negative or non-finite `tol`, or any
/// invalid pair.
pub fn continuity_checks<F: Real>(
    mac: &DiscreteMac<F>,
    pairs: &[(F, F)],
    alpha: F,
    tol: F,
    config: &OptimizerConfig<F>,
) -> Result<Vec<ContinuityRow<F>>> {
    check_alpha(alpha)?;
    if !tol.is_finite() || tol < F::zero() {
        return Err(Error::validation("tolerance must be finite and nonnegative"));
    }
    let one = F::one();
    let two = F::of_f64(2.0);
    pairs
        .iter()
        .map(|&(c12, c21)| {
            let value = conferencing_calpha(mac, c12, c21, alpha, config)?.value;
            let base12 = conferencing_calpha(mac, c12, F::zero(), alpha, config)?.value;
            let base21 = conferencing_calpha(mac, F::zero(), c21, alpha, config)?.value;
            let bound_from_zero_c21 = base12 + (one - alpha) * c21;
            let bound_from_zero_c12 = base21 + alpha * c12;
            let within_tolerance =
                value <= bound_from_zero_c21 + tol && value <= bound_from_zero_c12 + tol;
            Ok(ContinuityRow {
                c12,
                c21,
                value,
                bound_from_zero_c21,
                bound_from_zero_c12,
                within_tolerance,
                pigeonhole_offset: (c12 + c21) / two,
            })
        })
        .collect()
}
