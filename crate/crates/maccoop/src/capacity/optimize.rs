//! Multi-start coordinate ascent over product input distributions.
//!
//! The weighted average-error quantity of a two-user channel without
//! cooperation is, for weight `alpha <= 1/2`,
//!
//! ```text
//! max over p(x1) p(x2) of  alpha I(X1;Y) + (1 - alpha) I(X2;Y|X1)
//! ```
//!
//! and symmetrically `alpha I(X1;Y|X2) + (1 - alpha) I(X2;Y)` for
//! `alpha >= 1/2` (the two agree at `1/2`, where both equal half the sum
//! rate). The maximization is nonconvex over the product family, so the
//! optimizer reports certified lower bounds only: every returned value is
//! attained by the returned input. Deterministic channels are routed
//! through the equivalent entropy forms `alpha H(Y) + (1-2 alpha) H(Y|X1)`
//! and `(1-alpha) H(Y) + (2 alpha - 1) H(Y|X2)`, which skip the vanishing
//! `H(Y|X1,X2)` terms.
//!
//! Starts run independently (in parallel) and the best result wins;
//! ties prefer the lowest start index so outcomes do not depend on the
//! worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{mutual_info, DiscreteMac, Grouping, ProductInput, Var};
use crate::scalar::Real;
use crate::{Certificate, Error, Result};

use super::check_alpha;

/// Minimum objective gain for a move to be kept.
const IMPROVE_TOL: f64 = 1e-12;

/// Knobs for the simplex coordinate-ascent optimizer.
#[derive(Debug, Clone)]
pub struct OptimizerConfig<F> {
    /// Mass-transfer grid: each trial moves a fraction
    /// `k / (grid_points - 1)` of a coordinate, `k = 1..grid_points-1`.
    pub grid_points: usize,
    /// Full coordinate sweeps per start before giving up.
    pub sweeps: usize,
    /// Random restarts tried in addition to the uniform start.
    pub restarts: usize,
    /// Seed for restart generation.
    pub seed: u64,
    /// Auxiliary alphabet size used by conferencing objectives.
    pub u_cardinality: usize,
    /// Caller-chosen starting inputs evaluated alongside the generated
    /// starts (witness distributions, warm starts).
    pub seed_points: Vec<ProductInput<F>>,
}

impl<F> Default for OptimizerConfig<F> {
    fn default() -> Self {
        OptimizerConfig {
            grid_points: 21,
            sweeps: 8,
            restarts: 16,
            seed: 0,
            u_cardinality: 4,
            seed_points: Vec::new(),
        }
    }
}

/// Result of one maximization run.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome<F> {
    /// Best objective value found, in bits.
    pub value: F,
    /// Always [`Certificate::LowerBound`]: ascent proves achievability,
    /// never global optimality.
    pub certificate: Certificate,
    /// The input distribution attaining `value`.
    pub input: ProductInput<F>,
    /// Whether the winning start finished with a sweep that found no
    /// improving move.
    pub converged: bool,
    /// Objective evaluations summed over all starts.
    pub evaluations: usize,
    /// Which start won: `0` is the uniform start, `1..=restarts` are the
    /// random restarts, higher indices are caller seed points in order.
    pub best_restart: usize,
}

/// Winner of a multi-start ascent, before wrapping in a public outcome.
pub(crate) struct AscentBest<F> {
    pub(crate) value: F,
    pub(crate) state: Vec<Vec<F>>,
    pub(crate) converged: bool,
    pub(crate) evaluations: usize,
    pub(crate) index: usize,
}

fn guarded<F: Real>(value: F) -> F {
    if value.is_nan() {
        F::neg_infinity()
    } else {
        value
    }
}

fn uniform_state<F: Real>(dims: &[usize]) -> Vec<Vec<F>> {
    dims.iter()
        .map(|&d| vec![F::one() / F::of_usize(d); d])
        .collect()
}

/// Random point on each simplex via normalized exponentials.
fn random_state<F: Real>(dims: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<F>> {
    dims.iter()
        .map(|&d| {
            let raw: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let sum: f64 = raw.iter().sum();
            if sum <= 0.0 {
                vec![F::one() / F::of_usize(d); d]
            } else {
                raw.into_iter().map(|e| F::of_f64(e / sum)).collect()
            }
        })
        .collect()
}

fn normalize<F: Real>(v: &mut [F]) {
    let mut sum = F::zero();
    for &x in v.iter() {
        sum = sum + x;
    }
    if sum > F::zero() {
        for x in v.iter_mut() {
            *x = *x / sum;
        }
    }
}

/// Greedy coordinate ascent from one start: for every simplex and every
/// ordered coordinate pair, try grid-quantized mass transfers and keep
/// any move that improves the objective. Stops early after a sweep with
/// no accepted move.
fn run_ascent<F, O>(
    mut state: Vec<Vec<F>>,
    config: &OptimizerConfig<F>,
    objective: &O,
) -> (F, Vec<Vec<F>>, bool, usize)
where
    F: Real,
    O: Fn(&[Vec<F>]) -> F + Sync,
{
    let improve = F::of_f64(IMPROVE_TOL);
    let steps = F::of_usize(config.grid_points - 1);
    let mut evaluations = 1usize;
    let mut best = guarded(objective(&state));
    let mut converged = false;
    for _ in 0..config.sweeps {
        let mut improved = false;
        for vi in 0..state.len() {
            let d = state[vi].len();
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    for k in 1..config.grid_points {
                        let mass = state[vi][i];
                        let tau = mass * F::of_usize(k) / steps;
                        if tau <= F::zero() {
                            break;
                        }
                        let saved = state[vi].clone();
                        state[vi][i] = state[vi][i] - tau;
                        state[vi][j] = state[vi][j] + tau;
                        normalize(&mut state[vi]);
                        let value = guarded(objective(&state));
                        evaluations += 1;
                        if value > best + improve {
                            best = value;
                            improved = true;
                        } else {
                            state[vi] = saved;
                        }
                    }
                }
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }
    (best, state, converged, evaluations)
}

/// Runs the uniform start, `config.restarts` random starts, and the given
/// seed states, in parallel, and returns the best result. Deterministic
/// for a fixed config: per-start RNG streams depend only on the start
/// index and ties go to the lowest index, so the reduction is independent
/// of scheduling and worker count.
pub(crate) fn ascend_multistart<F, O>(
    dims: &[usize],
    seed_states: Vec<Vec<Vec<F>>>,
    config: &OptimizerConfig<F>,
    objective: O,
) -> Result<AscentBest<F>>
where
    F: Real,
    O: Fn(&[Vec<F>]) -> F + Sync,
{
    if config.grid_points < 2 {
        return Err(Error::validation("optimizer needs at least two grid points"));
    }
    if dims.contains(&0) {
        return Err(Error::validation("empty alphabet in optimizer state"));
    }
    let mut starts: Vec<(usize, Vec<Vec<F>>)> = vec![(0, uniform_state(dims))];
    for r in 1..=config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        starts.push((r, random_state(dims, &mut rng)));
    }
    for (offset, s) in seed_states.into_iter().enumerate() {
        starts.push((config.restarts + 1 + offset, s));
    }
    starts
        .into_par_iter()
        .map(|(index, start)| {
            let (value, state, converged, evaluations) = run_ascent(start, config, &objective);
            AscentBest {
                value,
                state,
                converged,
                evaluations,
                index,
            }
        })
        .reduce_with(|a, b| {
            let evaluations = a.evaluations + b.evaluations;
            let b_wins = b.value > a.value || (b.value == a.value && b.index < a.index);
            let mut winner = if b_wins { b } else { a };
            winner.evaluations = evaluations;
            winner
        })
        .ok_or_else(|| Error::validation("optimizer produced no starts"))
}

/// Weighted average-error quantity of the channel without cooperation,
/// maximized over independent inputs `p(x1) p(x2)`.
///
/// The returned value is a lower bound on the true maximum (see the
/// module docs); `config.seed_points` may inject witness inputs, which
/// must not carry an auxiliary variable.
///
/// # Errors
/// Validation error when `alpha` is outside `[0, 1]`, the config is
/// degenerate, or a seed point does not match the channel.
pub fn mac_avg_calpha<F: Real>(
    mac: &DiscreteMac<F>,
    alpha: F,
    config: &OptimizerConfig<F>,
) -> Result<OptimizeOutcome<F>> {
    check_alpha(alpha)?;
    let mut seed_states = Vec::with_capacity(config.seed_points.len());
    for point in &config.seed_points {
        if point.u_cardinality() != 1 {
            return Err(Error::validation(
                "seed inputs for the no-cooperation objective must have a singleton auxiliary",
            ));
        }
        if point.px1(0).len() != mac.n1() || point.px2(0).len() != mac.n2() {
            return Err(Error::validation(
                "seed input alphabets do not match the channel",
            ));
        }
        seed_states.push(vec![point.px1(0).to_vec(), point.px2(0).to_vec()]);
    }
    let deterministic = mac.is_deterministic();
    let half = F::of_f64(0.5);
    let one = F::one();
    let objective = |state: &[Vec<F>]| -> F {
        let input = match ProductInput::independent(state[0].clone(), state[1].clone()) {
            Ok(input) => input,
            Err(_) => return F::neg_infinity(),
        };
        let joint = match input.joint_with(mac) {
            Ok(joint) => joint,
            Err(_) => return F::neg_infinity(),
        };
        if deterministic {
            let h_y = joint.subset_entropy(&[Var::Y]);
            if alpha <= half {
                let h_y_x1 =
                    joint.subset_entropy(&[Var::X1, Var::Y]) - joint.subset_entropy(&[Var::X1]);
                alpha * h_y + (one - alpha - alpha) * h_y_x1
            } else {
                let h_y_x2 =
                    joint.subset_entropy(&[Var::X2, Var::Y]) - joint.subset_entropy(&[Var::X2]);
                (one - alpha) * h_y + (alpha + alpha - one) * h_y_x2
            }
        } else if alpha <= half {
            alpha * mutual_info(&joint, Grouping::X1Y)
                + (one - alpha) * mutual_info(&joint, Grouping::X2YGivenX1)
        } else {
            alpha * mutual_info(&joint, Grouping::X1YGivenX2)
                + (one - alpha) * mutual_info(&joint, Grouping::X2Y)
        }
    };
    let best = ascend_multistart(&[mac.n1(), mac.n2()], seed_states, config, objective)?;
    let input = ProductInput::independent(best.state[0].clone(), best.state[1].clone())?;
    Ok(OptimizeOutcome {
        value: best.value,
        certificate: Certificate::LowerBound,
        input,
        converged: best.converged,
        evaluations: best.evaluations,
        best_restart: best.index,
    })
}
