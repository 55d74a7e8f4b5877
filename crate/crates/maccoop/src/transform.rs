//! Constructive code transformations.
//!
//! Two constructions are implemented, both exact and re-verifiable. The
//! first takes any cooperation code and produces one whose blockwise error
//! at targets `(r1, r2)` stays within a factor `e^3` of the input's average
//! error, at the price of one extra conference round: messages are grouped
//! into blocks, a 0/1 indicator matrix marks the bad blocks, and a
//! block-zero permutation pair found by `blockperm` routes every message
//! group to a good block. The second applies to single-round conferencing
//! codes: it keeps the best quarter of message block pairs, halving each
//! user's block count, and guarantees max block-average error within a
//! factor `4/3` of the input average.

use serde::Serialize;

use crate::blockperm::{self, PermOutcome, SearchConfig, VectorOutcome, ZeroOneMatrix};
use crate::channel::DiscreteMac;
use crate::code::{
    block_counts, blockwise_error, max_block_avg, pair_index, BlockwiseOptions, CodeParts,
    CooperationCode, ErrorMatrix, LinkCapacities,
};
use crate::scalar::Real;
use crate::{Certificate, Error, Result};

/// Tolerance for budget and guarantee comparisons.
const TOL: f64 = 1e-9;

/// Plan for the extra-round construction. All intermediate artifacts are
/// kept so every guarantee can be recomputed from the plan alone.
#[derive(Debug, Clone)]
pub struct Theorem1Plan<F> {
    /// Block side of the permutation search.
    pub k_star: usize,
    /// Kept user-1 messages in selection order; blocks are consecutive
    /// runs of `l[0]`.
    pub kept1: Vec<usize>,
    /// Kept user-2 messages in selection order.
    pub kept2: Vec<usize>,
    /// Block counts `(K1, K2)`.
    pub k: [usize; 2],
    /// Block lengths `(L1, L2)`.
    pub l: [usize; 2],
    /// Grid dimensions `floor(K_i / K*)`.
    pub grid: [usize; 2],
    /// Bad-block indicator over `[K1] x [K2]`.
    pub a_matrix: ZeroOneMatrix,
    /// Average error of the kept submatrix.
    pub epsilon: F,
    /// Bad-block cutoff: a block is bad iff its error sum exceeds
    /// `L1 * L2 * e^3 * epsilon`.
    pub threshold: F,
    /// Row and column permutations over block indices;
    /// `permutations[i][pos]` is the source block at permuted position
    /// `pos`.
    pub permutations: [Vec<usize>; 2],
    /// Designated zero entry per grid cell, row-major over
    /// `[grid[0]] x [grid[1]]`, stored as offsets `(d1, d2)` within the
    /// `K* x K*` block.
    pub good_entry_table: Vec<[usize; 2]>,
    /// Uplink bits of the added round per user: `ceil(log2 K_i)`.
    pub round1_up_bits: [u32; 2],
    /// Downlink bits of the added round per user: `ceil(log2 K*)`.
    pub round1_down_bits: [u32; 2],
    /// Blockwise targets the plan was built for.
    pub r: [F; 2],
    /// Slack parameter used in `K*`.
    pub delta: F,
}

/// Plan for the conferencing best-quarter construction.
#[derive(Debug, Clone)]
pub struct Prop3Plan<F> {
    /// Input block counts `(K1, K2)`.
    pub k: [usize; 2],
    /// Block lengths `(L1, L2)`.
    pub l: [usize; 2],
    /// Output block counts `(K1/2, K2/2)`.
    pub k_half: [usize; 2],
    /// Selected quarter of block pairs, sorted row-major; its row-major
    /// order defines the injection from output to input block pairs.
    pub quarter: Vec<[usize; 2]>,
    /// Block-average errors of the input, row-major over `[K1] x [K2]`.
    pub block_avg: Vec<F>,
    /// Average error of the input code.
    pub epsilon: F,
    /// Guaranteed cap on the output's max block average: `4 epsilon / 3`.
    pub threshold: F,
    /// Conferencing capacity user 1 -> user 2.
    pub c12: F,
    /// Conferencing capacity user 2 -> user 1.
    pub c21: F,
}

/// A transformation plan: every intermediate artifact of one construction.
#[derive(Debug, Clone)]
pub enum TransformPlan<F> {
    /// Extra-round blockwise construction.
    Theorem1(Theorem1Plan<F>),
    /// Conferencing best-quarter construction.
    Prop3(Prop3Plan<F>),
}

/// Which guarantee `verify_transform` should check, with its parameters.
#[derive(Debug, Clone, Copy)]
pub enum TransformQuery<F> {
    /// Blockwise guarantee at `(r1, r2)` with slack `delta`.
    Theorem1 { r1: F, r2: F, delta: F },
    /// Conferencing guarantee at capacities `(c12, c21)`.
    Prop3 { c12: F, c21: F },
}

/// Side-by-side comparison of a code before and after transformation.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "F: Serialize"))]
pub struct TransformReport<F> {
    /// Guarantee family checked: "theorem1" or "prop3".
    pub kind: &'static str,
    /// Per-user rates `(1/n) log2 M_i` of the input.
    pub rate_before: [F; 2],
    /// Per-user rates of the output.
    pub rate_after: [F; 2],
    /// Per-user rate losses.
    pub rate_loss: [F; 2],
    /// Allowed per-user loss: `2 delta` or `1/n`.
    pub rate_loss_budget: F,
    /// True when every user's loss is within budget.
    pub rate_loss_within_budget: bool,
    /// Total uplink bits per user of the output code.
    pub cf_up_bits: [F; 2],
    /// Total downlink bits per user of the output code.
    pub cf_down_bits: [F; 2],
    /// Uplink budgets `n * C_in` of the output code.
    pub cf_up_budget: [F; 2],
    /// Downlink budgets `n * C_out` of the output code.
    pub cf_down_budget: [F; 2],
    /// True when all four usages fit their budgets.
    pub cf_within_budget: bool,
    /// Average error before.
    pub avg_before: F,
    /// Average error after.
    pub avg_after: F,
    /// Maximal error before.
    pub max_before: F,
    /// Maximal error after.
    pub max_after: F,
    /// Blockwise error of the output at the query parameters.
    pub blockwise_after: F,
    /// Certification status of `blockwise_after`.
    pub blockwise_certificate: Certificate,
    /// The epsilon the guarantee is measured against.
    pub epsilon: F,
    /// Guarantee cap: `e^3 epsilon` or `4 epsilon / 3`.
    pub guarantee_threshold: F,
    /// True when `blockwise_after` is within the cap.
    pub guarantee_met: bool,
}

fn e_cubed<F: Real>() -> F {
    let e = F::of_f64(std::f64::consts::E);
    e * e * e
}

/// Bits needed to address `x` values.
fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

fn invert(pi: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pi.len()];
    for (pos, &src) in pi.iter().enumerate() {
        inv[src] = pos;
    }
    inv
}

/// Least nonnegative residue of `target - from` modulo `modulus`.
fn mod_diff(target: usize, from: usize, modulus: usize) -> usize {
    (target as i64 - from as i64).rem_euclid(modulus as i64) as usize
}

/// `n (R1 + R2 + 2 delta)` with measured rates: the pre-ceiling value of
/// `K*`, reused by the link inflation.
fn rate_sum_bits<F: Real>(n: usize, m: [usize; 2], delta: F) -> F {
    F::of_usize(m[0]).log2() + F::of_usize(m[1]).log2() + F::of_usize(2 * n) * delta
}

/// Link capacities inflated to cover the added round: uplinks gain
/// `r_i + (1/n) log2(1 + n(R1 + R2 + 2 delta))`, downlinks the log term
/// alone. Since `K* <= 1 + n(R1 + R2 + 2 delta)`, the added round always
/// fits.
fn inflated_links<F: Real>(
    links: &LinkCapacities<F>,
    n: usize,
    m: [usize; 2],
    r: [F; 2],
    delta: F,
) -> LinkCapacities<F> {
    let add = (F::one() + rate_sum_bits(n, m, delta)).log2() / F::of_usize(n);
    LinkCapacities {
        c_in: [links.c_in[0] + r[0] + add, links.c_in[1] + r[1] + add],
        c_out: [links.c_out[0] + add, links.c_out[1] + add],
    }
}

/// `floor(2^t)` clamped to `cap`, with a small guard against
/// floating-point undershoot.
fn pow2_floor_capped(t: f64, cap: usize) -> usize {
    if t >= 63.0 {
        return cap;
    }
    let f = (t.exp2() + 1e-9).floor();
    if f >= cap as f64 {
        cap
    } else {
        (f as usize).max(1)
    }
}

/// Keeps the `keep1` user-1 messages with the smallest full-row error
/// sums, then the `keep2` user-2 messages with the smallest column sums
/// over the kept rows. Ties break toward the lower index. Returns the two
/// ordered kept lists and the kept-submatrix average error.
fn two_pass_keep<F: Real>(
    em: &ErrorMatrix<F>,
    keep1: usize,
    keep2: usize,
) -> (Vec<usize>, Vec<usize>, F) {
    let m = em.m();
    let row_sums: Vec<F> = (0..m[0])
        .map(|r| (0..m[1]).fold(F::zero(), |a, c| a + em.get(r, c)))
        .collect();
    let mut order1: Vec<usize> = (0..m[0]).collect();
    order1.sort_by(|&a, &b| {
        row_sums[a]
            .partial_cmp(&row_sums[b])
            .expect("error values are not NaN")
            .then(a.cmp(&b))
    });
    let kept1 = order1[..keep1].to_vec();
    let col_sums: Vec<F> = (0..m[1])
        .map(|c| kept1.iter().fold(F::zero(), |a, &r| a + em.get(r, c)))
        .collect();
    let mut order2: Vec<usize> = (0..m[1]).collect();
    order2.sort_by(|&a, &b| {
        col_sums[a]
            .partial_cmp(&col_sums[b])
            .expect("error values are not NaN")
            .then(a.cmp(&b))
    });
    let kept2 = order2[..keep2].to_vec();
    let total = kept2.iter().fold(F::zero(), |a, &c| a + col_sums[c]);
    let epsilon = total / F::of_usize(keep1 * keep2);
    (kept1, kept2, epsilon)
}

/// Block parameters of the extra-round construction: `K*`, block counts
/// `K_i` and lengths `L_i`.
fn theorem1_counts<F: Real>(
    n: usize,
    m: [usize; 2],
    r: [F; 2],
    delta: F,
) -> Result<(usize, [usize; 2], [usize; 2])> {
    for ri in r {
        if ri.is_nan() || ri < F::zero() || ri.is_infinite() {
            return Err(Error::validation("blockwise targets must be finite and >= 0"));
        }
    }
    if delta.is_nan() || delta <= F::zero() || delta.is_infinite() {
        return Err(Error::validation("delta must be finite and positive"));
    }
    let raw = rate_sum_bits(n, m, delta)
        .to_f64()
        .ok_or_else(|| Error::validation("rate sum does not fit in f64"))?;
    let k_star = ((raw - TOL).ceil().max(1.0)) as usize;
    let mut k = [0usize; 2];
    let mut l = [0usize; 2];
    for i in 0..2 {
        let t = F::of_usize(n) * r[i];
        let mult = pow2_floor_capped(t.to_f64().unwrap_or(f64::INFINITY), m[i]);
        k[i] = k_star.saturating_mul(mult).min(m[i]);
        if k[i] < k_star {
            return Err(Error::validation(format!(
                "block side K* = {k_star} exceeds K{} = {}; the blocklength or rates \
                 are too small for the construction",
                i + 1,
                k[i]
            )));
        }
        l[i] = m[i] / k[i];
    }
    Ok((k_star, k, l))
}

/// Plans the extra-round construction for `code` over `mac` at blockwise
/// targets `(r1, r2)` with slack `delta`.
///
/// The kept messages are chosen by the two-pass smallest-sum rule, the
/// bad-block matrix is thresholded at `L1 L2 e^3 epsilon`, and a block-zero
/// permutation pair is searched with `K* = ceil(n (R1 + R2 + 2 delta))`
/// where `R_i` are the measured rates `(1/n) log2 M_i`. When a block count
/// equals `K*` the degenerate axis is solved by the exact vector search.
///
/// # Errors
/// Validation errors for out-of-range parameters or when `K*` exceeds a
/// block count; `UncertifiedPlan` when no good permutation pair is found,
/// carrying the best attempt.
pub fn plan_theorem1<F: Real>(
    code: &CooperationCode<F>,
    mac: &DiscreteMac<F>,
    r1: F,
    r2: F,
    delta: F,
) -> Result<TransformPlan<F>> {
    let em = code.error_matrix(mac)?;
    let n = code.n();
    let m = code.m();
    let r = [r1, r2];
    let (k_star, k, l) = theorem1_counts(n, m, r, delta)?;
    let (kept1, kept2, epsilon) = two_pass_keep(&em, k[0] * l[0], k[1] * l[1]);

    let threshold = F::of_usize(l[0] * l[1]) * e_cubed::<F>() * epsilon;
    let mut bits = vec![false; k[0] * k[1]];
    for (b1, bit_row) in bits.chunks_mut(k[1]).enumerate() {
        for (b2, bit) in bit_row.iter_mut().enumerate() {
            let mut sum = F::zero();
            for &r_msg in &kept1[b1 * l[0]..(b1 + 1) * l[0]] {
                for &c_msg in &kept2[b2 * l[1]..(b2 + 1) * l[1]] {
                    sum = sum + em.get(r_msg, c_msg);
                }
            }
            *bit = sum > threshold;
        }
    }
    let a_matrix = ZeroOneMatrix::from_bits(k[0], k[1], bits)?;

    let (pi1, pi2) = search_permutations(&a_matrix, k_star, k)?;
    let grid = [k[0] / k_star, k[1] / k_star];
    let mut good_entry_table = Vec::with_capacity(grid[0] * grid[1]);
    for s1 in 0..grid[0] {
        for s2 in 0..grid[1] {
            let entry = designated_zero(&a_matrix, &pi1, &pi2, k_star, s1, s2)
                .expect("search guarantees a zero in every full block");
            good_entry_table.push(entry);
        }
    }

    Ok(TransformPlan::Theorem1(Theorem1Plan {
        k_star,
        kept1,
        kept2,
        k,
        l,
        grid,
        a_matrix,
        epsilon,
        threshold,
        permutations: [pi1, pi2],
        good_entry_table,
        round1_up_bits: [ceil_log2(k[0]), ceil_log2(k[1])],
        round1_down_bits: [ceil_log2(k_star), ceil_log2(k_star)],
        r,
        delta,
    }))
}

/// Routes the permutation search: the exact vector search on a degenerate
/// axis (`K_i == K*`, a single block row or column), the matrix search
/// otherwise.
fn search_permutations(
    a: &ZeroOneMatrix,
    k_star: usize,
    k: [usize; 2],
) -> Result<(Vec<usize>, Vec<usize>)> {
    if k[0] == k_star {
        // One block row: only column placement matters. A column blocks a
        // cell iff it is all ones.
        let bits: Vec<bool> = (0..k[1])
            .map(|c| (0..k[0]).all(|r| a.get(r, c)))
            .collect();
        let identity: Vec<usize> = (0..k[0]).collect();
        return match blockperm::find_permutation_vector(&bits, k_star)? {
            VectorOutcome::Found(pi2) => Ok((identity, pi2)),
            VectorOutcome::NotFound {
                violations,
                best_pi,
                bound,
            } => Err(Error::UncertifiedPlan {
                bound,
                violations,
                best_pi1: identity,
                best_pi2: best_pi,
                exhaustive: true,
            }),
        };
    }
    if k[1] == k_star {
        let bits: Vec<bool> = (0..k[0])
            .map(|r| (0..k[1]).all(|c| a.get(r, c)))
            .collect();
        let identity: Vec<usize> = (0..k[1]).collect();
        return match blockperm::find_permutation_vector(&bits, k_star)? {
            VectorOutcome::Found(pi1) => Ok((pi1, identity)),
            VectorOutcome::NotFound {
                violations,
                best_pi,
                bound,
            } => Err(Error::UncertifiedPlan {
                bound,
                violations,
                best_pi1: best_pi,
                best_pi2: identity,
                exhaustive: true,
            }),
        };
    }
    let found = blockperm::find_permutations(a, k_star, &SearchConfig::default())?;
    match found {
        PermOutcome::Found(s) => Ok((s.pi1, s.pi2)),
        PermOutcome::NotFound(f) => Err(Error::UncertifiedPlan {
            bound: f.bound,
            violations: f.violations,
            best_pi1: f.best_pi1,
            best_pi2: f.best_pi2,
            exhaustive: f.exhaustive,
        }),
    }
}

/// Lowest-index zero of grid cell `(s1, s2)` in row-major scan order,
/// as offsets within the block.
fn designated_zero(
    a: &ZeroOneMatrix,
    pi1: &[usize],
    pi2: &[usize],
    k_star: usize,
    s1: usize,
    s2: usize,
) -> Option<[usize; 2]> {
    for d1 in 0..k_star {
        for d2 in 0..k_star {
            if !a.get(pi1[s1 * k_star + d1], pi2[s2 * k_star + d2]) {
                return Some([d1, d2]);
            }
        }
    }
    None
}

/// Builds the transformed code from a plan.
///
/// The output has message sets `[grid_i * L_i]`, indexed block-major as
/// `s_i * L_i + l_i`. A new conference round is prepended: user `i` sends
/// the representative block of its grid row (alphabet `[K_i]`), and the CF
/// replies with the position offset of the designated zero (alphabet
/// `[K*]`, the least nonnegative mod-`K*` difference of target and
/// announced positions). Each user then replays the input code on the
/// designated block with its own sub-message. Two single-round shapes are
/// recognized: a code whose uplinks carry no information gets its constant
/// downlinks baked into the encoders, and a code whose output rate fits the
/// uplink capacities sends full messages up and receives the original
/// downlinks bundled with the offset.
///
/// # Errors
/// Validation error when the plan does not match the code.
pub fn apply_theorem1<F: Real>(
    plan: &TransformPlan<F>,
    code: &CooperationCode<F>,
) -> Result<CooperationCode<F>> {
    let TransformPlan::Theorem1(plan) = plan else {
        return Err(Error::validation("expected a theorem-1 plan"));
    };
    check_theorem1_pairing(plan, code)?;
    let p = code.parts();
    let n = p.n;
    let (k_star, k, l, grid) = (plan.k_star, plan.k, plan.l, plan.grid);
    let m_out = [grid[0] * l[0], grid[1] * l[1]];
    let inv = [invert(&plan.permutations[0]), invert(&plan.permutations[1])];
    let links = inflated_links(code.links(), n, p.m, plan.r, plan.delta);

    // CF reply table per (u1, u2) in [K1] x [K2]: the offset each user
    // needs, total over all inputs. Announced positions are clamped into
    // the grid so stray symbols still produce a valid reply.
    let offsets = |u1: usize, u2: usize| -> [usize; 2] {
        let pos = [inv[0][u1], inv[1][u2]];
        let s = [
            (pos[0] / k_star).min(grid[0] - 1),
            (pos[1] / k_star).min(grid[1] - 1),
        ];
        let d = plan.good_entry_table[s[0] * grid[1] + s[1]];
        [
            mod_diff(s[0] * k_star + d[0], pos[0], k_star),
            mod_diff(s[1] * k_star + d[1], pos[1], k_star),
        ]
    };
    // Replayed input message for output message m and received offset r.
    let replay = |i: usize, m_new: usize, offset: usize| -> usize {
        let (s, li) = (m_new / l[i], m_new % l[i]);
        let block = plan.permutations[i][s * k_star + offset];
        let kept = if i == 0 { &plan.kept1 } else { &plan.kept2 };
        kept[block * l[i] + li]
    };
    let rep = |i: usize, m_new: usize| plan.permutations[i][(m_new / l[i]) * k_star];

    let decoder = remap_decoder(plan, p, m_out, &inv);

    let uplinks_unused = p.up_sizes.iter().flatten().all(|&s| s == 1);
    let rate_fits = (0..2).all(|i| {
        F::of_usize(m_out[i]).log2() <= F::of_usize(n) * code.links().c_in[i] + F::of_f64(TOL)
    });

    let parts = if uplinks_unused {
        // Constant downlinks: bake them in, one round suffices.
        let v_const = code.transcript(0, 0).v;
        let down_prod: [usize; 2] = [0, 1].map(|i| p.down_sizes[i].iter().product());
        let v_flat: [usize; 2] =
            [0, 1].map(|i| flat_index(&v_const[i], &p.down_sizes[i]));
        let mut down_maps = [vec![vec![0; k[0] * k[1]]; 1], vec![vec![0; k[0] * k[1]]; 1]];
        for u1 in 0..k[0] {
            for u2 in 0..k[1] {
                let d = offsets(u1, u2);
                down_maps[0][0][u1 * k[1] + u2] = d[0];
                down_maps[1][0][u1 * k[1] + u2] = d[1];
            }
        }
        let encoders = [0, 1].map(|i| {
            let mut enc = vec![0; m_out[i] * k_star];
            for m_new in 0..m_out[i] {
                for r_sym in 0..k_star {
                    let orig = replay(i, m_new, r_sym);
                    enc[m_new * k_star + r_sym] =
                        p.encoders[i][orig * down_prod[i] + v_flat[i]];
                }
            }
            enc
        });
        CodeParts {
            n,
            m: m_out,
            x_sizes: p.x_sizes,
            y_size: p.y_size,
            up_sizes: [vec![k[0]], vec![k[1]]],
            down_sizes: [vec![k_star], vec![k_star]],
            up_maps: [0, 1].map(|i| vec![(0..m_out[i]).map(|mn| rep(i, mn)).collect()]),
            down_maps,
            encoders,
            decoder,
            links,
        }
    } else if rate_fits {
        // Full messages fit the uplinks: send them, bundle the original
        // downlinks with the offset in one reply.
        let down_prod: [usize; 2] = [0, 1].map(|i| p.down_sizes[i].iter().product());
        let mut down_maps = [
            vec![vec![0; m_out[0] * m_out[1]]; 1],
            vec![vec![0; m_out[0] * m_out[1]]; 1],
        ];
        for m1 in 0..m_out[0] {
            for m2 in 0..m_out[1] {
                let d = offsets(rep(0, m1), rep(1, m2));
                let orig = [replay(0, m1, d[0]), replay(1, m2, d[1])];
                let v = code.transcript(orig[0], orig[1]).v;
                for i in 0..2 {
                    down_maps[i][0][m1 * m_out[1] + m2] =
                        d[i] * down_prod[i] + flat_index(&v[i], &p.down_sizes[i]);
                }
            }
        }
        let encoders = [0, 1].map(|i| {
            let mut enc = vec![0; m_out[i] * k_star * down_prod[i]];
            for m_new in 0..m_out[i] {
                for dv in 0..k_star * down_prod[i] {
                    let orig = replay(i, m_new, dv / down_prod[i]);
                    enc[m_new * k_star * down_prod[i] + dv] =
                        p.encoders[i][orig * down_prod[i] + dv % down_prod[i]];
                }
            }
            enc
        });
        CodeParts {
            n,
            m: m_out,
            x_sizes: p.x_sizes,
            y_size: p.y_size,
            up_sizes: [vec![m_out[0]], vec![m_out[1]]],
            down_sizes: [vec![k_star * down_prod[0]], vec![k_star * down_prod[1]]],
            up_maps: [0, 1].map(|i| vec![(0..m_out[i]).collect()]),
            down_maps,
            encoders,
            decoder,
            links,
        }
    } else {
        general_parts(plan, p, m_out, links, &offsets, &replay, &rep, decoder)
    };
    CooperationCode::new(parts)
}

/// The general J+1-round layout: a fresh first round, then the input
/// code's rounds shifted by one, re-indexed to ignore the added symbols.
#[allow(clippy::too_many_arguments)]
fn general_parts<F: Real>(
    plan: &Theorem1Plan<F>,
    p: &CodeParts<F>,
    m_out: [usize; 2],
    links: LinkCapacities<F>,
    offsets: &dyn Fn(usize, usize) -> [usize; 2],
    replay: &dyn Fn(usize, usize, usize) -> usize,
    rep: &dyn Fn(usize, usize) -> usize,
    decoder: Vec<usize>,
) -> CodeParts<F> {
    let (k_star, k) = (plan.k_star, plan.k);
    let rounds = p.up_sizes[0].len();

    let up_sizes = [0, 1].map(|i| {
        let mut s = vec![k[i]];
        s.extend_from_slice(&p.up_sizes[i]);
        s
    });
    let down_sizes = [0, 1].map(|i| {
        let mut s = vec![k_star];
        s.extend_from_slice(&p.down_sizes[i]);
        s
    });

    let up_maps = [0, 1].map(|i| {
        let mut maps: Vec<Vec<usize>> = Vec::with_capacity(rounds + 1);
        maps.push((0..m_out[i]).map(|mn| rep(i, mn)).collect());
        for j in 0..rounds {
            // Down history here is (offset, v_1..v_j); the input map wants
            // (orig message, v_1..v_j).
            let hist: usize = p.down_sizes[i][..j].iter().product();
            let mut map = vec![0; m_out[i] * k_star * hist];
            for m_new in 0..m_out[i] {
                for rv in 0..k_star * hist {
                    let orig = replay(i, m_new, rv / hist);
                    map[m_new * k_star * hist + rv] =
                        p.up_maps[i][j][orig * hist + rv % hist];
                }
            }
            maps.push(map);
        }
        maps
    });

    let down_maps = [0, 1].map(|i| {
        let mut maps: Vec<Vec<usize>> = Vec::with_capacity(rounds + 1);
        let mut first = vec![0; k[0] * k[1]];
        for (idx, slot) in first.iter_mut().enumerate() {
            *slot = offsets(idx / k[1], idx % k[1])[i];
        }
        maps.push(first);
        for j in 0..rounds {
            // Uplink histories gained a leading round-1 symbol; strip it
            // and forward to the input map.
            let q: [usize; 2] = [0, 1].map(|u| p.up_sizes[u][..=j].iter().product());
            let mut map = vec![0; k[0] * q[0] * k[1] * q[1]];
            for (idx, slot) in map.iter_mut().enumerate() {
                let (a, b) = (idx / (k[1] * q[1]), idx % (k[1] * q[1]));
                *slot = p.down_maps[i][j][(a % q[0]) * q[1] + b % q[1]];
            }
            maps.push(map);
        }
        maps
    });

    let down_prod: [usize; 2] = [0, 1].map(|i| p.down_sizes[i].iter().product());
    let encoders = [0, 1].map(|i| {
        let mut enc = vec![0; m_out[i] * k_star * down_prod[i]];
        for m_new in 0..m_out[i] {
            for rv in 0..k_star * down_prod[i] {
                let orig = replay(i, m_new, rv / down_prod[i]);
                enc[m_new * k_star * down_prod[i] + rv] =
                    p.encoders[i][orig * down_prod[i] + rv % down_prod[i]];
            }
        }
        enc
    });

    CodeParts {
        n: p.n,
        m: m_out,
        x_sizes: p.x_sizes,
        y_size: p.y_size,
        up_sizes,
        down_sizes,
        up_maps,
        down_maps,
        encoders,
        decoder,
        links,
    }
}

/// Maps the input decoder's outputs into the transformed message sets:
/// a kept message in a full grid block maps to its cell and sub-message,
/// anything else falls back to message 0.
fn remap_decoder<F: Real>(
    plan: &Theorem1Plan<F>,
    p: &CodeParts<F>,
    m_out: [usize; 2],
    inv: &[Vec<usize>; 2],
) -> Vec<usize> {
    let kept_inv = [0, 1].map(|i| {
        let kept = if i == 0 { &plan.kept1 } else { &plan.kept2 };
        let mut table = vec![usize::MAX; p.m[i]];
        for (idx, &orig) in kept.iter().enumerate() {
            table[orig] = idx;
        }
        table
    });
    let map_one = |i: usize, orig: usize| -> usize {
        let kidx = kept_inv[i][orig];
        if kidx == usize::MAX {
            return 0;
        }
        let (block, li) = (kidx / plan.l[i], kidx % plan.l[i]);
        let pos = inv[i][block];
        let s = pos / plan.k_star;
        if s >= plan.grid[i] {
            return 0;
        }
        s * plan.l[i] + li
    };
    p.decoder
        .iter()
        .map(|&pair| {
            let (m1, m2) = (pair / p.m[1], pair % p.m[1]);
            pair_index(map_one(0, m1), map_one(1, m2), m_out[1])
        })
        .collect()
}

fn check_theorem1_pairing<F: Real>(
    plan: &Theorem1Plan<F>,
    code: &CooperationCode<F>,
) -> Result<()> {
    let m = code.m();
    let (k, l, k_star) = (plan.k, plan.l, plan.k_star);
    let kept = [&plan.kept1, &plan.kept2];
    for i in 0..2 {
        if kept[i].len() != k[i] * l[i] || k[i] * l[i] > m[i] {
            return Err(Error::validation("plan kept lists do not match the code"));
        }
        let mut seen = vec![false; m[i]];
        for &msg in kept[i] {
            if msg >= m[i] || seen[msg] {
                return Err(Error::validation("plan kept lists are not distinct messages"));
            }
            seen[msg] = true;
        }
        if plan.permutations[i].len() != k[i] {
            return Err(Error::validation("plan permutation length mismatch"));
        }
        if plan.grid[i] != k[i] / k_star || plan.grid[i] == 0 {
            return Err(Error::validation("plan grid does not match its block counts"));
        }
    }
    if a_dims(&plan.a_matrix) != k {
        return Err(Error::validation("plan a-matrix dimensions mismatch"));
    }
    if plan.good_entry_table.len() != plan.grid[0] * plan.grid[1]
        || plan
            .good_entry_table
            .iter()
            .any(|d| d[0] >= k_star || d[1] >= k_star)
    {
        return Err(Error::validation("plan good-entry table is malformed"));
    }
    Ok(())
}

fn a_dims(a: &ZeroOneMatrix) -> [usize; 2] {
    [a.rows(), a.cols()]
}

fn flat_index(digits: &[usize], sizes: &[usize]) -> usize {
    digits
        .iter()
        .zip(sizes)
        .fold(0, |acc, (&d, &s)| acc * s + d)
}

/// Plans the conferencing best-quarter construction.
///
/// The input must be a single-round forwarding code: block-major message
/// sets `[K_i] x [L_i]` with `K1 = 2 floor(2^(n c12))` and
/// `K2 = 2 floor(2^(n c21))`, uplinks carrying the block index, and each
/// downlink forwarding the other user's uplink. The best quarter of block
/// pairs by block-average error is selected; ties break row-major.
///
/// # Errors
/// Validation error when the code does not have the required shape.
pub fn plan_prop3<F: Real>(
    code: &CooperationCode<F>,
    mac: &DiscreteMac<F>,
    c12: F,
    c21: F,
) -> Result<TransformPlan<F>> {
    for c in [c12, c21] {
        if c.is_nan() || c < F::zero() || c.is_infinite() {
            return Err(Error::validation(
                "conferencing capacities must be finite and >= 0",
            ));
        }
    }
    let p = code.parts();
    let n = p.n;
    let expected = [
        2 * pow2_floor_capped(
            (F::of_usize(n) * c12).to_f64().unwrap_or(f64::INFINITY),
            usize::MAX / 4,
        ),
        2 * pow2_floor_capped(
            (F::of_usize(n) * c21).to_f64().unwrap_or(f64::INFINITY),
            usize::MAX / 4,
        ),
    ];
    let k = validate_forwarding_shape(p, expected)?;
    let l = [p.m[0] / k[0], p.m[1] / k[1]];

    let em = code.error_matrix(mac)?;
    let epsilon = em.avg();
    let mut block_avg = vec![F::zero(); k[0] * k[1]];
    for b1 in 0..k[0] {
        for b2 in 0..k[1] {
            let mut sum = F::zero();
            for m1 in b1 * l[0]..(b1 + 1) * l[0] {
                for m2 in b2 * l[1]..(b2 + 1) * l[1] {
                    sum = sum + em.get(m1, m2);
                }
            }
            block_avg[b1 * k[1] + b2] = sum / F::of_usize(l[0] * l[1]);
        }
    }
    let mut order: Vec<usize> = (0..k[0] * k[1]).collect();
    order.sort_by(|&a, &b| {
        block_avg[a]
            .partial_cmp(&block_avg[b])
            .expect("error values are not NaN")
            .then(a.cmp(&b))
    });
    let mut quarter: Vec<[usize; 2]> = order[..k[0] * k[1] / 4]
        .iter()
        .map(|&idx| [idx / k[1], idx % k[1]])
        .collect();
    quarter.sort_unstable();

    Ok(TransformPlan::Prop3(Prop3Plan {
        k,
        l,
        k_half: [k[0] / 2, k[1] / 2],
        quarter,
        block_avg,
        epsilon,
        threshold: F::of_f64(4.0 / 3.0) * epsilon,
        c12,
        c21,
    }))
}

/// Checks the single-round forwarding shape and returns the block counts.
fn validate_forwarding_shape<F: Real>(p: &CodeParts<F>, expected: [usize; 2]) -> Result<[usize; 2]> {
    if p.up_sizes[0].len() != 1 {
        return Err(Error::validation(
            "conferencing input must be a single-round code",
        ));
    }
    let k = [p.up_sizes[0][0], p.up_sizes[1][0]];
    if k != expected {
        return Err(Error::validation(format!(
            "block counts ({}, {}) do not match 2*floor(2^(n c)) = ({}, {})",
            k[0], k[1], expected[0], expected[1]
        )));
    }
    for i in 0..2 {
        if !p.m[i].is_multiple_of(k[i]) {
            return Err(Error::validation(
                "message count must factor as blocks x block length",
            ));
        }
        let l = p.m[i] / k[i];
        if p.down_sizes[i] != [k[1 - i]] {
            return Err(Error::validation(
                "downlink must carry the other user's block index",
            ));
        }
        for (msg, &up) in p.up_maps[i][0].iter().enumerate() {
            if up != msg / l {
                return Err(Error::validation(
                    "uplink must send the block-major block index",
                ));
            }
        }
    }
    for u1 in 0..k[0] {
        for u2 in 0..k[1] {
            let idx = u1 * k[1] + u2;
            if p.down_maps[0][0][idx] != u2 || p.down_maps[1][0][idx] != u1 {
                return Err(Error::validation(
                    "downlink must forward the other user's uplink",
                ));
            }
        }
    }
    Ok(k)
}

/// Builds the halved conferencing code from a plan. The output keeps the
/// forwarding shape at block counts `K_i / 2`; its encoders look up the
/// quarter's block pair, and its decoder maps non-quarter decodes to block
/// pair `(0, 0)` with the decoded sub-messages.
///
/// # Errors
/// Validation error when the plan does not match the code.
pub fn apply_prop3<F: Real>(
    plan: &TransformPlan<F>,
    code: &CooperationCode<F>,
) -> Result<CooperationCode<F>> {
    let TransformPlan::Prop3(plan) = plan else {
        return Err(Error::validation("expected a prop-3 plan"));
    };
    let p = code.parts();
    let (k, l, kh) = (plan.k, plan.l, plan.k_half);
    if p.m != [k[0] * l[0], k[1] * l[1]]
        || plan.quarter.len() != kh[0] * kh[1]
        || plan.quarter.iter().any(|b| b[0] >= k[0] || b[1] >= k[1])
    {
        return Err(Error::validation("plan does not match the code"));
    }
    validate_forwarding_shape(p, k)?;

    let mut quarter_inv = vec![usize::MAX; k[0] * k[1]];
    for (idx, b) in plan.quarter.iter().enumerate() {
        quarter_inv[b[0] * k[1] + b[1]] = idx;
    }

    let m_out = [kh[0] * l[0], kh[1] * l[1]];
    let phi = |b1: usize, b2: usize| plan.quarter[b1 * kh[1] + b2];

    let encoders = [0, 1].map(|i| {
        let mut enc = vec![0; m_out[i] * kh[1 - i]];
        for m_new in 0..m_out[i] {
            let (own, li) = (m_new / l[i], m_new % l[i]);
            for other in 0..kh[1 - i] {
                let pair = if i == 0 { phi(own, other) } else { phi(other, own) };
                let orig_m = pair[i] * l[i] + li;
                enc[m_new * kh[1 - i] + other] =
                    p.encoders[i][orig_m * k[1 - i] + pair[1 - i]];
            }
        }
        enc
    });

    let decoder = p
        .decoder
        .iter()
        .map(|&pair| {
            let (m1, m2) = (pair / p.m[1], pair % p.m[1]);
            let blocks = [m1 / l[0], m2 / l[1]];
            let subs = [m1 % l[0], m2 % l[1]];
            let idx = quarter_inv[blocks[0] * k[1] + blocks[1]];
            let half = if idx == usize::MAX {
                [0, 0]
            } else {
                [idx / kh[1], idx % kh[1]]
            };
            pair_index(half[0] * l[0] + subs[0], half[1] * l[1] + subs[1], m_out[1])
        })
        .collect();

    let mut down_maps = [
        vec![vec![0; kh[0] * kh[1]]; 1],
        vec![vec![0; kh[0] * kh[1]]; 1],
    ];
    for u1 in 0..kh[0] {
        for u2 in 0..kh[1] {
            down_maps[0][0][u1 * kh[1] + u2] = u2;
            down_maps[1][0][u1 * kh[1] + u2] = u1;
        }
    }

    CooperationCode::new(CodeParts {
        n: p.n,
        m: m_out,
        x_sizes: p.x_sizes,
        y_size: p.y_size,
        up_sizes: [vec![kh[0]], vec![kh[1]]],
        down_sizes: [vec![kh[1]], vec![kh[0]]],
        up_maps: [0, 1].map(|i| (0..m_out[i]).map(|mn| mn / l[i]).collect::<Vec<_>>())
            .map(|v| vec![v]),
        down_maps,
        encoders,
        decoder,
        links: LinkCapacities {
            c_in: [plan.c12, plan.c21],
            c_out: [plan.c21, plan.c12],
        },
    })
}

/// Compares a code before and after transformation and checks the claimed
/// guarantee by exact re-evaluation.
///
/// The blockwise error of the output is evaluated at the query parameters
/// with both the identity witness and the heuristic search; the smaller
/// value is reported. For the extra-round query the guarantee epsilon is
/// recomputed by rerunning the two-pass selection on the input.
///
/// # Errors
/// Propagates evaluation errors; mismatched channels fail validation.
pub fn verify_transform<F: Real>(
    original: &CooperationCode<F>,
    transformed: &CooperationCode<F>,
    mac: &DiscreteMac<F>,
    query: TransformQuery<F>,
) -> Result<TransformReport<F>> {
    let em_before = original.error_matrix(mac)?;
    let em_after = transformed.error_matrix(mac)?;
    let n = original.n();
    let rate = |m: [usize; 2]| {
        [
            F::of_usize(m[0]).log2() / F::of_usize(n),
            F::of_usize(m[1]).log2() / F::of_usize(n),
        ]
    };
    let rate_before = rate(original.m());
    let rate_after = rate(transformed.m());
    let rate_loss = [rate_before[0] - rate_after[0], rate_before[1] - rate_after[1]];

    let (kind, r_query, rate_loss_budget, epsilon, guarantee_threshold) = match query {
        TransformQuery::Theorem1 { r1, r2, delta } => {
            let (_, k, l) = theorem1_counts(n, original.m(), [r1, r2], delta)?;
            let (_, _, eps) = two_pass_keep(&em_before, k[0] * l[0], k[1] * l[1]);
            (
                "theorem1",
                [r1, r2],
                F::of_usize(2) * delta,
                eps,
                e_cubed::<F>() * eps,
            )
        }
        TransformQuery::Prop3 { c12, c21 } => {
            let eps = em_before.avg();
            (
                "prop3",
                [c12, c21],
                F::one() / F::of_usize(n),
                eps,
                F::of_f64(4.0 / 3.0) * eps,
            )
        }
    };
    let tol = F::of_f64(TOL);
    let rate_loss_within_budget = rate_loss.iter().all(|&x| x <= rate_loss_budget + tol);

    let tp = transformed.parts();
    let bits = |sizes: &[usize]| {
        sizes
            .iter()
            .fold(F::zero(), |a, &s| a + F::of_usize(s).log2())
    };
    let cf_up_bits = [bits(&tp.up_sizes[0]), bits(&tp.up_sizes[1])];
    let cf_down_bits = [bits(&tp.down_sizes[0]), bits(&tp.down_sizes[1])];
    let nf = F::of_usize(transformed.n());
    let tl = transformed.links();
    let cf_up_budget = [nf * tl.c_in[0], nf * tl.c_in[1]];
    let cf_down_budget = [nf * tl.c_out[0], nf * tl.c_out[1]];
    let cf_within_budget = (0..2).all(|i| {
        cf_up_bits[i] <= cf_up_budget[i] + tol && cf_down_bits[i] <= cf_down_budget[i] + tol
    });

    // Identity is the construction's witness; the search may do better.
    let m_after = transformed.m();
    let (bk1, bl1) = block_counts(transformed.n(), m_after[0], r_query[0]);
    let (bk2, bl2) = block_counts(transformed.n(), m_after[1], r_query[1]);
    let id1: Vec<usize> = (0..m_after[0]).collect();
    let id2: Vec<usize> = (0..m_after[1]).collect();
    let witness = max_block_avg(&em_after, &id1, &id2, [bk1, bk2], [bl1, bl2]);
    let searched = blockwise_error(
        &em_after,
        transformed.n(),
        r_query[0],
        r_query[1],
        &BlockwiseOptions::default(),
    )?;
    let (blockwise_after, blockwise_certificate) = if searched.value <= witness {
        (searched.value, searched.certificate)
    } else {
        (witness, Certificate::UpperBound)
    };

    Ok(TransformReport {
        kind,
        rate_before,
        rate_after,
        rate_loss,
        rate_loss_budget,
        rate_loss_within_budget,
        cf_up_bits,
        cf_down_bits,
        cf_up_budget,
        cf_down_budget,
        cf_within_budget,
        avg_before: em_before.avg(),
        avg_after: em_after.avg(),
        max_before: em_before.max(),
        max_after: em_after.max(),
        blockwise_after,
        blockwise_certificate,
        epsilon,
        guarantee_threshold,
        guarantee_met: blockwise_after <= guarantee_threshold + tol,
    })
}
