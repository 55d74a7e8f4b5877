//! Block-permutation search on 0/1 matrices.
//!
//! Given an `m x n` matrix over `{0,1}` and a block side `k <= min(m, n)`,
//! a pair of permutations `(pi1, pi2)` is *good* if every `k x k` block
//! `B_st` of the permuted matrix `A[pi1[r]][pi2[c]]`, for `(s, t)` in
//! `[floor(m/k)] x [floor(n/k)]`, contains at least one zero. Rows and
//! columns beyond the full blocks are unconstrained. A counting bound
//! certifies existence when the matrix is sparse enough; this module
//! evaluates the bound, searches for good pairs (exhaustively on small
//! instances, by seeded restarts with greedy repair otherwise), and
//! verifies candidates. A vector analogue covers the single-axis case.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Real;
use crate::{Error, Result};

/// Default number of randomized restarts.
pub const DEFAULT_RESTART_BUDGET: usize = 10_000;

/// Exhaustive search is used when `m! * n!` stays at or below this.
pub const EXHAUSTIVE_PAIR_LIMIT: u128 = 10_000_000;

/// A dense 0/1 matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroOneMatrix {
    m: usize,
    n: usize,
    bits: Vec<bool>,
    ones: usize,
}

impl ZeroOneMatrix {
    /// Builds a matrix from rows of booleans (`true` = 1).
    ///
    /// # Errors
    /// Validation error on an empty or ragged row set.
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::validation("matrix must be nonempty"));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("ragged matrix rows"));
        }
        let m = rows.len();
        let bits: Vec<bool> = rows.into_iter().flatten().collect();
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(ZeroOneMatrix { m, n, bits, ones })
    }

    /// Builds a matrix from a flat row-major bit vector.
    pub fn from_bits(m: usize, n: usize, bits: Vec<bool>) -> Result<Self> {
        if m == 0 || n == 0 || bits.len() != m * n {
            return Err(Error::validation("bit vector length must equal m*n > 0"));
        }
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(ZeroOneMatrix { m, n, bits, ones })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.n
    }

    /// Number of ones.
    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Entry at `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.n + c]
    }
}

fn validate_side(m: usize, n: usize, k: usize) -> Result<()> {
    if k == 0 || k > m.min(n) {
        return Err(Error::validation(format!(
            "block side must satisfy 1 <= k <= min(m, n); got k={k} for {m} x {n}"
        )));
    }
    Ok(())
}

/// The existence bound `(mn/k^2) * (N e^2 / (mn))^k` for an `m x n` matrix
/// with `N` ones and block side `k`. A value below 1 certifies that a good
/// permutation pair exists.
///
/// # Errors
/// Validation error unless `1 <= k <= min(m, n)`.
pub fn existence_bound<F: Real>(m: usize, n: usize, k: usize, ones: usize) -> Result<F> {
    validate_side(m, n, k)?;
    let mn = F::of_usize(m) * F::of_usize(n);
    let e = F::of_f64(std::f64::consts::E);
    let ratio = F::of_usize(ones) * e * e / mn;
    Ok(mn / (F::of_usize(k) * F::of_usize(k)) * ratio.powi(k as i32))
}

/// The vector (single-axis) existence bound `(m/k) * (N e / m)^k`.
///
/// # Errors
/// Validation error unless `1 <= k <= m`.
pub fn vector_existence_bound<F: Real>(m: usize, k: usize, ones: usize) -> Result<F> {
    validate_side(m, m, k)?;
    let mf = F::of_usize(m);
    let e = F::of_f64(std::f64::consts::E);
    Ok(mf / F::of_usize(k) * (F::of_usize(ones) * e / mf).powi(k as i32))
}

/// Exact binomial coefficient `C(n, k)` in unsigned 128-bit arithmetic.
///
/// # Panics
/// Panics on intermediate overflow; intended for small arguments.
pub fn binomial_exact(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // Exact at every step: the running product is C(n, i).
        acc = acc * u128::from(n - k + i) / u128::from(i);
    }
    acc
}

/// Search configuration for the randomized path.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Restart budget, including the deterministic identity start.
    pub budget: usize,
    /// Seed for the restart stream.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: DEFAULT_RESTART_BUDGET,
            seed: 0,
        }
    }
}

/// How a returned permutation pair was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Full enumeration of both permutation groups.
    Exhaustive,
    /// Seeded restarts with greedy repair.
    Randomized,
}

/// A successful permutation search.
#[derive(Debug, Clone)]
pub struct PermSearch {
    /// Row permutation; `pi1[r]` is the source row at permuted position `r`.
    pub pi1: Vec<usize>,
    /// Column permutation, same convention.
    pub pi2: Vec<usize>,
    /// Search path taken.
    pub method: SearchMethod,
    /// Restarts consumed, counting the successful one (0 for exhaustive).
    pub restarts_used: usize,
    /// Existence bound of the instance, for reporting.
    pub bound: f64,
}

/// A failed permutation search. Not an error: the bound may simply not
/// certify existence. `exhaustive` marks definitive nonexistence.
#[derive(Debug, Clone)]
pub struct PermFailure {
    /// Violating blocks left by the best attempt.
    pub violations: usize,
    /// Row permutation of the best attempt.
    pub best_pi1: Vec<usize>,
    /// Column permutation of the best attempt.
    pub best_pi2: Vec<usize>,
    /// Existence bound of the instance.
    pub bound: f64,
    /// True when the whole search space was enumerated.
    pub exhaustive: bool,
}

/// Outcome of a permutation search: not-found is a value, not an error.
#[derive(Debug, Clone)]
pub enum PermOutcome {
    /// A good pair was found.
    Found(PermSearch),
    /// No good pair was found within the search strategy.
    NotFound(PermFailure),
}

impl PermOutcome {
    /// Converts not-found into an uncertified-search error, for callers
    /// that require a good pair to proceed.
    pub fn into_result(self) -> Result<PermSearch> {
        match self {
            PermOutcome::Found(found) => Ok(found),
            PermOutcome::NotFound(fail) => Err(Error::UncertifiedPlan {
                bound: fail.bound,
                violations: fail.violations,
                best_pi1: fail.best_pi1,
                best_pi2: fail.best_pi2,
                exhaustive: fail.exhaustive,
            }),
        }
    }
}

fn factorial_capped(x: usize, cap: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 2..=x as u128 {
        acc = acc.saturating_mul(i);
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

/// Searches for a good permutation pair.
///
/// Small instances (`m! * n!` within the exhaustive limit) are enumerated in
/// lexicographic order, so the returned pair is the lexicographically first
/// good one and a not-found outcome proves nonexistence. Larger instances
/// run seeded restarts with greedy repair; the lowest-index successful
/// restart wins, so results are reproducible across thread counts.
///
/// # Errors
/// Validation error for `k` out of range or a zero budget.
pub fn find_permutations(
    matrix: &ZeroOneMatrix,
    k: usize,
    config: &SearchConfig,
) -> Result<PermOutcome> {
    let (m, n) = (matrix.rows(), matrix.cols());
    validate_side(m, n, k)?;
    if config.budget == 0 {
        return Err(Error::validation("restart budget must be positive"));
    }
    let bound = existence_bound::<f64>(m, n, k, matrix.ones())?;

    let pairs = factorial_capped(m, EXHAUSTIVE_PAIR_LIMIT)
        .saturating_mul(factorial_capped(n, EXHAUSTIVE_PAIR_LIMIT));
    if pairs <= EXHAUSTIVE_PAIR_LIMIT {
        return Ok(exhaustive_search(matrix, k, bound));
    }

    let success = (0..config.budget)
        .into_par_iter()
        .find_map_first(|index| {
            let out = attempt(matrix, k, config.seed, index);
            (out.violations == 0).then_some((index, out))
        });
    Ok(match success {
        Some((index, out)) => PermOutcome::Found(PermSearch {
            pi1: out.pi1,
            pi2: out.pi2,
            method: SearchMethod::Randomized,
            restarts_used: index + 1,
            bound,
        }),
        None => {
            // Rare path: replay the attempts to report the best one.
            let best = (0..config.budget)
                .into_par_iter()
                .map(|index| (attempt(matrix, k, config.seed, index), index))
                .min_by_key(|(out, index)| (out.violations, *index))
                .expect("budget is positive");
            PermOutcome::NotFound(PermFailure {
                violations: best.0.violations,
                best_pi1: best.0.pi1,
                best_pi2: best.0.pi2,
                bound,
                exhaustive: false,
            })
        }
    })
}

fn exhaustive_search(matrix: &ZeroOneMatrix, k: usize, bound: f64) -> PermOutcome {
    let (m, n) = (matrix.rows(), matrix.cols());
    let mut best: Option<(usize, Vec<usize>, Vec<usize>)> = None;
    let mut pi1: Vec<usize> = (0..m).collect();
    loop {
        let mut pi2: Vec<usize> = (0..n).collect();
        loop {
            if is_good(matrix, k, &pi1, &pi2) {
                return PermOutcome::Found(PermSearch {
                    pi1,
                    pi2,
                    method: SearchMethod::Exhaustive,
                    restarts_used: 0,
                    bound,
                });
            }
            let violations = count_violations(matrix, k, &pi1, &pi2);
            if best.as_ref().is_none_or(|b| violations < b.0) {
                best = Some((violations, pi1.clone(), pi2.clone()));
            }
            if !next_permutation(&mut pi2) {
                break;
            }
        }
        if !next_permutation(&mut pi1) {
            break;
        }
    }
    let (violations, best_pi1, best_pi2) = best.expect("at least the identity pair was tried");
    PermOutcome::NotFound(PermFailure {
        violations,
        best_pi1,
        best_pi2,
        bound,
        exhaustive: true,
    })
}

/// Advances `perm` to its lexicographic successor; false at the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn block_has_zero(
    matrix: &ZeroOneMatrix,
    k: usize,
    pi1: &[usize],
    pi2: &[usize],
    s: usize,
    t: usize,
) -> bool {
    pi1[s * k..(s + 1) * k]
        .iter()
        .any(|&r| pi2[t * k..(t + 1) * k].iter().any(|&c| !matrix.get(r, c)))
}

fn is_good(matrix: &ZeroOneMatrix, k: usize, pi1: &[usize], pi2: &[usize]) -> bool {
    let (g1, g2) = (matrix.rows() / k, matrix.cols() / k);
    (0..g1).all(|s| (0..g2).all(|t| block_has_zero(matrix, k, pi1, pi2, s, t)))
}

fn count_violations(matrix: &ZeroOneMatrix, k: usize, pi1: &[usize], pi2: &[usize]) -> usize {
    let (g1, g2) = (matrix.rows() / k, matrix.cols() / k);
    let mut violations = 0;
    for s in 0..g1 {
        for t in 0..g2 {
            let zeros = (s * k..(s + 1) * k)
                .flat_map(|p| (t * k..(t + 1) * k).map(move |q| (p, q)))
                .filter(|&(p, q)| !matrix.get(pi1[p], pi2[q]))
                .count();
            if zeros == 0 {
                violations += 1;
            }
        }
    }
    violations
}

/// Checks a candidate pair.
///
/// Returns `None` when every full `k x k` block contains a zero, otherwise
/// the first violating block `(s, t)` in row-major order. Partial blocks
/// beyond `floor(m/k)` rows or `floor(n/k)` columns are not scanned.
///
/// # Errors
/// Validation error for `k` out of range or non-bijective permutations.
pub fn verify_permutations(
    matrix: &ZeroOneMatrix,
    k: usize,
    pi1: &[usize],
    pi2: &[usize],
) -> Result<Option<(usize, usize)>> {
    validate_side(matrix.rows(), matrix.cols(), k)?;
    check_bijection(pi1, matrix.rows(), "row")?;
    check_bijection(pi2, matrix.cols(), "column")?;
    let (g1, g2) = (matrix.rows() / k, matrix.cols() / k);
    for s in 0..g1 {
        for t in 0..g2 {
            if !block_has_zero(matrix, k, pi1, pi2, s, t) {
                return Ok(Some((s, t)));
            }
        }
    }
    Ok(None)
}

fn check_bijection(pi: &[usize], len: usize, what: &str) -> Result<()> {
    if pi.len() != len {
        return Err(Error::validation(format!(
            "{what} permutation has length {}, expected {len}",
            pi.len()
        )));
    }
    let mut seen = vec![false; len];
    for &v in pi {
        if v >= len || seen[v] {
            return Err(Error::validation(format!(
                "{what} permutation is not a bijection"
            )));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Outcome of a vector permutation search.
#[derive(Debug, Clone)]
pub enum VectorOutcome {
    /// A permutation placing a zero in every full length-`k` segment.
    Found(Vec<usize>),
    /// Impossible: fewer zeros than segments. Definitive.
    NotFound {
        /// Segments that cannot receive a zero.
        violations: usize,
        /// Best-effort permutation covering the first segments.
        best_pi: Vec<usize>,
        /// The vector existence bound, for reporting.
        bound: f64,
    },
}

/// Finds a permutation of a 0/1 vector placing a zero in each of the
/// `floor(m/k)` consecutive segments of length `k` (the tail beyond them is
/// unconstrained). The question is decided exactly: a good permutation
/// exists iff the vector has at least `floor(m/k)` zeros. The returned
/// permutation places zeros at stride-`k` positions.
///
/// # Errors
/// Validation error unless `1 <= k <= m`.
pub fn find_permutation_vector(bits: &[bool], k: usize) -> Result<VectorOutcome> {
    let m = bits.len();
    validate_side(m, m, k)?;
    let segments = m / k;
    let zeros: Vec<usize> = (0..m).filter(|&i| !bits[i]).collect();
    let covered = zeros.len().min(segments);
    let mut pi = vec![usize::MAX; m];
    for (seg, &z) in zeros.iter().take(covered).enumerate() {
        pi[seg * k] = z;
    }
    let placed = &zeros[..covered];
    let mut rest = (0..m).filter(|i| !placed.contains(i));
    for slot in pi.iter_mut() {
        if *slot == usize::MAX {
            *slot = rest.next().expect("every index is placed exactly once");
        }
    }
    if covered == segments {
        Ok(VectorOutcome::Found(pi))
    } else {
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(VectorOutcome::NotFound {
            violations: segments - covered,
            best_pi: pi,
            bound: vector_existence_bound::<f64>(m, k, ones)?,
        })
    }
}

/// Checks a vector permutation; returns the first violating segment, if
/// any. Only the `floor(m/k)` full segments are scanned.
///
/// # Errors
/// Validation error for `k` out of range or a non-bijective permutation.
pub fn verify_permutation_vector(bits: &[bool], k: usize, pi: &[usize]) -> Result<Option<usize>> {
    let m = bits.len();
    validate_side(m, m, k)?;
    check_bijection(pi, m, "vector")?;
    for seg in 0..m / k {
        if (seg * k..(seg + 1) * k).all(|p| bits[pi[p]]) {
            return Ok(Some(seg));
        }
    }
    Ok(None)
}

/// One randomized attempt: shuffled start, then greedy repair.
struct AttemptOutcome {
    pi1: Vec<usize>,
    pi2: Vec<usize>,
    violations: usize,
}

fn attempt(matrix: &ZeroOneMatrix, k: usize, seed: u64, index: usize) -> AttemptOutcome {
    let (m, n) = (matrix.rows(), matrix.cols());
    let mut pi1: Vec<usize> = (0..m).collect();
    let mut pi2: Vec<usize> = (0..n).collect();
    if index > 0 {
        // Restart 0 is the deterministic identity start.
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        pi1.shuffle(&mut rng);
        pi2.shuffle(&mut rng);
    }
    let mut ws = Repair::new(matrix, k, pi1, pi2);
    for _ in 0..(m + n) {
        let Some((s, t)) = ws.first_violation() else {
            break;
        };
        match ws.best_fixing_swap(s, t) {
            Some((delta, axis, p, q)) if delta <= 0 => {
                if axis == 0 {
                    ws.apply_row_swap(p, q);
                } else {
                    ws.apply_col_swap(p, q);
                }
            }
            _ => break,
        }
    }
    AttemptOutcome {
        violations: ws.violations(),
        pi1: ws.pi1,
        pi2: ws.pi2,
    }
}

/// Incremental state for greedy repair. Blocks are `k x k`; the grid is
/// `g1 x g2` with `g_i = floor(dim/k)`; positions beyond the grid belong to
/// no block.
struct Repair<'a> {
    matrix: &'a ZeroOneMatrix,
    k: usize,
    g1: usize,
    g2: usize,
    pi1: Vec<usize>,
    pi2: Vec<usize>,
    /// Zeros per block, `g1 x g2` row-major.
    count: Vec<usize>,
    /// `rz[r][t]`: zeros of source row `r` inside permuted block-column `t`.
    rz: Vec<usize>,
    /// `cz[c][s]`: zeros of source column `c` inside permuted block-row `s`.
    cz: Vec<usize>,
}

impl<'a> Repair<'a> {
    fn new(matrix: &'a ZeroOneMatrix, k: usize, pi1: Vec<usize>, pi2: Vec<usize>) -> Self {
        let (m, n) = (matrix.rows(), matrix.cols());
        let (g1, g2) = (m / k, n / k);
        let mut ws = Repair {
            matrix,
            k,
            g1,
            g2,
            pi1,
            pi2,
            count: vec![0; g1 * g2],
            rz: vec![0; m * g2],
            cz: vec![0; n * g1],
        };
        ws.rebuild();
        ws
    }

    fn rebuild(&mut self) {
        let (m, n) = (self.matrix.rows(), self.matrix.cols());
        let (k, g1, g2) = (self.k, self.g1, self.g2);
        self.count.iter_mut().for_each(|c| *c = 0);
        self.rz.iter_mut().for_each(|c| *c = 0);
        self.cz.iter_mut().for_each(|c| *c = 0);
        for r in 0..m {
            for (pos, &c) in self.pi2.iter().enumerate().take(g2 * k) {
                if !self.matrix.get(r, c) {
                    self.rz[r * g2 + pos / k] += 1;
                }
            }
        }
        for c in 0..n {
            for (pos, &r) in self.pi1.iter().enumerate().take(g1 * k) {
                if !self.matrix.get(r, c) {
                    self.cz[c * g1 + pos / k] += 1;
                }
            }
        }
        for (p, &r) in self.pi1.iter().enumerate().take(g1 * k) {
            for (q, &c) in self.pi2.iter().enumerate().take(g2 * k) {
                if !self.matrix.get(r, c) {
                    self.count[(p / k) * g2 + q / k] += 1;
                }
            }
        }
    }

    fn violations(&self) -> usize {
        self.count.iter().filter(|&&c| c == 0).count()
    }

    fn first_violation(&self) -> Option<(usize, usize)> {
        self.count
            .iter()
            .position(|&c| c == 0)
            .map(|i| (i / self.g2, i % self.g2))
    }

    /// Best single swap that puts a zero into block `(s, t)`, as
    /// `(violation delta, axis, p, q)` minimized lexicographically.
    fn best_fixing_swap(&self, s: usize, t: usize) -> Option<(isize, u8, usize, usize)> {
        let mut best: Option<(isize, u8, usize, usize)> = None;
        let mut consider = |cand: (isize, u8, usize, usize)| {
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        };
        let m = self.matrix.rows();
        for p in s * self.k..(s + 1) * self.k {
            for q in (0..m).filter(|&q| q / self.k != s) {
                if self.rz[self.pi1[q] * self.g2 + t] == 0 {
                    continue;
                }
                consider((self.row_swap_delta(p, q), 0, p, q));
            }
        }
        let n = self.matrix.cols();
        for p in t * self.k..(t + 1) * self.k {
            for q in (0..n).filter(|&q| q / self.k != t) {
                if self.cz[self.pi2[q] * self.g1 + s] == 0 {
                    continue;
                }
                consider((self.col_swap_delta(p, q), 1, p, q));
            }
        }
        best
    }

    fn row_swap_delta(&self, p: usize, q: usize) -> isize {
        let (sp, sq) = (p / self.k, q / self.k);
        let (a, b) = (self.pi1[p], self.pi1[q]);
        let mut delta = 0isize;
        for t in 0..self.g2 {
            let za = self.rz[a * self.g2 + t] as isize;
            let zb = self.rz[b * self.g2 + t] as isize;
            let op = self.count[sp * self.g2 + t] as isize;
            delta += (op - za + zb == 0) as isize - (op == 0) as isize;
            if sq < self.g1 {
                let oq = self.count[sq * self.g2 + t] as isize;
                delta += (oq - zb + za == 0) as isize - (oq == 0) as isize;
            }
        }
        delta
    }

    fn col_swap_delta(&self, p: usize, q: usize) -> isize {
        let (tp, tq) = (p / self.k, q / self.k);
        let (a, b) = (self.pi2[p], self.pi2[q]);
        let mut delta = 0isize;
        for s in 0..self.g1 {
            let za = self.cz[a * self.g1 + s] as isize;
            let zb = self.cz[b * self.g1 + s] as isize;
            let op = self.count[s * self.g2 + tp] as isize;
            delta += (op - za + zb == 0) as isize - (op == 0) as isize;
            if tq < self.g2 {
                let oq = self.count[s * self.g2 + tq] as isize;
                delta += (oq - zb + za == 0) as isize - (oq == 0) as isize;
            }
        }
        delta
    }

    fn apply_row_swap(&mut self, p: usize, q: usize) {
        self.pi1.swap(p, q);
        self.rebuild();
    }

    fn apply_col_swap(&mut self, p: usize, q: usize) {
        self.pi2.swap(p, q);
        self.rebuild();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(m: usize, n: usize, density: f64, seed: u64) -> ZeroOneMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..m * n).map(|_| rng.gen::<f64>() < density).collect();
        ZeroOneMatrix::from_bits(m, n, bits).unwrap()
    }

    fn expect_found(outcome: PermOutcome) -> PermSearch {
        match outcome {
            PermOutcome::Found(found) => found,
            PermOutcome::NotFound(fail) => panic!("expected a good pair, got {fail:?}"),
        }
    }

    #[test]
    fn existence_bound_frozen_value() {
        // 4x4 with a single one, k = 2: (16/4) * (e^2/16)^2 = e^4/64.
        let b = existence_bound::<f64>(4, 4, 2, 1).unwrap();
        let expect = std::f64::consts::E.powi(4) / 64.0;
        assert!((b - expect).abs() < 1e-12, "got {b}, expected {expect}");
        assert!((b - 0.85310).abs() < 5e-6);
        assert!(b < 1.0);
        assert_eq!(existence_bound::<f64>(5, 5, 3, 0).unwrap(), 0.0);
        assert!(existence_bound::<f64>(4, 4, 5, 1).is_err());
    }

    #[test]
    fn vector_bound_frozen_value() {
        // m = 4, k = 2, N = 1: (4/2) * (e/4)^2 = e^2/8.
        let b = vector_existence_bound::<f64>(4, 2, 1).unwrap();
        assert!((b - std::f64::consts::E.powi(2) / 8.0).abs() < 1e-12);
        assert!((b - 0.9236).abs() < 5e-5);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial_exact(0, 0), 1);
        assert_eq!(binomial_exact(5, 2), 10);
        assert_eq!(binomial_exact(30, 15), 155_117_520);
        assert_eq!(binomial_exact(3, 5), 0);
    }

    #[test]
    fn binomial_bracket_bounds() {
        // (n/k)^k <= C(n,k) <= (ne/k)^k for 1 <= k <= n <= 30.
        for n in 1u64..=30 {
            for k in 1..=n {
                let c = binomial_exact(n, k) as f64;
                let lo = (n as f64 / k as f64).powi(k as i32);
                let hi = (n as f64 * std::f64::consts::E / k as f64).powi(k as i32);
                assert!(lo <= c * (1.0 + 1e-12), "lower fails at n={n} k={k}");
                assert!(c <= hi * (1.0 + 1e-12), "upper fails at n={n} k={k}");
            }
        }
    }

    #[test]
    fn all_zero_matrix_accepts_identity() {
        let mat = ZeroOneMatrix::from_bits(4, 4, vec![false; 16]).unwrap();
        let found = expect_found(find_permutations(&mat, 2, &SearchConfig::default()).unwrap());
        assert_eq!(found.pi1, vec![0, 1, 2, 3]);
        assert_eq!(found.pi2, vec![0, 1, 2, 3]);
        assert_eq!(found.method, SearchMethod::Exhaustive);
    }

    #[test]
    fn single_one_never_blocks() {
        // 4x4 with a single 1: every 2x2 block keeps at least 3 zeros.
        let mut bits = vec![false; 16];
        bits[5] = true;
        let mat = ZeroOneMatrix::from_bits(4, 4, bits).unwrap();
        let found = expect_found(find_permutations(&mat, 2, &SearchConfig::default()).unwrap());
        assert!(verify_permutations(&mat, 2, &found.pi1, &found.pi2)
            .unwrap()
            .is_none());
        assert_eq!(found.pi1, vec![0, 1, 2, 3]);
    }

    #[test]
    fn dense_corner_block_gets_split() {
        // 6x6 with an all-ones 3x3 corner: identity fails, a permutation
        // splitting the corner exists and the exhaustive search finds it.
        let rows: Vec<Vec<bool>> = (0..6)
            .map(|r| (0..6).map(|c| r < 3 && c < 3).collect())
            .collect();
        let mat = ZeroOneMatrix::new(rows).unwrap();
        assert_eq!(
            verify_permutations(&mat, 3, &[0, 1, 2, 3, 4, 5], &[0, 1, 2, 3, 4, 5]).unwrap(),
            Some((0, 0))
        );
        let found = expect_found(find_permutations(&mat, 3, &SearchConfig::default()).unwrap());
        assert!(verify_permutations(&mat, 3, &found.pi1, &found.pi2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn exhaustive_nonexistence_is_definitive() {
        let mat = ZeroOneMatrix::from_bits(2, 2, vec![true; 4]).unwrap();
        match find_permutations(&mat, 1, &SearchConfig::default()).unwrap() {
            PermOutcome::NotFound(fail) => {
                assert!(fail.exhaustive);
                assert_eq!(fail.violations, 4);
            }
            other => panic!("expected definitive failure, got {other:?}"),
        }
    }

    #[test]
    fn randomized_search_succeeds_on_sparse_matrix() {
        // 8x8 forces the randomized path (8!^2 > 1e7).
        let mat = random_matrix(8, 8, 0.25, 11);
        let found = expect_found(
            find_permutations(&mat, 2, &SearchConfig { budget: 2000, seed: 3 }).unwrap(),
        );
        assert_eq!(found.method, SearchMethod::Randomized);
        assert!(verify_permutations(&mat, 2, &found.pi1, &found.pi2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn randomized_search_is_reproducible() {
        let mat = random_matrix(8, 8, 0.3, 5);
        let cfg = SearchConfig { budget: 500, seed: 42 };
        let a = expect_found(find_permutations(&mat, 2, &cfg).unwrap());
        let b = expect_found(find_permutations(&mat, 2, &cfg).unwrap());
        assert_eq!(a.pi1, b.pi1);
        assert_eq!(a.pi2, b.pi2);
        assert_eq!(a.restarts_used, b.restarts_used);
    }

    #[test]
    fn randomized_failure_reports_best_attempt() {
        // All ones: no zeros to place anywhere; 4x4 grid of 2x2 blocks.
        let mat = ZeroOneMatrix::from_bits(8, 8, vec![true; 64]).unwrap();
        match find_permutations(&mat, 2, &SearchConfig { budget: 3, seed: 0 }).unwrap() {
            PermOutcome::NotFound(fail) => {
                assert!(!fail.exhaustive);
                assert_eq!(fail.violations, 16);
                assert_eq!(fail.best_pi1.len(), 8);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn partial_blocks_are_unconstrained() {
        // 5x5, k=2: the grid is 2x2; the fifth row/column may be all ones.
        let rows: Vec<Vec<bool>> = (0..5)
            .map(|r| (0..5).map(|c| r == 4 || c == 4).collect())
            .collect();
        let mat = ZeroOneMatrix::new(rows).unwrap();
        assert!(verify_permutations(&mat, 2, &[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4])
            .unwrap()
            .is_none());
    }

    #[test]
    fn verify_rejects_non_bijections() {
        let mat = random_matrix(4, 4, 0.2, 1);
        assert!(verify_permutations(&mat, 2, &[0, 0, 1, 2], &[0, 1, 2, 3]).is_err());
        assert!(verify_permutations(&mat, 2, &[0, 1, 2], &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn verify_reports_first_violating_block() {
        // Top-left 1x1 block is a one under identity permutations.
        let mat = ZeroOneMatrix::from_bits(2, 2, vec![true, false, false, false]).unwrap();
        let hit = verify_permutations(&mat, 1, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(hit, Some((0, 0)));
    }

    #[test]
    fn vector_identity_passes_when_zeros_align() {
        let bits = vec![true, false, true, false];
        assert!(verify_permutation_vector(&bits, 2, &[0, 1, 2, 3])
            .unwrap()
            .is_none());
    }

    #[test]
    fn vector_search_places_one_zero_per_segment() {
        let bits = vec![true, true, false, false];
        match find_permutation_vector(&bits, 2).unwrap() {
            VectorOutcome::Found(pi) => {
                assert!(verify_permutation_vector(&bits, 2, &pi).unwrap().is_none())
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn vector_all_ones_reports_segment_count() {
        let bits = vec![true; 9];
        match find_permutation_vector(&bits, 2).unwrap() {
            VectorOutcome::NotFound { violations, .. } => assert_eq!(violations, 4),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn vector_partial_tail_is_unconstrained() {
        // m=7, k=3: two segments, two zeros suffice.
        let bits = vec![true, true, true, true, true, false, false];
        match find_permutation_vector(&bits, 3).unwrap() {
            VectorOutcome::Found(pi) => {
                assert!(verify_permutation_vector(&bits, 3, &pi).unwrap().is_none())
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn lemma_bound_below_one_implies_search_success() {
        // Exhaustively checkable sizes: whenever the bound certifies
        // existence, the search must find a good pair.
        for seed in 0..25u64 {
            let mat = random_matrix(6, 6, 0.12, seed);
            let bound = existence_bound::<f64>(6, 6, 2, mat.ones()).unwrap();
            if bound < 1.0 {
                match find_permutations(&mat, 2, &SearchConfig::default()).unwrap() {
                    PermOutcome::Found(_) => {}
                    PermOutcome::NotFound(f) => {
                        panic!("bound {bound} < 1 but search failed (seed {seed}): {f:?}")
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn found_pairs_always_verify(seed in 0u64..500, density in 0.05f64..0.35) {
            let mat = random_matrix(6, 6, density, seed);
            if let PermOutcome::Found(found) =
                find_permutations(&mat, 3, &SearchConfig::default()).unwrap()
            {
                prop_assert!(verify_permutations(&mat, 3, &found.pi1, &found.pi2)?.is_none());
            }
        }

        #[test]
        fn bound_is_monotone_in_ones(m in 1usize..8, n in 1usize..8, k in 1usize..4, ones in 0usize..20) {
            let k = k.min(m).min(n);
            let b1 = existence_bound::<f64>(m, n, k, ones).unwrap();
            let b2 = existence_bound::<f64>(m, n, k, ones + 1).unwrap();
            prop_assert!(b1 <= b2 + 1e-12);
        }

        #[test]
        fn bound_decreases_in_k_when_sparse(m in 4usize..12, n in 4usize..12, k in 1usize..4) {
            // Density below e^-2 makes the bound decreasing in k.
            let k2 = (k + 1).min(m).min(n);
            let k = k.min(m).min(n);
            let ones = ((m * n) as f64 * 0.1) as usize;
            prop_assume!((ones as f64) / ((m * n) as f64) < (-2.0f64).exp());
            let b1 = existence_bound::<f64>(m, n, k, ones).unwrap();
            let b2 = existence_bound::<f64>(m, n, k2, ones).unwrap();
            prop_assert!(b2 <= b1 + 1e-12);
        }
    }
}
