//! Finite discrete memoryless two-user multiple access channels.
//!
//! A MAC is a transition tensor `p(y | x1, x2)` over finite labeled
//! alphabets. This module provides the n-th extension (memoryless product),
//! entropy and mutual-information primitives in bits, and the named builtin
//! channels used throughout the crate.

use crate::scalar::Real;
use crate::{Error, Result};

/// Row-normalization tolerance for transition tensors and distributions.
pub const NORM_TOL: f64 = 1e-9;

/// Default enumeration guard: `n * log2(|Y|)` must stay at or below this.
pub const EXTENSION_GUARD_BITS: f64 = 24.0;

/// A discrete memoryless MAC `(X1 x X2, p(y|x1,x2), Y)`.
///
/// Labels are opaque strings used only for I/O; all indexing is positional.
/// Values are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMac<F> {
    x1: Vec<String>,
    x2: Vec<String>,
    y: Vec<String>,
    /// Transition probabilities, flattened as `[x1][x2][y]`.
    p: Vec<F>,
}

impl<F: Real> DiscreteMac<F> {
    /// Builds a MAC from labels and a nested `[x1][x2][y]` tensor.
    ///
    /// # Errors
    /// Validation error if any alphabet is empty, dimensions are ragged,
    /// an entry is negative, or a row does not sum to 1 within `1e-9`.
    pub fn new(
        x1: Vec<String>,
        x2: Vec<String>,
        y: Vec<String>,
        p: Vec<Vec<Vec<F>>>,
    ) -> Result<Self> {
        if x1.is_empty() || x2.is_empty() || y.is_empty() {
            return Err(Error::validation("alphabets must be nonempty"));
        }
        if p.len() != x1.len() {
            return Err(Error::validation(format!(
                "transition tensor has {} x1-slices, expected {}",
                p.len(),
                x1.len()
            )));
        }
        let mut flat = Vec::with_capacity(x1.len() * x2.len() * y.len());
        for (a, slice) in p.iter().enumerate() {
            if slice.len() != x2.len() {
                return Err(Error::validation(format!(
                    "transition tensor slice {a} has {} rows, expected {}",
                    slice.len(),
                    x2.len()
                )));
            }
            for (b, row) in slice.iter().enumerate() {
                if row.len() != y.len() {
                    return Err(Error::validation(format!(
                        "row (x1={a}, x2={b}) has {} entries, expected {}",
                        row.len(),
                        y.len()
                    )));
                }
                let mut sum = F::zero();
                for &v in row {
                    if v < F::zero() {
                        return Err(Error::validation(format!(
                            "negative probability at (x1={a}, x2={b})"
                        )));
                    }
                    sum = sum + v;
                }
                if (sum - F::one()).abs() > F::of_f64(NORM_TOL) {
                    return Err(Error::validation(format!(
                        "row (x1={a}, x2={b}) sums to {sum}, expected 1"
                    )));
                }
                flat.extend_from_slice(row);
            }
        }
        Ok(DiscreteMac { x1, x2, y, p: flat })
    }

    /// Number of symbols in the first input alphabet.
    pub fn n1(&self) -> usize {
        self.x1.len()
    }

    /// Number of symbols in the second input alphabet.
    pub fn n2(&self) -> usize {
        self.x2.len()
    }

    /// Number of output symbols.
    pub fn ny(&self) -> usize {
        self.y.len()
    }

    /// Input labels of user 1.
    pub fn x1_labels(&self) -> &[String] {
        &self.x1
    }

    /// Input labels of user 2.
    pub fn x2_labels(&self) -> &[String] {
        &self.x2
    }

    /// Output labels.
    pub fn y_labels(&self) -> &[String] {
        &self.y
    }

    /// Transition probability `p(y | x1, x2)` by position.
    ///
    /// # Panics
    /// Panics if an index is out of range.
    pub fn prob(&self, x1: usize, x2: usize, y: usize) -> F {
        assert!(x1 < self.n1() && x2 < self.n2() && y < self.ny());
        self.p[(x1 * self.n2() + x2) * self.ny() + y]
    }

    /// Transition probability looked up by labels, for I/O-level queries.
    pub fn prob_by_label(&self, x1: &str, x2: &str, y: &str) -> Result<F> {
        let find = |set: &[String], l: &str| {
            set.iter()
                .position(|s| s == l)
                .ok_or_else(|| Error::validation(format!("unknown label {l:?}")))
        };
        Ok(self.prob(find(&self.x1, x1)?, find(&self.x2, x2)?, find(&self.y, y)?))
    }

    /// True iff every input pair maps to a single output with probability 1.
    pub fn is_deterministic(&self) -> bool {
        (0..self.n1())
            .all(|a| (0..self.n2()).all(|b| self.deterministic_output(a, b).is_some()))
    }

    /// The unique output for `(x1, x2)` when the row is deterministic.
    pub fn deterministic_output(&self, x1: usize, x2: usize) -> Option<usize> {
        let tol = F::of_f64(NORM_TOL);
        (0..self.ny()).find(|&y| self.prob(x1, x2, y) >= F::one() - tol)
    }

    /// n-th extension with the default enumeration guard.
    pub fn extend(&self, n: usize) -> Result<Self> {
        self.extend_guarded(n, EXTENSION_GUARD_BITS)
    }

    /// n-th extension: alphabets become n-tuples and the transition tensor
    /// the memoryless product `prod_t p(y_t | x1_t, x2_t)`.
    ///
    /// # Errors
    /// Size-limit error if `n * log2(|Y|)` exceeds `max_bits` or the full
    /// tensor would exceed `2^max_bits` entries.
    pub fn extend_guarded(&self, n: usize, max_bits: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("extension order must be positive"));
        }
        let ybits = n as f64 * (self.ny() as f64).log2();
        if ybits > max_bits {
            return Err(Error::SizeLimit(format!(
                "output dimension: n*log2(|Y|) = {ybits:.2} exceeds the guard of {max_bits} bits"
            )));
        }
        let cells = (self.n1() * self.n2() * self.ny()) as f64;
        if n as f64 * cells.log2() > max_bits {
            return Err(Error::SizeLimit(format!(
                "tensor size: {n} uses of a {cells}-cell channel exceed 2^{max_bits} entries"
            )));
        }
        let x1 = tuple_labels(&self.x1, n);
        let x2 = tuple_labels(&self.x2, n);
        let y = tuple_labels(&self.y, n);
        let (c1, c2, cy) = (self.n1().pow(n as u32), self.n2().pow(n as u32), self.ny().pow(n as u32));
        let mut p = vec![F::zero(); c1 * c2 * cy];
        let mut a_digits = vec![0usize; n];
        for a in 0..c1 {
            unindex_tuple(a, self.n1(), &mut a_digits);
            let mut b_digits = vec![0usize; n];
            for b in 0..c2 {
                unindex_tuple(b, self.n2(), &mut b_digits);
                let mut y_digits = vec![0usize; n];
                for yy in 0..cy {
                    unindex_tuple(yy, self.ny(), &mut y_digits);
                    let mut prod = F::one();
                    for t in 0..n {
                        prod = prod * self.prob(a_digits[t], b_digits[t], y_digits[t]);
                    }
                    p[(a * c2 + b) * cy + yy] = prod;
                }
            }
        }
        Ok(DiscreteMac { x1, x2, y, p })
    }
}

/// Row-major index of an n-tuple: the first coordinate varies slowest.
pub fn tuple_index(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| {
        debug_assert!(d < base);
        acc * base + d
    })
}

/// Inverse of [`tuple_index`]; writes digits most-significant first.
pub fn unindex_tuple(mut index: usize, base: usize, digits: &mut [usize]) {
    for slot in digits.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    debug_assert_eq!(index, 0);
}

fn tuple_labels(labels: &[String], n: usize) -> Vec<String> {
    if n == 1 {
        return labels.to_vec();
    }
    let mut out = Vec::with_capacity(labels.len().pow(n as u32));
    let mut digits = vec![0usize; n];
    for i in 0..labels.len().pow(n as u32) {
        unindex_tuple(i, labels.len(), &mut digits);
        out.push(
            digits
                .iter()
                .map(|&d| labels[d].as_str())
                .collect::<Vec<_>>()
                .join("|"),
        );
    }
    out
}

/// Dueck's contraction MAC: inputs `{A,B,a,b} x {0,1}`, twelve outputs
/// `{A,B,C,a,b,c} x {0,1}`, with `f(a,0) = f(b,0) = (c,0)`,
/// `f(A,1) = f(B,1) = (C,1)`, and the identity map on every other pair.
pub fn contraction_mac<F: Real>() -> DiscreteMac<F> {
    let x1: Vec<String> = ["A", "B", "a", "b"].iter().map(|s| s.to_string()).collect();
    let x2: Vec<String> = ["0", "1"].iter().map(|s| s.to_string()).collect();
    let letters = ["A", "B", "C", "a", "b", "c"];
    let mut y = Vec::new();
    for l in letters {
        for bit in ["0", "1"] {
            y.push(format!("({l},{bit})"));
        }
    }
    let out_index = |letter: usize, bit: usize| letter * 2 + bit;
    let mut p = vec![vec![vec![F::zero(); 12]; 2]; 4];
    for (a, &letter) in ["A", "B", "a", "b"].iter().enumerate() {
        for (bit, row) in p[a].iter_mut().enumerate() {
            let mapped = match (letter, bit) {
                ("a", 0) | ("b", 0) => out_index(5, 0), // (c,0)
                ("A", 1) | ("B", 1) => out_index(2, 1), // (C,1)
                _ => {
                    let li = letters.iter().position(|&l| l == letter).unwrap();
                    out_index(li, bit)
                }
            };
            row[mapped] = F::one();
        }
    }
    DiscreteMac::new(x1, x2, y, p).expect("builtin channel is valid")
}

/// Binary adder MAC: `X1 = X2 = {0,1}`, `Y = X1 + X2` over `{0,1,2}`.
pub fn binary_adder_mac<F: Real>() -> DiscreteMac<F> {
    let bits: Vec<String> = ["0", "1"].iter().map(|s| s.to_string()).collect();
    let y: Vec<String> = ["0", "1", "2"].iter().map(|s| s.to_string()).collect();
    let mut p = vec![vec![vec![F::zero(); 3]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            p[a][b][a + b] = F::one();
        }
    }
    DiscreteMac::new(bits.clone(), bits, y, p).expect("builtin channel is valid")
}

/// Shannon entropy of a distribution, in bits.
///
/// # Errors
/// Validation error if an entry is negative or the entries do not sum to 1
/// within `1e-9`.
pub fn entropy<F: Real>(dist: &[F]) -> Result<F> {
    let mut sum = F::zero();
    for &v in dist {
        if v < F::zero() {
            return Err(Error::validation("negative probability in distribution"));
        }
        sum = sum + v;
    }
    if (sum - F::one()).abs() > F::of_f64(NORM_TOL) {
        return Err(Error::validation(format!(
            "distribution sums to {sum}, expected 1"
        )));
    }
    Ok(entropy_unchecked(dist))
}

/// Entropy without normalization checks, for hot paths that construct
/// normalized distributions by construction.
pub(crate) fn entropy_unchecked<F: Real>(dist: &[F]) -> F {
    -dist.iter().fold(F::zero(), |acc, &v| acc + v.xlog2x())
}

/// Binary entropy `h(p) = -p log2 p - (1-p) log2 (1-p)`.
///
/// # Panics
/// Panics if `p` lies outside `[0, 1]`.
pub fn binary_entropy<F: Real>(p: F) -> F {
    assert!(
        p >= F::zero() && p <= F::one(),
        "binary_entropy argument must lie in [0,1]"
    );
    -(p.xlog2x() + (F::one() - p).xlog2x())
}

/// Product input distribution `p(u) p(x1|u) p(x2|u)`.
///
/// Without an auxiliary layer, `U` is a singleton and the input is the plain
/// product `p(x1) p(x2)`. `X1` and `X2` are conditionally independent given
/// `U` by construction: the conditionals are stored as separate tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductInput<F> {
    pu: Vec<F>,
    px1: Vec<Vec<F>>,
    px2: Vec<Vec<F>>,
}

impl<F: Real> ProductInput<F> {
    /// Plain product input `p1 x p2` (singleton `U`).
    pub fn independent(p1: Vec<F>, p2: Vec<F>) -> Result<Self> {
        Self::with_aux(vec![F::one()], vec![p1], vec![p2])
    }

    /// Input with auxiliary `U`: `p(u)`, rows `p(x1|u)` and `p(x2|u)`.
    ///
    /// # Errors
    /// Validation error on ragged tables, negative entries, or rows that do
    /// not sum to 1 within `1e-9`.
    pub fn with_aux(pu: Vec<F>, px1: Vec<Vec<F>>, px2: Vec<Vec<F>>) -> Result<Self> {
        let check = |dist: &[F], what: &str| -> Result<()> {
            let mut sum = F::zero();
            for &v in dist {
                if v < F::zero() {
                    return Err(Error::validation(format!("negative probability in {what}")));
                }
                sum = sum + v;
            }
            if (sum - F::one()).abs() > F::of_f64(NORM_TOL) {
                return Err(Error::validation(format!(
                    "{what} sums to {sum}, expected 1"
                )));
            }
            Ok(())
        };
        if pu.is_empty() {
            return Err(Error::validation("auxiliary distribution must be nonempty"));
        }
        if px1.len() != pu.len() || px2.len() != pu.len() {
            return Err(Error::validation(
                "conditional tables must have one row per auxiliary symbol",
            ));
        }
        check(&pu, "p(u)")?;
        let d1 = px1[0].len();
        let d2 = px2[0].len();
        for (u, row) in px1.iter().enumerate() {
            if row.len() != d1 {
                return Err(Error::validation("ragged p(x1|u) table"));
            }
            check(row, &format!("p(x1|u={u})"))?;
        }
        for (u, row) in px2.iter().enumerate() {
            if row.len() != d2 {
                return Err(Error::validation("ragged p(x2|u) table"));
            }
            check(row, &format!("p(x2|u={u})"))?;
        }
        Ok(ProductInput { pu, px1, px2 })
    }

    /// Number of auxiliary symbols.
    pub fn u_cardinality(&self) -> usize {
        self.pu.len()
    }

    /// Auxiliary distribution `p(u)`.
    pub fn pu(&self) -> &[F] {
        &self.pu
    }

    /// Conditional row `p(x1 | u)`.
    pub fn px1(&self, u: usize) -> &[F] {
        &self.px1[u]
    }

    /// Conditional row `p(x2 | u)`.
    pub fn px2(&self, u: usize) -> &[F] {
        &self.px2[u]
    }

    /// Joint distribution over `(U, X1, X2, Y)` induced with a channel.
    ///
    /// # Errors
    /// Validation error if alphabet sizes do not match the channel.
    pub fn joint_with(&self, mac: &DiscreteMac<F>) -> Result<JointDist<F>> {
        if self.px1[0].len() != mac.n1() || self.px2[0].len() != mac.n2() {
            return Err(Error::validation(format!(
                "input dimensions ({}, {}) do not match channel alphabets ({}, {})",
                self.px1[0].len(),
                self.px2[0].len(),
                mac.n1(),
                mac.n2()
            )));
        }
        let dims = [self.pu.len(), mac.n1(), mac.n2(), mac.ny()];
        let mut p = Vec::with_capacity(dims.iter().product());
        for u in 0..dims[0] {
            for a in 0..dims[1] {
                for b in 0..dims[2] {
                    let base = self.pu[u] * self.px1[u][a] * self.px2[u][b];
                    for yy in 0..dims[3] {
                        p.push(base * mac.prob(a, b, yy));
                    }
                }
            }
        }
        Ok(JointDist { dims, p })
    }
}

/// The four joint variables, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Auxiliary time-sharing variable.
    U,
    /// First transmitter input.
    X1,
    /// Second transmitter input.
    X2,
    /// Channel output.
    Y,
}

impl Var {
    fn axis(self) -> usize {
        match self {
            Var::U => 0,
            Var::X1 => 1,
            Var::X2 => 2,
            Var::Y => 3,
        }
    }
}

/// Mutual-information groupings used by the capacity module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// `I(X1,X2; Y)`
    X1X2Y,
    /// `I(X1; Y)`
    X1Y,
    /// `I(X2; Y)`
    X2Y,
    /// `I(X2; Y | X1)`
    X2YGivenX1,
    /// `I(X1; Y | X2)`
    X1YGivenX2,
    /// `I(X1; Y | U, X2)`
    X1YGivenUX2,
    /// `I(X2; Y | U, X1)`
    X2YGivenUX1,
    /// `I(X1,X2; Y | U)`
    X1X2YGivenU,
}

impl Grouping {
    /// The `(A, B, C)` sets of `I(A; B | C)`.
    fn sets(self) -> (&'static [Var], &'static [Var], &'static [Var]) {
        use Var::*;
        match self {
            Grouping::X1X2Y => (&[X1, X2], &[Y], &[]),
            Grouping::X1Y => (&[X1], &[Y], &[]),
            Grouping::X2Y => (&[X2], &[Y], &[]),
            Grouping::X2YGivenX1 => (&[X2], &[Y], &[X1]),
            Grouping::X1YGivenX2 => (&[X1], &[Y], &[X2]),
            Grouping::X1YGivenUX2 => (&[X1], &[Y], &[U, X2]),
            Grouping::X2YGivenUX1 => (&[X2], &[Y], &[U, X1]),
            Grouping::X1X2YGivenU => (&[X1, X2], &[Y], &[U]),
        }
    }
}

/// A joint distribution over `(U, X1, X2, Y)`, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist<F> {
    dims: [usize; 4],
    p: Vec<F>,
}

impl<F: Real> JointDist<F> {
    /// Builds a joint distribution from raw entries.
    ///
    /// # Errors
    /// Validation error if the entry count mismatches the dimensions, an
    /// entry is negative, or the total is not 1 within `1e-9`.
    pub fn new(dims: [usize; 4], p: Vec<F>) -> Result<Self> {
        if p.len() != dims.iter().product::<usize>() {
            return Err(Error::validation("joint distribution entry count mismatch"));
        }
        let mut sum = F::zero();
        for &v in &p {
            if v < F::zero() {
                return Err(Error::validation("negative probability in joint"));
            }
            sum = sum + v;
        }
        if (sum - F::one()).abs() > F::of_f64(NORM_TOL) {
            return Err(Error::validation(format!(
                "joint distribution sums to {sum}, expected 1"
            )));
        }
        Ok(JointDist { dims, p })
    }

    /// Axis sizes `(|U|, |X1|, |X2|, |Y|)`.
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    /// Entropy of the marginal over a subset of variables, in bits.
    pub fn subset_entropy(&self, vars: &[Var]) -> F {
        let mut keep = [false; 4];
        for v in vars {
            keep[v.axis()] = true;
        }
        let stride: usize = (0..4)
            .filter(|&ax| keep[ax])
            .map(|ax| self.dims[ax])
            .product();
        if stride == 0 || vars.is_empty() {
            return F::zero();
        }
        let mut marginal = vec![F::zero(); stride];
        let mut idx = [0usize; 4];
        for (cell, &v) in self.p.iter().enumerate() {
            let mut rem = cell;
            for ax in (0..4).rev() {
                idx[ax] = rem % self.dims[ax];
                rem /= self.dims[ax];
            }
            let mut key = 0usize;
            for ax in 0..4 {
                if keep[ax] {
                    key = key * self.dims[ax] + idx[ax];
                }
            }
            marginal[key] = marginal[key] + v;
        }
        entropy_unchecked(&marginal)
    }
}

/// Mutual information `I(A; B | C)` in bits for a named grouping.
///
/// Computed as `H(A,C) + H(B,C) - H(C) - H(A,B,C)` with the convention
/// `H(empty) = 0`.
pub fn mutual_info<F: Real>(joint: &JointDist<F>, grouping: Grouping) -> F {
    let (a, b, c) = grouping.sets();
    let join = |xs: &[Var], ys: &[Var]| {
        let mut v = xs.to_vec();
        v.extend_from_slice(ys);
        v
    };
    let h_ac = joint.subset_entropy(&join(a, c));
    let h_bc = joint.subset_entropy(&join(b, c));
    let h_c = joint.subset_entropy(c);
    let h_abc = joint.subset_entropy(&join(&join(a, b), c));
    h_ac + h_bc - h_c - h_abc
}
