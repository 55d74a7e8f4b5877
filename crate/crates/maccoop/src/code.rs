//! Explicit cooperation codes and their exact error analysis.
//!
//! A code fixes a block length `n`, message counts `(M1, M2)`, and `J`
//! conference rounds. Each round, user `i` sends an uplink symbol computed
//! from its own message and the downlinks it has received so far; the
//! facilitator answers each user with a downlink symbol computed from all
//! uplinks of both users up to that round. Encoders map `(message, received
//! downlinks)` to channel-input n-tuples, and a single decoder maps output
//! n-tuples to message pairs. All maps are total lookup tables.
//!
//! Error probabilities are computed exactly by summing channel products over
//! the decoding sets, so block lengths are held to the same enumeration
//! guard as channel extensions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{unindex_tuple, DiscreteMac, EXTENSION_GUARD_BITS, NORM_TOL};
use crate::scalar::Real;
use crate::{Certificate, Error, Result};

/// Default restart budget for the heuristic blockwise search.
pub const DEFAULT_BLOCKWISE_BUDGET: usize = 10_000;

/// Exact blockwise search is allowed when the product of the two
/// partition-enumeration counts stays at or below this.
pub const EXACT_BLOCKWISE_LIMIT: u128 = 10_000_000;

/// Per-direction cooperation budgets, in bits per channel use.
///
/// `c_in[i]` limits the uplink of user `i+1` (towards the facilitator),
/// `c_out[i]` the downlink back to that user: over the `J` rounds the logs
/// of the alphabet sizes may total at most `n * c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Serialize + serde::de::DeserializeOwned")]
pub struct LinkCapacities<F> {
    /// Uplink budgets, one per user.
    pub c_in: [F; 2],
    /// Downlink budgets, one per user.
    pub c_out: [F; 2],
}

impl<F: Real> LinkCapacities<F> {
    /// Budgets that forbid any cooperation.
    pub fn zero() -> Self {
        LinkCapacities {
            c_in: [F::zero(); 2],
            c_out: [F::zero(); 2],
        }
    }

    fn validate(&self) -> Result<()> {
        for v in self.c_in.iter().chain(self.c_out.iter()) {
            if v.is_nan() || *v < F::zero() {
                return Err(Error::validation("link capacities must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Raw description of a cooperation code; the serialized file format.
///
/// Conventions: everything is 0-based and row-major. A tuple over rounds is
/// flattened with the earliest round most significant; a channel-input
/// n-tuple is flattened with the first channel use most significant; the
/// decoder stores `m1 * M2 + m2`. Map domains:
///
/// * `up_maps[i][j]`: index `m_i * prod(down_sizes[i][..j]) + flat(v_i^j)`,
///   values in `[up_sizes[i][j]]`.
/// * `down_maps[i][j]`: index `flat(u_1^{j+1}) * prod(up_sizes[1][..=j]) +
///   flat(u_2^{j+1})`, values in `[down_sizes[i][j]]`.
/// * `encoders[i]`: index `m_i * prod(down_sizes[i]) + flat(v_i^J)`, values
///   are channel-input tuple indices in `[x_sizes[i]^n]`.
/// * `decoder`: indexed by output tuples in `[y_size^n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Serialize + serde::de::DeserializeOwned")]
pub struct CodeParts<F> {
    /// Block length.
    pub n: usize,
    /// Message counts `(M1, M2)`.
    pub m: [usize; 2],
    /// Channel input alphabet sizes.
    pub x_sizes: [usize; 2],
    /// Channel output alphabet size.
    pub y_size: usize,
    /// Uplink alphabet sizes per user per round.
    pub up_sizes: [Vec<usize>; 2],
    /// Downlink alphabet sizes per user per round.
    pub down_sizes: [Vec<usize>; 2],
    /// Uplink maps per user per round.
    pub up_maps: [Vec<Vec<usize>>; 2],
    /// Downlink maps per user per round.
    pub down_maps: [Vec<Vec<usize>>; 2],
    /// Channel encoders per user.
    pub encoders: [Vec<usize>; 2],
    /// Decoder table.
    pub decoder: Vec<usize>,
    /// Cooperation budgets the code must respect.
    pub links: LinkCapacities<F>,
}

/// A validated cooperation code.
#[derive(Debug, Clone, PartialEq)]
pub struct CooperationCode<F> {
    parts: CodeParts<F>,
}

fn flat_tuple(digits: &[usize], sizes: &[usize]) -> usize {
    digits
        .iter()
        .zip(sizes)
        .fold(0, |acc, (&d, &s)| acc * s + d)
}

fn product(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

/// Pair index used by decoder tables: `m1 * M2 + m2`.
pub fn pair_index(m1: usize, m2: usize, m2_count: usize) -> usize {
    m1 * m2_count + m2
}

impl<F: Real> CooperationCode<F> {
    /// Validates raw parts into a code.
    ///
    /// # Errors
    /// Validation error on any inconsistency: bad sizes, wrong table
    /// lengths, out-of-range values, or violated link budgets.
    pub fn new(parts: CodeParts<F>) -> Result<Self> {
        let p = &parts;
        if p.m[0] == 0 || p.m[1] == 0 {
            return Err(Error::validation("message counts must be positive"));
        }
        if p.x_sizes[0] == 0 || p.x_sizes[1] == 0 || p.y_size == 0 {
            return Err(Error::validation("alphabet sizes must be positive"));
        }
        p.links.validate()?;
        let rounds = p.up_sizes[0].len();
        for i in 0..2 {
            if p.up_sizes[i].len() != rounds
                || p.down_sizes[i].len() != rounds
                || p.up_maps[i].len() != rounds
                || p.down_maps[i].len() != rounds
            {
                return Err(Error::validation(
                    "all per-round tables must cover the same number of rounds",
                ));
            }
            if p.up_sizes[i].iter().chain(&p.down_sizes[i]).any(|&s| s == 0) {
                return Err(Error::validation("conference alphabets must be nonempty"));
            }
        }
        // Link budgets: sum of alphabet logs within n*c, with float slack.
        for i in 0..2 {
            let spent_up: f64 = p.up_sizes[i].iter().map(|&s| (s as f64).log2()).sum();
            let spent_down: f64 = p.down_sizes[i].iter().map(|&s| (s as f64).log2()).sum();
            let cap_up = p.n as f64 * p.links.c_in[i].to_f64().unwrap_or(f64::NAN);
            let cap_down = p.n as f64 * p.links.c_out[i].to_f64().unwrap_or(f64::NAN);
            if spent_up > cap_up + NORM_TOL {
                return Err(Error::validation(format!(
                    "user {} uplink uses {spent_up:.6} bits, budget is {cap_up:.6}",
                    i + 1
                )));
            }
            if spent_down > cap_down + NORM_TOL {
                return Err(Error::validation(format!(
                    "user {} downlink uses {spent_down:.6} bits, budget is {cap_down:.6}",
                    i + 1
                )));
            }
        }
        // Table lengths and ranges.
        for i in 0..2 {
            for j in 0..rounds {
                let dom = p.m[i] * product(&p.down_sizes[i][..j]);
                if p.up_maps[i][j].len() != dom {
                    return Err(Error::validation(format!(
                        "uplink map (user {}, round {}) has {} entries, expected {dom}",
                        i + 1,
                        j + 1,
                        p.up_maps[i][j].len()
                    )));
                }
                if p.up_maps[i][j].iter().any(|&u| u >= p.up_sizes[i][j]) {
                    return Err(Error::validation(format!(
                        "uplink map (user {}, round {}) value out of range",
                        i + 1,
                        j + 1
                    )));
                }
                let dom = product(&p.up_sizes[0][..=j]) * product(&p.up_sizes[1][..=j]);
                if p.down_maps[i][j].len() != dom {
                    return Err(Error::validation(format!(
                        "downlink map (user {}, round {}) has {} entries, expected {dom}",
                        i + 1,
                        j + 1,
                        p.down_maps[i][j].len()
                    )));
                }
                if p.down_maps[i][j].iter().any(|&v| v >= p.down_sizes[i][j]) {
                    return Err(Error::validation(format!(
                        "downlink map (user {}, round {}) value out of range",
                        i + 1,
                        j + 1
                    )));
                }
            }
            let dom = p.m[i] * product(&p.down_sizes[i]);
            if p.encoders[i].len() != dom {
                return Err(Error::validation(format!(
                    "encoder {} has {} entries, expected {dom}",
                    i + 1,
                    p.encoders[i].len()
                )));
            }
            let range = p.x_sizes[i].checked_pow(p.n as u32).ok_or_else(|| {
                Error::SizeLimit("channel-input tuple space overflows".into())
            })?;
            if p.encoders[i].iter().any(|&x| x >= range) {
                return Err(Error::validation(format!("encoder {} value out of range", i + 1)));
            }
        }
        let ydom = p.y_size.checked_pow(p.n as u32).ok_or_else(|| {
            Error::SizeLimit("output tuple space overflows".into())
        })?;
        if p.decoder.len() != ydom {
            return Err(Error::validation(format!(
                "decoder has {} entries, expected {ydom}",
                p.decoder.len()
            )));
        }
        if p.decoder.iter().any(|&pm| pm >= p.m[0] * p.m[1]) {
            return Err(Error::validation("decoder value out of range"));
        }
        Ok(CooperationCode { parts })
    }

    /// Convenience constructor for codes without conferencing (`J = 0`).
    pub fn without_conferencing(
        n: usize,
        m: [usize; 2],
        x_sizes: [usize; 2],
        y_size: usize,
        encoders: [Vec<usize>; 2],
        decoder: Vec<usize>,
        links: LinkCapacities<F>,
    ) -> Result<Self> {
        CooperationCode::new(CodeParts {
            n,
            m,
            x_sizes,
            y_size,
            up_sizes: [vec![], vec![]],
            down_sizes: [vec![], vec![]],
            up_maps: [vec![], vec![]],
            down_maps: [vec![], vec![]],
            encoders,
            decoder,
            links,
        })
    }

    /// Raw parts, e.g. for serialization.
    pub fn parts(&self) -> &CodeParts<F> {
        &self.parts
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.parts.n
    }

    /// Message counts.
    pub fn m(&self) -> [usize; 2] {
        self.parts.m
    }

    /// Number of conference rounds.
    pub fn rounds(&self) -> usize {
        self.parts.up_sizes[0].len()
    }

    /// Cooperation budgets.
    pub fn links(&self) -> &LinkCapacities<F> {
        &self.parts.links
    }

    /// Channel input alphabet sizes.
    pub fn x_sizes(&self) -> [usize; 2] {
        self.parts.x_sizes
    }

    /// Channel output alphabet size.
    pub fn y_size(&self) -> usize {
        self.parts.y_size
    }

    /// Runs the conference for a message pair and returns all symbols.
    ///
    /// # Panics
    /// Panics if a message index is out of range.
    pub fn transcript(&self, m1: usize, m2: usize) -> Transcript {
        let p = &self.parts;
        assert!(m1 < p.m[0] && m2 < p.m[1]);
        let messages = [m1, m2];
        let rounds = self.rounds();
        let mut u: [Vec<usize>; 2] = [Vec::with_capacity(rounds), Vec::with_capacity(rounds)];
        let mut v: [Vec<usize>; 2] = [Vec::with_capacity(rounds), Vec::with_capacity(rounds)];
        for j in 0..rounds {
            for i in 0..2 {
                let idx = messages[i] * product(&p.down_sizes[i][..j])
                    + flat_tuple(&v[i], &p.down_sizes[i][..j]);
                u[i].push(p.up_maps[i][j][idx]);
            }
            let idx = flat_tuple(&u[0], &p.up_sizes[0][..=j]) * product(&p.up_sizes[1][..=j])
                + flat_tuple(&u[1], &p.up_sizes[1][..=j]);
            for (vi, maps) in v.iter_mut().zip(p.down_maps.iter()) {
                vi.push(maps[j][idx]);
            }
        }
        let x = [0, 1].map(|i| {
            p.encoders[i]
                [messages[i] * product(&p.down_sizes[i]) + flat_tuple(&v[i], &p.down_sizes[i])]
        });
        Transcript { u, v, x }
    }

    /// Exact error matrix `(m1, m2) -> lambda(m1, m2)` against a channel.
    ///
    /// # Errors
    /// Validation error if the channel alphabets do not match the code;
    /// size-limit error if `n * log2(|Y|)` exceeds the enumeration guard.
    pub fn error_matrix(&self, mac: &DiscreteMac<F>) -> Result<ErrorMatrix<F>> {
        let p = &self.parts;
        if mac.n1() != p.x_sizes[0] || mac.n2() != p.x_sizes[1] || mac.ny() != p.y_size {
            return Err(Error::validation(format!(
                "channel alphabets ({}, {}, {}) do not match the code ({}, {}, {})",
                mac.n1(),
                mac.n2(),
                mac.ny(),
                p.x_sizes[0],
                p.x_sizes[1],
                p.y_size
            )));
        }
        let ybits = p.n as f64 * (p.y_size as f64).log2();
        if ybits > EXTENSION_GUARD_BITS {
            return Err(Error::SizeLimit(format!(
                "output dimension: n*log2(|Y|) = {ybits:.2} exceeds the guard of {EXTENSION_GUARD_BITS} bits"
            )));
        }
        let ydom = p.y_size.pow(p.n as u32);
        let values: Vec<F> = (0..p.m[0] * p.m[1])
            .into_par_iter()
            .map(|pm| {
                let (a, b) = (pm / p.m[1], pm % p.m[1]);
                let tr = self.transcript(a, b);
                let mut x1d = vec![0usize; p.n];
                let mut x2d = vec![0usize; p.n];
                unindex_tuple(tr.x[0], p.x_sizes[0], &mut x1d);
                unindex_tuple(tr.x[1], p.x_sizes[1], &mut x2d);
                let mut correct = F::zero();
                let mut yd = vec![0usize; p.n];
                for y in 0..ydom {
                    if p.decoder[y] != pm {
                        continue;
                    }
                    unindex_tuple(y, p.y_size, &mut yd);
                    let mut prob = F::one();
                    for t in 0..p.n {
                        prob = prob * mac.prob(x1d[t], x2d[t], yd[t]);
                    }
                    correct = correct + prob;
                }
                (F::one() - correct).max(F::zero()).min(F::one())
            })
            .collect();
        Ok(ErrorMatrix {
            m: p.m,
            values,
        })
    }

    /// Replaces the decoder with the maximum-likelihood rule for a channel
    /// (ties resolved towards the lowest message pair).
    ///
    /// # Errors
    /// Same conditions as [`CooperationCode::error_matrix`].
    pub fn with_ml_decoder(mut self, mac: &DiscreteMac<F>) -> Result<Self> {
        let p = &self.parts;
        if mac.n1() != p.x_sizes[0] || mac.n2() != p.x_sizes[1] || mac.ny() != p.y_size {
            return Err(Error::validation("channel alphabets do not match the code"));
        }
        let ybits = p.n as f64 * (p.y_size as f64).log2();
        if ybits > EXTENSION_GUARD_BITS {
            return Err(Error::SizeLimit(format!(
                "output dimension: n*log2(|Y|) = {ybits:.2} exceeds the guard of {EXTENSION_GUARD_BITS} bits"
            )));
        }
        let pairs = p.m[0] * p.m[1];
        let mut xdigits = Vec::with_capacity(pairs);
        for pm in 0..pairs {
            let tr = self.transcript(pm / p.m[1], pm % p.m[1]);
            let mut x1d = vec![0usize; p.n];
            let mut x2d = vec![0usize; p.n];
            unindex_tuple(tr.x[0], p.x_sizes[0], &mut x1d);
            unindex_tuple(tr.x[1], p.x_sizes[1], &mut x2d);
            xdigits.push((x1d, x2d));
        }
        let ydom = p.y_size.pow(p.n as u32);
        let decoder: Vec<usize> = (0..ydom)
            .into_par_iter()
            .map(|y| {
                let mut yd = vec![0usize; p.n];
                unindex_tuple(y, p.y_size, &mut yd);
                let mut best = (F::neg_infinity(), 0usize);
                for (pm, (x1d, x2d)) in xdigits.iter().enumerate() {
                    let mut prob = F::one();
                    for t in 0..p.n {
                        prob = prob * mac.prob(x1d[t], x2d[t], yd[t]);
                    }
                    if prob > best.0 {
                        best = (prob, pm);
                    }
                }
                best.1
            })
            .collect();
        self.parts.decoder = decoder;
        Ok(self)
    }
}

/// The conference symbols and channel inputs for one message pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    /// Uplink symbols per user, one per round.
    pub u: [Vec<usize>; 2],
    /// Downlink symbols per user, one per round.
    pub v: [Vec<usize>; 2],
    /// Channel-input tuple indices per user.
    pub x: [usize; 2],
}

/// Concatenates two codes over the same channel alphabets.
///
/// The result uses both codes back to back: block length `nA + nB`, message
/// counts `M_i^A * M_i^B` (first code most significant), rounds interleaved
/// per round index with the shorter code padded by unit alphabets, and link
/// budgets averaged with weights `nA/n` and `nB/n`.
///
/// # Errors
/// Validation error if the channel alphabets differ; size-limit error if
/// the combined decoder table would overflow the enumeration guard.
pub fn concatenate<F: Real>(
    a: &CooperationCode<F>,
    b: &CooperationCode<F>,
) -> Result<CooperationCode<F>> {
    let (pa, pb) = (a.parts(), b.parts());
    if pa.x_sizes != pb.x_sizes || pa.y_size != pb.y_size {
        return Err(Error::validation(
            "concatenation requires identical channel alphabets",
        ));
    }
    let n = pa.n + pb.n;
    let ybits = n as f64 * (pa.y_size as f64).log2();
    if ybits > EXTENSION_GUARD_BITS {
        return Err(Error::SizeLimit(format!(
            "output dimension: n*log2(|Y|) = {ybits:.2} exceeds the guard of {EXTENSION_GUARD_BITS} bits"
        )));
    }
    let rounds = a.rounds().max(b.rounds());
    let pad = |sizes: &[usize]| -> Vec<usize> {
        let mut s = sizes.to_vec();
        s.resize(rounds, 1);
        s
    };
    let up_a = [pad(&pa.up_sizes[0]), pad(&pa.up_sizes[1])];
    let up_b = [pad(&pb.up_sizes[0]), pad(&pb.up_sizes[1])];
    let down_a = [pad(&pa.down_sizes[0]), pad(&pa.down_sizes[1])];
    let down_b = [pad(&pb.down_sizes[0]), pad(&pb.down_sizes[1])];

    let m = [pa.m[0] * pb.m[0], pa.m[1] * pb.m[1]];
    let mut up_sizes: [Vec<usize>; 2] = [vec![], vec![]];
    let mut down_sizes: [Vec<usize>; 2] = [vec![], vec![]];
    for i in 0..2 {
        for j in 0..rounds {
            up_sizes[i].push(up_a[i][j] * up_b[i][j]);
            down_sizes[i].push(down_a[i][j] * down_b[i][j]);
        }
    }

    // Padded per-round maps of each half: unit rounds carry constant maps.
    let half_up = |parts: &CodeParts<F>, padded_down: &[Vec<usize>; 2], i: usize, j: usize, mi: usize, v: &[usize]| -> usize {
        if j < parts.up_sizes[i].len() {
            let idx = mi * product(&parts.down_sizes[i][..j]) + flat_tuple(v, &padded_down[i][..j]);
            parts.up_maps[i][j][idx]
        } else {
            0
        }
    };
    let half_down = |parts: &CodeParts<F>, padded_up: &[Vec<usize>; 2], i: usize, j: usize, u1: &[usize], u2: &[usize]| -> usize {
        if j < parts.down_sizes[i].len() {
            let idx = flat_tuple(u1, &padded_up[0][..=j]) * product(&padded_up[1][..=j])
                + flat_tuple(u2, &padded_up[1][..=j]);
            parts.down_maps[i][j][idx]
        } else {
            0
        }
    };

    // All composite tables are produced by decomposing composite indices
    // into their A and B halves and delegating.
    let split_m = |i: usize, mi: usize| (mi / pb.m[i], mi % pb.m[i]);
    let split_digit = |d: usize, size_b: usize| (d / size_b, d % size_b);

    let mut up_maps: [Vec<Vec<usize>>; 2] = [vec![], vec![]];
    let mut down_maps: [Vec<Vec<usize>>; 2] = [vec![], vec![]];
    for i in 0..2 {
        for j in 0..rounds {
            let dom = m[i] * product(&down_sizes[i][..j]);
            let mut table = Vec::with_capacity(dom);
            let mut vd = vec![0usize; j];
            for idx in 0..dom {
                let mi = idx / product(&down_sizes[i][..j]);
                let vflat = idx % product(&down_sizes[i][..j]);
                let mut rem = vflat;
                for (jj, slot) in vd.iter_mut().enumerate() {
                    let tail: usize = down_sizes[i][jj + 1..j].iter().product();
                    *slot = rem / tail;
                    rem %= tail;
                }
                let (ma, mb) = split_m(i, mi);
                let (va, vb): (Vec<usize>, Vec<usize>) = vd
                    .iter()
                    .enumerate()
                    .map(|(jj, &d)| split_digit(d, down_b[i][jj]))
                    .unzip();
                let ua = half_up(pa, &down_a, i, j, ma, &va);
                let ub = half_up(pb, &down_b, i, j, mb, &vb);
                table.push(ua * up_b[i][j] + ub);
            }
            up_maps[i].push(table);

            let dom = product(&up_sizes[0][..=j]) * product(&up_sizes[1][..=j]);
            let mut table = Vec::with_capacity(dom);
            for idx in 0..dom {
                let u1flat = idx / product(&up_sizes[1][..=j]);
                let u2flat = idx % product(&up_sizes[1][..=j]);
                let unflatten = |mut flat: usize, user: usize| -> (Vec<usize>, Vec<usize>) {
                    let mut a_part = vec![0usize; j + 1];
                    let mut b_part = vec![0usize; j + 1];
                    for jj in (0..=j).rev() {
                        let d = flat % up_sizes[user][jj];
                        flat /= up_sizes[user][jj];
                        let (da, db) = split_digit(d, up_b[user][jj]);
                        a_part[jj] = da;
                        b_part[jj] = db;
                    }
                    (a_part, b_part)
                };
                let (u1a, u1b) = unflatten(u1flat, 0);
                let (u2a, u2b) = unflatten(u2flat, 1);
                let va = half_down(pa, &up_a, i, j, &u1a, &u2a);
                let vb = half_down(pb, &up_b, i, j, &u1b, &u2b);
                table.push(va * down_b[i][j] + vb);
            }
            down_maps[i].push(table);
        }
    }

    let mut encoders: [Vec<usize>; 2] = [vec![], vec![]];
    for i in 0..2 {
        let vdom = product(&down_sizes[i]);
        let mut table = Vec::with_capacity(m[i] * vdom);
        let mut vd = vec![0usize; rounds];
        for idx in 0..m[i] * vdom {
            let mi = idx / vdom;
            let mut rem = idx % vdom;
            for (jj, slot) in vd.iter_mut().enumerate() {
                let tail: usize = down_sizes[i][jj + 1..].iter().product();
                *slot = rem / tail;
                rem %= tail;
            }
            let (ma, mb) = split_m(i, mi);
            let (va, vb): (Vec<usize>, Vec<usize>) = vd
                .iter()
                .enumerate()
                .map(|(jj, &d)| split_digit(d, down_b[i][jj]))
                .unzip();
            let xa = pa.encoders[i][ma * product(&pa.down_sizes[i])
                + flat_tuple(&va[..pa.down_sizes[i].len()], &pa.down_sizes[i])];
            let xb = pb.encoders[i][mb * product(&pb.down_sizes[i])
                + flat_tuple(&vb[..pb.down_sizes[i].len()], &pb.down_sizes[i])];
            table.push(xa * pa.x_sizes[i].pow(pb.n as u32) + xb);
        }
        encoders[i] = table;
    }

    let ydom_b = pa.y_size.pow(pb.n as u32);
    let ydom = pa.y_size.pow(n as u32);
    let mut decoder = Vec::with_capacity(ydom);
    for y in 0..ydom {
        let (ya, yb) = (y / ydom_b, y % ydom_b);
        let (p1a, p2a) = (pa.decoder[ya] / pa.m[1], pa.decoder[ya] % pa.m[1]);
        let (p1b, p2b) = (pb.decoder[yb] / pb.m[1], pb.decoder[yb] % pb.m[1]);
        decoder.push(pair_index(p1a * pb.m[0] + p1b, p2a * pb.m[1] + p2b, m[1]));
    }

    let weight = |ca: F, cb: F| {
        (F::of_usize(pa.n) * ca + F::of_usize(pb.n) * cb) / F::of_usize(n)
    };
    let links = LinkCapacities {
        c_in: [
            weight(pa.links.c_in[0], pb.links.c_in[0]),
            weight(pa.links.c_in[1], pb.links.c_in[1]),
        ],
        c_out: [
            weight(pa.links.c_out[0], pb.links.c_out[0]),
            weight(pa.links.c_out[1], pb.links.c_out[1]),
        ],
    };

    CooperationCode::new(CodeParts {
        n,
        m,
        x_sizes: pa.x_sizes,
        y_size: pa.y_size,
        up_sizes,
        down_sizes,
        up_maps,
        down_maps,
        encoders,
        decoder,
        links,
    })
}

/// An exact per-pair error matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix<F> {
    m: [usize; 2],
    values: Vec<F>,
}

impl<F: Real> ErrorMatrix<F> {
    /// Builds a matrix from row-major values.
    ///
    /// # Errors
    /// Validation error on a length mismatch or entries outside `[0, 1]`.
    pub fn new(m: [usize; 2], values: Vec<F>) -> Result<Self> {
        if m[0] == 0 || m[1] == 0 || values.len() != m[0] * m[1] {
            return Err(Error::validation("error matrix shape mismatch"));
        }
        if values.iter().any(|&v| v < F::zero() || v > F::one()) {
            return Err(Error::validation("error probabilities must lie in [0, 1]"));
        }
        Ok(ErrorMatrix { m, values })
    }

    /// Message counts.
    pub fn m(&self) -> [usize; 2] {
        self.m
    }

    /// Entry `lambda(m1, m2)`.
    pub fn get(&self, m1: usize, m2: usize) -> F {
        self.values[m1 * self.m[1] + m2]
    }

    /// Flat row-major values.
    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// Average error probability.
    pub fn avg(&self) -> F {
        self.values.iter().fold(F::zero(), |a, &v| a + v) / F::of_usize(self.values.len())
    }

    /// Maximal error probability.
    pub fn max(&self) -> F {
        self.values.iter().fold(F::zero(), |a, &v| a.max(v))
    }

    fn row_marginal(&self, r: usize) -> F {
        (0..self.m[1]).fold(F::zero(), |a, c| a + self.get(r, c))
    }

    fn col_marginal(&self, c: usize) -> F {
        (0..self.m[0]).fold(F::zero(), |a, r| a + self.get(r, c))
    }
}

/// Block counts for an `(r1, r2)` query: `K = min(floor(2^{n r}), M)` and
/// `L = floor(M / K)`.
///
/// A tiny epsilon is added before the floor so decimal-entered rates that
/// represent integers (e.g. `r = 0.5`, `n = 2`) are not pushed one block
/// down by float rounding.
pub fn block_counts<F: Real>(n: usize, m: usize, r: F) -> (usize, usize) {
    let raw = (F::of_usize(2).powf(F::of_usize(n) * r) + F::of_f64(1e-9)).floor();
    let k = raw.to_usize().unwrap_or(usize::MAX).clamp(1, m);
    (k, m / k)
}

/// Options for the blockwise error search.
#[derive(Debug, Clone)]
pub struct BlockwiseOptions {
    /// Demand the exact optimum (fails beyond the enumeration budget).
    pub exact: bool,
    /// Restart budget for the heuristic.
    pub budget: usize,
    /// Seed for the heuristic restarts.
    pub seed: u64,
}

impl Default for BlockwiseOptions {
    fn default() -> Self {
        BlockwiseOptions {
            exact: false,
            budget: DEFAULT_BLOCKWISE_BUDGET,
            seed: 0,
        }
    }
}

/// Result of a blockwise error computation.
#[derive(Debug, Clone)]
pub struct BlockwiseResult<F> {
    /// The (certified or best-found) value of the min-max block average.
    pub value: F,
    /// `Exact` for full enumeration, `UpperBound` for the heuristic.
    pub certificate: Certificate,
    /// Witness row permutation (`pi1[pos]` = source message).
    pub pi1: Vec<usize>,
    /// Witness column permutation.
    pub pi2: Vec<usize>,
    /// Block grid `(K1, K2)`.
    pub k: [usize; 2],
    /// Block sizes `(L1, L2)`.
    pub l: [usize; 2],
    /// Worst block `(s, t)` under the witness permutations.
    pub worst_block: [usize; 2],
}

/// The `(r1, r2)` blockwise error of an error matrix at block length `n`:
/// messages of each user are split into `K_i` blocks of `L_i` consecutive
/// indices after permutation (trailing remainders are excluded), and the
/// value is the minimum over permutations of the largest block-average
/// error.
///
/// `r = 0` degenerates to the plain average and large `r` to the maximum.
///
/// # Errors
/// Validation error for negative rates; an exact-budget error when `exact`
/// is requested beyond the enumeration limit.
pub fn blockwise_error<F: Real>(
    em: &ErrorMatrix<F>,
    n: usize,
    r1: F,
    r2: F,
    opts: &BlockwiseOptions,
) -> Result<BlockwiseResult<F>> {
    if r1 < F::zero() || r2 < F::zero() {
        return Err(Error::validation("rates must be nonnegative"));
    }
    let (k1, l1) = block_counts(n, em.m()[0], r1);
    let (k2, l2) = block_counts(n, em.m()[1], r2);
    if opts.exact {
        exact_blockwise(em, [k1, k2], [l1, l2])
    } else {
        heuristic_blockwise(em, [k1, k2], [l1, l2], opts)
    }
}

/// Binomial coefficient saturated just above `cap`; the stepwise products
/// are exact binomials and monotone, so the early exit is safe.
fn binomial_capped(n: u64, k: u64, cap: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * u128::from(n - k + i) / u128::from(i);
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

fn partition_count_capped(m: usize, k: usize, l: usize, cap: u128) -> u128 {
    let r = m - k * l;
    let mut acc = binomial_capped(m as u64, r as u64, cap);
    let mut left = m - r;
    for _ in 0..k {
        // Anchor trick: the smallest unplaced element picks its group.
        acc = acc.saturating_mul(binomial_capped(left as u64 - 1, l as u64 - 1, cap));
        if acc > cap {
            return cap + 1;
        }
        left -= l;
    }
    acc
}

/// Enumerates canonical partitions of `0..m` into `k` unordered groups of
/// size `l` plus an excluded remainder of size `m - k*l`, visiting each
/// once. Groups arrive sorted, ordered by their smallest element.
fn enumerate_partitions(m: usize, k: usize, l: usize, visit: &mut impl FnMut(&[Vec<usize>])) {
    let remaining: Vec<usize> = (0..m).collect();
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(k);
    let rem_slots = m - k * l;
    recurse_partitions(&remaining, rem_slots, k, l, &mut groups, visit);
}

fn recurse_partitions(
    remaining: &[usize],
    rem_slots: usize,
    k: usize,
    l: usize,
    groups: &mut Vec<Vec<usize>>,
    visit: &mut impl FnMut(&[Vec<usize>]),
) {
    if remaining.is_empty() {
        visit(groups);
        return;
    }
    let anchor = remaining[0];
    // Option A: exclude the anchor.
    if rem_slots > 0 {
        recurse_partitions(&remaining[1..], rem_slots - 1, k, l, groups, visit);
    }
    // Option B: the anchor opens a new group with l-1 chosen partners.
    if groups.len() < k {
        let pool = &remaining[1..];
        let mut combo = vec![0usize; l.saturating_sub(1)];
        choose_rec(pool, 0, 0, &mut combo, &mut |chosen| {
            let mut group = Vec::with_capacity(l);
            group.push(anchor);
            group.extend_from_slice(chosen);
            let rest: Vec<usize> =
                pool.iter().copied().filter(|x| !chosen.contains(x)).collect();
            groups.push(group);
            recurse_partitions(&rest, rem_slots, k, l, groups, visit);
            groups.pop();
        });
    }
}

fn choose_rec(
    pool: &[usize],
    start: usize,
    depth: usize,
    combo: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == combo.len() {
        visit(combo);
        return;
    }
    for i in start..pool.len() {
        combo[depth] = pool[i];
        choose_rec(pool, i + 1, depth + 1, combo, visit);
    }
}

fn exact_blockwise<F: Real>(
    em: &ErrorMatrix<F>,
    k: [usize; 2],
    l: [usize; 2],
) -> Result<BlockwiseResult<F>> {
    let m = em.m();
    let count1 = partition_count_capped(m[0], k[0], l[0], EXACT_BLOCKWISE_LIMIT);
    let count2 = partition_count_capped(m[1], k[1], l[1], EXACT_BLOCKWISE_LIMIT);
    let pairs = count1.saturating_mul(count2);
    if pairs > EXACT_BLOCKWISE_LIMIT {
        return Err(Error::ExactBudget {
            pairs,
            limit: EXACT_BLOCKWISE_LIMIT,
        });
    }
    // Best exact candidate: (value, row groups, column groups).
    type Partition = Vec<Vec<usize>>;
    let mut best: Option<(F, Partition, Partition)> = None;
    enumerate_partitions(m[0], k[0], l[0], &mut |rows| {
        // Column sums per row group, reused across all column partitions.
        let mut sums = vec![F::zero(); k[0] * m[1]];
        for (g, group) in rows.iter().enumerate() {
            for c in 0..m[1] {
                sums[g * m[1] + c] =
                    group.iter().fold(F::zero(), |a, &r| a + em.get(r, c));
            }
        }
        enumerate_partitions(m[1], k[1], l[1], &mut |cols| {
            let mut worst = F::zero();
            for g in 0..k[0] {
                for group in cols.iter() {
                    let s = group
                        .iter()
                        .fold(F::zero(), |a, &c| a + sums[g * m[1] + c]);
                    worst = worst.max(s);
                }
            }
            let denom = F::of_usize(l[0] * l[1]);
            let value = worst / denom;
            if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
                best = Some((value, rows.to_vec(), cols.to_vec()));
            }
        });
    });
    let (value, rows, cols) = best.expect("at least one partition exists");
    let pi1 = partition_to_permutation(m[0], &rows);
    let pi2 = partition_to_permutation(m[1], &cols);
    let worst_block = worst_block(em, &pi1, &pi2, k, l);
    Ok(BlockwiseResult {
        value,
        certificate: Certificate::Exact,
        pi1,
        pi2,
        k,
        l,
        worst_block,
    })
}

fn partition_to_permutation(m: usize, groups: &[Vec<usize>]) -> Vec<usize> {
    let mut pi: Vec<usize> = groups.iter().flatten().copied().collect();
    let mut used = vec![false; m];
    for &x in &pi {
        used[x] = true;
    }
    pi.extend((0..m).filter(|&x| !used[x]));
    pi
}

pub(crate) fn max_block_avg<F: Real>(
    em: &ErrorMatrix<F>,
    pi1: &[usize],
    pi2: &[usize],
    k: [usize; 2],
    l: [usize; 2],
) -> F {
    let mut worst = F::zero();
    for s in 0..k[0] {
        for t in 0..k[1] {
            let sum = block_sum(em, pi1, pi2, s, t, l);
            worst = worst.max(sum / F::of_usize(l[0] * l[1]));
        }
    }
    worst
}

fn block_sum<F: Real>(
    em: &ErrorMatrix<F>,
    pi1: &[usize],
    pi2: &[usize],
    s: usize,
    t: usize,
    l: [usize; 2],
) -> F {
    pi1[s * l[0]..(s + 1) * l[0]].iter().fold(F::zero(), |acc, &r| {
        pi2[t * l[1]..(t + 1) * l[1]]
            .iter()
            .fold(acc, |a, &c| a + em.get(r, c))
    })
}

fn worst_block<F: Real>(
    em: &ErrorMatrix<F>,
    pi1: &[usize],
    pi2: &[usize],
    k: [usize; 2],
    l: [usize; 2],
) -> [usize; 2] {
    let mut worst = (F::neg_infinity(), [0usize; 2]);
    for s in 0..k[0] {
        for t in 0..k[1] {
            let sum = block_sum(em, pi1, pi2, s, t, l);
            if sum > worst.0 {
                worst = (sum, [s, t]);
            }
        }
    }
    worst.1
}

/// Sort descending by marginal, push the remainder (the worst messages) to
/// the excluded tail, and deal the rest snake-wise across blocks to balance
/// block sums.
fn snake_permutation<F: Real>(marginals: &[F], k: usize, l: usize) -> Vec<usize> {
    let m = marginals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        marginals[b]
            .partial_cmp(&marginals[a])
            .expect("error values are not NaN")
            .then(a.cmp(&b))
    });
    let excluded = m - k * l;
    let kept = &order[excluded..];
    let mut blocks: Vec<Vec<usize>> = vec![Vec::with_capacity(l); k];
    for (rank, &msg) in kept.iter().enumerate() {
        let round = rank / k;
        let pos = rank % k;
        let block = if round.is_multiple_of(2) { pos } else { k - 1 - pos };
        blocks[block].push(msg);
    }
    let mut pi: Vec<usize> = blocks.into_iter().flatten().collect();
    pi.extend_from_slice(&order[..excluded]);
    pi
}

fn heuristic_blockwise<F: Real>(
    em: &ErrorMatrix<F>,
    k: [usize; 2],
    l: [usize; 2],
    opts: &BlockwiseOptions,
) -> Result<BlockwiseResult<F>> {
    if opts.budget == 0 {
        return Err(Error::validation("restart budget must be positive"));
    }
    let m = em.m();
    let row_marg: Vec<F> = (0..m[0]).map(|r| em.row_marginal(r)).collect();
    let col_marg: Vec<F> = (0..m[1]).map(|c| em.col_marginal(c)).collect();
    let candidate = |index: usize| -> (Vec<usize>, Vec<usize>) {
        if index == 0 {
            (
                snake_permutation(&row_marg, k[0], l[0]),
                snake_permutation(&col_marg, k[1], l[1]),
            )
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(
                opts.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut pi1: Vec<usize> = (0..m[0]).collect();
            let mut pi2: Vec<usize> = (0..m[1]).collect();
            pi1.shuffle(&mut rng);
            pi2.shuffle(&mut rng);
            (pi1, pi2)
        }
    };
    let best = (0..opts.budget)
        .into_par_iter()
        .map(|index| {
            let (pi1, pi2) = candidate(index);
            let value = max_block_avg(em, &pi1, &pi2, k, l);
            (value, index, pi1, pi2)
        })
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("error values are not NaN")
                .then(a.1.cmp(&b.1))
        })
        .expect("budget is positive");
    let (value, _, pi1, pi2) = best;
    let worst_block = worst_block(em, &pi1, &pi2, k, l);
    Ok(BlockwiseResult {
        value,
        certificate: Certificate::UpperBound,
        pi1,
        pi2,
        k,
        l,
        worst_block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Noisy XOR channel: y = x1 ^ x2 with symbol flip probability 0.1.
    fn noisy_xor() -> DiscreteMac<f64> {
        let b: Vec<String> = ["0", "1"].iter().map(|s| s.to_string()).collect();
        let mut p = vec![vec![vec![0.0; 2]; 2]; 2];
        for (a, pa) in p.iter_mut().enumerate() {
            for (c, pac) in pa.iter_mut().enumerate() {
                let y = a ^ c;
                pac[y] = 0.9;
                pac[1 - y] = 0.1;
            }
        }
        DiscreteMac::new(b.clone(), b.clone(), b, p).unwrap()
    }

    fn xor_toy_code() -> CooperationCode<f64> {
        // n = 1, M = (2, 2), no conferencing; decoder guesses (y, 0).
        CooperationCode::without_conferencing(
            1,
            [2, 2],
            [2, 2],
            2,
            [vec![0, 1], vec![0, 1]],
            vec![pair_index(0, 0, 2), pair_index(1, 0, 2)],
            LinkCapacities::zero(),
        )
        .unwrap()
    }

    #[test]
    fn error_matrix_matches_hand_computation() {
        let em = xor_toy_code().error_matrix(&noisy_xor()).unwrap();
        // Pair (0,0): y=0 w.p. 0.9, decoded (0,0): lambda = 0.1.
        assert_abs_diff_eq!(em.get(0, 0), 0.1, epsilon = 1e-12);
        // Pair (0,1): true y=1 decodes to (1,0), never (0,1): lambda = 1.
        assert_abs_diff_eq!(em.get(0, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(em.get(1, 0), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(em.get(1, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(em.avg(), 0.55, epsilon = 1e-12);
        assert_eq!(em.max(), 1.0);
    }

    #[test]
    fn two_round_transcript_hand_unrolled() {
        // User 1 uplinks its message bit in round 1; the facilitator echoes
        // it down to user 2; user 2 uplinks the echo in round 2; the
        // facilitator forwards that to user 1. User 1's encoder then sends
        // the round-2 downlink, closing the loop.
        let parts = CodeParts {
            n: 1,
            m: [2, 1],
            x_sizes: [2, 2],
            y_size: 2,
            up_sizes: [vec![2, 1], vec![1, 2]],
            down_sizes: [vec![1, 2], vec![2, 1]],
            up_maps: [
                vec![vec![0, 1], vec![0, 0]],
                // Round 2, user 2: domain is m2 x V21 = 1 x 2, echo v21.
                vec![vec![0], vec![0, 1]],
            ],
            down_maps: [
                // Round 1 to user 1: constant. Round 2: forward u22.
                // Round-2 domain: U1^2 x U2^2 = (2*1) x (1*2) = 4 entries,
                // index = u11 * 2 + u22.
                vec![vec![0, 0], vec![0, 1, 0, 1]],
                // Round 1 to user 2: forward u11 (domain 2 x 1).
                vec![vec![0, 1], vec![0, 0, 0, 0]],
            ],
            encoders: [
                // f1(m1, v11, v12) = v12; domain 2 x (1*2).
                vec![0, 1, 0, 1],
                // f2(m2, v21, v22) = v21; domain 1 x (2*1).
                vec![0, 1],
            ],
            decoder: vec![pair_index(0, 0, 1), pair_index(1, 0, 1)],
            links: LinkCapacities {
                c_in: [1.0, 1.0],
                c_out: [1.0, 1.0],
            },
        };
        let code = CooperationCode::new(parts).unwrap();
        let tr = code.transcript(1, 0);
        assert_eq!(tr.u[0], vec![1, 0]);
        assert_eq!(tr.v[1], vec![1, 0]);
        assert_eq!(tr.u[1], vec![0, 1]);
        assert_eq!(tr.v[0], vec![0, 1]);
        assert_eq!(tr.x, [1, 1]);
        let tr = code.transcript(0, 0);
        assert_eq!(tr.x, [0, 0]);
    }

    #[test]
    fn link_budget_violations_are_rejected() {
        let mut parts = xor_toy_code().parts().clone();
        parts.up_sizes = [vec![4], vec![1]];
        parts.down_sizes = [vec![1], vec![1]];
        parts.up_maps = [vec![vec![0, 1]], vec![vec![0, 0]]];
        parts.down_maps = [vec![vec![0; 4]], vec![vec![0; 4]]];
        parts.encoders = [vec![0, 1], vec![0, 1]];
        // c_in = 1 bit over n = 1 cannot carry a 4-ary uplink.
        parts.links = LinkCapacities {
            c_in: [1.0, 0.0],
            c_out: [0.0, 0.0],
        };
        match CooperationCode::new(parts) {
            Err(Error::Validation(msg)) => assert!(msg.contains("uplink")),
            other => panic!("expected budget rejection, got {other:?}"),
        }
    }

    #[test]
    fn ml_decoder_is_optimal_on_the_toy() {
        let code = xor_toy_code().with_ml_decoder(&noisy_xor()).unwrap();
        let em = code.error_matrix(&noisy_xor()).unwrap();
        // XOR is not uniquely decodable: (0,0) and (1,1) collide, ties go to
        // the lowest pair, so (0,0) and (0,1) decode correctly w.p. 0.9.
        assert_abs_diff_eq!(em.get(0, 0), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(em.get(0, 1), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(em.get(1, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn block_counts_floor_and_cap() {
        assert_eq!(block_counts(2, 16, 0.5f64), (2, 8));
        assert_eq!(block_counts(2, 16, 1.0f64 / 3.0), (1, 16));
        assert_eq!(block_counts(2, 16, 10.0f64), (16, 1));
        assert_eq!(block_counts(1, 5, 1.0f64), (2, 2));
        assert_eq!(block_counts(3, 7, 0.0f64), (1, 7));
    }

    #[test]
    fn blockwise_extremes_are_avg_and_max() {
        let em = ErrorMatrix::new(
            [4, 4],
            (0..16).map(|i| i as f64 / 16.0).collect(),
        )
        .unwrap();
        let opts = BlockwiseOptions::default();
        let low = blockwise_error(&em, 1, 0.0, 0.0, &opts).unwrap();
        assert_abs_diff_eq!(low.value, em.avg(), epsilon = 1e-12);
        let high = blockwise_error(&em, 1, 5.0, 5.0, &opts).unwrap();
        assert_abs_diff_eq!(high.value, em.max(), epsilon = 1e-12);
    }

    #[test]
    fn exact_blockwise_beats_or_matches_heuristic() {
        let values: Vec<f64> = (0..36)
            .map(|i| ((i * 2654435761u64 as usize) % 97) as f64 / 97.0)
            .collect();
        let em = ErrorMatrix::new([6, 6], values).unwrap();
        let exact = blockwise_error(
            &em,
            1,
            1.0,
            1.0,
            &BlockwiseOptions { exact: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(exact.certificate, Certificate::Exact);
        let heur = blockwise_error(
            &em,
            1,
            1.0,
            1.0,
            &BlockwiseOptions { budget: 200, ..Default::default() },
        )
        .unwrap();
        assert_eq!(heur.certificate, Certificate::UpperBound);
        assert!(heur.value >= exact.value - 1e-12);
        // Witness consistency: the reported value is what the witness gives.
        assert_abs_diff_eq!(
            max_block_avg(&em, &exact.pi1, &exact.pi2, exact.k, exact.l),
            exact.value,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            max_block_avg(&em, &heur.pi1, &heur.pi2, heur.k, heur.l),
            heur.value,
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_blockwise_respects_the_budget_gate() {
        let em = ErrorMatrix::new([12, 12], vec![0.0; 144]).unwrap();
        match blockwise_error(
            &em,
            1,
            2.5,
            2.5,
            &BlockwiseOptions { exact: true, ..Default::default() },
        ) {
            Err(Error::ExactBudget { pairs, limit }) => {
                assert!(pairs > limit);
                assert_eq!(limit, EXACT_BLOCKWISE_LIMIT);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn blockwise_monotone_in_rate_without_remainder() {
        let values: Vec<f64> = (0..64)
            .map(|i| ((i * 40503usize) % 211) as f64 / 211.0)
            .collect();
        let em = ErrorMatrix::new([8, 8], values).unwrap();
        let opts = BlockwiseOptions { exact: true, ..Default::default() };
        // n = 1, r in {0, 1, 2, 3}: K in {1, 2, 4, 8}, never a remainder.
        let mut prev = f64::NEG_INFINITY;
        for r in 0..4 {
            let res = blockwise_error(&em, 1, r as f64, r as f64, &opts).unwrap();
            assert!(res.value >= prev - 1e-12, "not monotone at r={r}");
            prev = res.value;
        }
    }

    #[test]
    fn remainder_messages_are_excluded() {
        // M = 5, K = 2, L = 2: one message is dropped. With a single huge
        // entry on the diagonal, the optimal exclusion hides row/col 0.
        let mut values = vec![0.0f64; 25];
        values[0] = 1.0;
        let em = ErrorMatrix::new([5, 5], values).unwrap();
        let res = blockwise_error(
            &em,
            1,
            1.0,
            1.0,
            &BlockwiseOptions { exact: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(res.k, [2, 2]);
        assert_eq!(res.l, [2, 2]);
        assert_abs_diff_eq!(res.value, 0.0, epsilon = 1e-15);
        // The excluded tail holds message 0 on at least one axis.
        assert!(res.pi1[4] == 0 || res.pi2[4] == 0);
    }

    #[test]
    fn concatenated_error_is_the_product_complement() {
        let mac = noisy_xor();
        let code = xor_toy_code();
        let cat = concatenate(&code, &code).unwrap();
        assert_eq!(cat.n(), 2);
        assert_eq!(cat.m(), [4, 4]);
        let single = code.error_matrix(&mac).unwrap();
        let double = cat.error_matrix(&mac).unwrap();
        for a1 in 0..2 {
            for b1 in 0..2 {
                for a2 in 0..2 {
                    for b2 in 0..2 {
                        let expect = 1.0
                            - (1.0 - single.get(a1, a2)) * (1.0 - single.get(b1, b2));
                        let got = double.get(a1 * 2 + b1, a2 * 2 + b2);
                        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn concatenate_pads_unequal_round_counts() {
        // One code with a round, one without; the result must validate and
        // reproduce both behaviors.
        let mac = noisy_xor();
        let plain = xor_toy_code();
        let parts = CodeParts {
            n: 1,
            m: [2, 2],
            x_sizes: [2, 2],
            y_size: 2,
            up_sizes: [vec![2], vec![1]],
            down_sizes: [vec![1], vec![2]],
            up_maps: [vec![vec![0, 1]], vec![vec![0, 0]]],
            down_maps: [vec![vec![0, 0]], vec![vec![0, 1]]],
            encoders: [vec![0, 1], vec![0, 0, 1, 1]],
            decoder: vec![0, 3],
            links: LinkCapacities {
                c_in: [1.0, 0.0],
                c_out: [0.0, 1.0],
            },
        };
        let conf = CooperationCode::new(parts).unwrap();
        let cat = concatenate(&conf, &plain).unwrap();
        assert_eq!(cat.rounds(), 1);
        let tr = cat.transcript(3, 2);
        // A-half of user 2 sees v21 = m1A = 1.
        assert_eq!(tr.v[1], vec![1]);
        assert!(cat.error_matrix(&mac).is_ok());
    }

    #[test]
    fn transcript_of_round_free_code_is_empty() {
        let tr = xor_toy_code().transcript(1, 1);
        assert!(tr.u[0].is_empty() && tr.v[0].is_empty());
        assert_eq!(tr.x, [1, 1]);
    }
}
