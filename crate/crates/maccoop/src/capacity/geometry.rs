//! Support functions and rate-region polytopes in the plane.
//!
//! A region is described by half-planes `alpha x + (1 - alpha) y <= c`
//! with `alpha` in `[0, 1]`, intersected with the nonnegative quadrant.
//! The support value of a region in direction `alpha` is the maximum of
//! the same linear form over the region, so regions and support curves
//! are dual: sampling the support function and intersecting the sampled
//! half-planes recovers an outer approximation that is tight in the
//! sampled directions.

use crate::scalar::Real;
use crate::{Error, Result};

/// Geometric comparison tolerance.
const GEOM_TOL: f64 = 1e-9;

/// Samples of a support function: ordered `(alpha, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportCurve<F> {
    samples: Vec<(F, F)>,
}

impl<F: Real> SupportCurve<F> {
    /// Validates samples into a curve: `alpha` strictly increasing within
    /// `[0, 1]`, values finite and nonnegative.
    ///
    /// # Errors
    /// Validation error on any violated invariant.
    pub fn new(samples: Vec<(F, F)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("support curve needs at least one sample"));
        }
        let mut prev: Option<F> = None;
        for &(alpha, value) in &samples {
            if alpha.is_nan() || alpha < F::zero() || alpha > F::one() {
                return Err(Error::validation("support curve alpha outside [0, 1]"));
            }
            if !value.is_finite() || value < F::zero() {
                return Err(Error::validation(
                    "support curve values must be finite and >= 0",
                ));
            }
            if let Some(p) = prev {
                if alpha <= p {
                    return Err(Error::validation(
                        "support curve alphas must be strictly increasing",
                    ));
                }
            }
            prev = Some(alpha);
        }
        Ok(SupportCurve { samples })
    }

    /// The ordered samples.
    pub fn samples(&self) -> &[(F, F)] {
        &self.samples
    }
}

/// A bounded convex region in the nonnegative quadrant, given by
/// half-planes `alpha x + (1 - alpha) y <= c` and the derived vertex list
/// in counterclockwise order. Always contains the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPolytope<F> {
    half_planes: Vec<(F, F)>,
    vertices: Vec<[F; 2]>,
}

impl<F: Real> RegionPolytope<F> {
    /// Builds a region from half-planes `(alpha, c)`.
    ///
    /// Requires every `alpha` in `[0, 1]` and every `c` finite and
    /// nonnegative (so the origin is inside), plus at least one plane
    /// with `alpha > 0` and one with `alpha < 1` (so the region is
    /// bounded). A plane with `0 < alpha < 1` satisfies both demands.
    ///
    /// # Errors
    /// Validation error on empty input, out-of-range parameters, or an
    /// unbounded region.
    pub fn from_half_planes(half_planes: Vec<(F, F)>) -> Result<Self> {
        if half_planes.is_empty() {
            return Err(Error::validation("region needs at least one half-plane"));
        }
        for &(alpha, c) in &half_planes {
            if alpha.is_nan() || alpha < F::zero() || alpha > F::one() {
                return Err(Error::validation("half-plane alpha outside [0, 1]"));
            }
            if !c.is_finite() || c < F::zero() {
                return Err(Error::validation(
                    "half-plane offsets must be finite and >= 0",
                ));
            }
        }
        if !half_planes.iter().any(|&(a, _)| a > F::zero())
            || !half_planes.iter().any(|&(a, _)| a < F::one())
        {
            return Err(Error::validation(
                "region is unbounded: needs a plane with alpha > 0 and one with alpha < 1",
            ));
        }
        let vertices = enumerate_vertices(&half_planes);
        Ok(RegionPolytope {
            half_planes,
            vertices,
        })
    }

    /// The defining half-planes `(alpha, c)`.
    pub fn half_planes(&self) -> &[(F, F)] {
        &self.half_planes
    }

    /// Vertices in counterclockwise order starting from the
    /// lexicographically smallest.
    pub fn vertices(&self) -> &[[F; 2]] {
        &self.vertices
    }
}

/// All constraint lines: the half-planes plus the quadrant walls
/// `x >= 0` and `y >= 0`, each as `(a, b, c)` meaning `a x + b y <= c`.
fn constraint_lines<F: Real>(half_planes: &[(F, F)]) -> Vec<(F, F, F)> {
    let mut lines: Vec<(F, F, F)> = half_planes
        .iter()
        .map(|&(alpha, c)| (alpha, F::one() - alpha, c))
        .collect();
    lines.push((-F::one(), F::zero(), F::zero()));
    lines.push((F::zero(), -F::one(), F::zero()));
    lines
}

/// Vertices of the intersection: every feasible intersection point of two
/// constraint boundaries is an extreme point (two independent active
/// constraints in the plane), so filtering pairwise intersections is
/// exact. The hull pass orders them and drops duplicates.
fn enumerate_vertices<F: Real>(half_planes: &[(F, F)]) -> Vec<[F; 2]> {
    let lines = constraint_lines(half_planes);
    let tol = F::of_f64(GEOM_TOL);
    let mut candidates: Vec<[F; 2]> = Vec::new();
    for (i, &(a1, b1, c1)) in lines.iter().enumerate() {
        for &(a2, b2, c2) in &lines[i + 1..] {
            let det = a1 * b2 - a2 * b1;
            if det.abs() <= tol {
                continue;
            }
            let x = (c1 * b2 - c2 * b1) / det;
            let y = (a1 * c2 - a2 * c1) / det;
            let feasible = lines
                .iter()
                .all(|&(a, b, c)| a * x + b * y <= c + tol);
            if feasible {
                candidates.push([x, y]);
            }
        }
    }
    convex_hull(candidates)
}

/// Monotone-chain convex hull; collinear and duplicate points are
/// dropped. Returns counterclockwise order from the lexicographic
/// minimum.
fn convex_hull<F: Real>(mut pts: Vec<[F; 2]>) -> Vec<[F; 2]> {
    let tol = F::of_f64(GEOM_TOL);
    pts.sort_by(|p, q| {
        p[0].partial_cmp(&q[0])
            .expect("vertex coordinates are not NaN")
            .then(p[1].partial_cmp(&q[1]).expect("vertex coordinates are not NaN"))
    });
    pts.dedup_by(|p, q| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [F; 2], a: [F; 2], b: [F; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[F; 2]> = Vec::with_capacity(pts.len() + 1);
    for half in 0..2 {
        let start = hull.len() + 2;
        let iter: Box<dyn Iterator<Item = &[F; 2]>> = if half == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.is_empty() {
        // All points coincide or are collinear; keep the extremes.
        hull = pts;
    }
    hull
}

/// The support value of a region in direction `alpha`: the maximum of
/// `alpha x + (1 - alpha) y` over the region, attained at a vertex.
///
/// # Errors
/// Validation error when `alpha` is outside `[0, 1]` or the region has no
/// vertices.
pub fn c_alpha_of_polytope<F: Real>(region: &RegionPolytope<F>, alpha: F) -> Result<F> {
    if alpha.is_nan() || alpha < F::zero() || alpha > F::one() {
        return Err(Error::validation("alpha must lie in [0, 1]"));
    }
    region
        .vertices()
        .iter()
        .map(|v| alpha * v[0] + (F::one() - alpha) * v[1])
        .fold(None, |best: Option<F>, v| {
            Some(best.map_or(v, |b| if v > b { v } else { b }))
        })
        .ok_or_else(|| Error::validation("region has no vertices"))
}

/// Reconstructs an outer region from support samples: the intersection of
/// the sampled half-planes `alpha x + (1 - alpha) y <= value` with the
/// nonnegative quadrant. Requires samples at `alpha = 0` and `alpha = 1`
/// so the region is bounded.
///
/// # Errors
/// Validation error when fewer than two samples are given or the
/// endpoints are missing.
pub fn region_from_support<F: Real>(curve: &SupportCurve<F>) -> Result<RegionPolytope<F>> {
    let samples = curve.samples();
    if samples.len() < 2 {
        return Err(Error::validation(
            "region reconstruction needs at least two samples",
        ));
    }
    let tol = F::of_f64(GEOM_TOL);
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if first.abs() > tol || (last - F::one()).abs() > tol {
        return Err(Error::validation(
            "region reconstruction needs samples at alpha = 0 and alpha = 1",
        ));
    }
    RegionPolytope::from_half_planes(samples.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> RegionPolytope<f64> {
        // x + y <= 1 in the quadrant, written as (1/2)x + (1/2)y <= 1/2.
        RegionPolytope::from_half_planes(vec![(0.5, 0.5)]).unwrap()
    }

    /// Sutherland-Hodgman clip of a convex polygon by one half-plane
    /// `a x + b y <= c`; the independent oracle for vertex enumeration.
    fn clip(mut poly: Vec<[f64; 2]>, a: f64, b: f64, c: f64) -> Vec<[f64; 2]> {
        let inside = |p: [f64; 2]| a * p[0] + b * p[1] <= c + GEOM_TOL;
        let mut out = Vec::new();
        if poly.is_empty() {
            return out;
        }
        poly.push(poly[0]);
        for w in poly.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (pin, qin) = (inside(p), inside(q));
            if pin {
                out.push(p);
            }
            if pin != qin {
                let fp = a * p[0] + b * p[1] - c;
                let fq = a * q[0] + b * q[1] - c;
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        out
    }

    /// Clips a generous bounding square by every constraint.
    fn clip_oracle(planes: &[(f64, f64)], bound: f64) -> Vec<[f64; 2]> {
        let mut poly = vec![[0.0, 0.0], [bound, 0.0], [bound, bound], [0.0, bound]];
        for &(alpha, c) in planes {
            poly = clip(poly, alpha, 1.0 - alpha, c);
        }
        poly
    }

    /// Distance from a point to a convex polygon (0 inside).
    fn point_poly_dist(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
        if poly.len() == 1 {
            let d = [p[0] - poly[0][0], p[1] - poly[0][1]];
            return d[0].hypot(d[1]);
        }
        let mut inside = true;
        let mut best = f64::INFINITY;
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let e = [b[0] - a[0], b[1] - a[1]];
            let w = [p[0] - a[0], p[1] - a[1]];
            if e[0] * w[1] - e[1] * w[0] < -GEOM_TOL {
                inside = false;
            }
            let len2 = e[0] * e[0] + e[1] * e[1];
            let t = if len2 == 0.0 {
                0.0
            } else {
                ((w[0] * e[0] + w[1] * e[1]) / len2).clamp(0.0, 1.0)
            };
            let d = [w[0] - t * e[0], w[1] - t * e[1]];
            best = best.min(d[0].hypot(d[1]));
        }
        if inside {
            0.0
        } else {
            best
        }
    }

    /// One-sided Hausdorff distance from `outer` to `inner`, attained at
    /// a vertex of `outer` when `inner` is inside `outer`.
    fn hausdorff_from(outer: &RegionPolytope<f64>, inner: &RegionPolytope<f64>) -> f64 {
        outer
            .vertices()
            .iter()
            .map(|&v| point_poly_dist(v, inner.vertices()))
            .fold(0.0, f64::max)
    }

    fn random_region(rng: &mut ChaCha8Rng) -> RegionPolytope<f64> {
        let extra = rng.gen_range(1..=4);
        let mut planes = vec![(0.0, rng.gen_range(0.2..2.0)), (1.0, rng.gen_range(0.2..2.0))];
        for _ in 0..extra {
            planes.push((rng.gen_range(0.05..0.95), rng.gen_range(0.2..2.0)));
        }
        RegionPolytope::from_half_planes(planes).unwrap()
    }

    #[test]
    fn triangle_support_values() {
        let t = triangle();
        let mut vs = t.vertices().to_vec();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vs, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert_abs_diff_eq!(
            c_alpha_of_polytope(&t, 0.3).unwrap(),
            0.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn alpha_one_is_the_max_x() {
        let r =
            RegionPolytope::from_half_planes(vec![(0.0, 1.0), (1.0, 2.0), (0.5, 1.2)]).unwrap();
        let max_x = r.vertices().iter().map(|v| v[0]).fold(0.0, f64::max);
        assert_abs_diff_eq!(
            c_alpha_of_polytope(&r, 1.0).unwrap(),
            max_x,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_curve_collapses_to_the_origin() {
        let curve = SupportCurve::new(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]).unwrap();
        let region = region_from_support(&curve).unwrap();
        assert_eq!(region.vertices(), &[[0.0, 0.0]]);
        for alpha in [0.0, 0.25, 1.0] {
            assert_eq!(c_alpha_of_polytope(&region, alpha).unwrap(), 0.0);
        }
    }

    #[test]
    fn curve_validation_rejects_bad_input() {
        assert!(SupportCurve::<f64>::new(vec![]).is_err());
        assert!(SupportCurve::new(vec![(0.5, 1.0), (0.5, 1.0)]).is_err());
        assert!(SupportCurve::new(vec![(0.0, -1.0)]).is_err());
        assert!(SupportCurve::new(vec![(0.0, 1.0), (1.5, 1.0)]).is_err());
        // Missing endpoint samples.
        let c = SupportCurve::new(vec![(0.2, 1.0), (0.8, 1.0)]).unwrap();
        assert!(region_from_support(&c).is_err());
    }

    #[test]
    fn region_validation_rejects_unbounded_sets() {
        assert!(RegionPolytope::from_half_planes(vec![(0.0f64, 1.0)]).is_err());
        assert!(RegionPolytope::from_half_planes(vec![(1.0f64, 1.0)]).is_err());
        assert!(RegionPolytope::from_half_planes(vec![(0.5f64, -0.1)]).is_err());
        assert!(RegionPolytope::<f64>::from_half_planes(vec![]).is_err());
    }

    #[test]
    fn triangle_sampling_recovers_the_triangle() {
        let t = triangle();
        let alphas = [0.0, 0.5, 1.0];
        let samples: Vec<(f64, f64)> = alphas
            .iter()
            .map(|&a| (a, c_alpha_of_polytope(&t, a).unwrap()))
            .collect();
        let rebuilt = region_from_support(&SupportCurve::new(samples).unwrap()).unwrap();
        // The three sampled planes already cut the exact triangle.
        assert_eq!(hausdorff_from(&rebuilt, &t), 0.0);
        let mut vs = rebuilt.vertices().to_vec();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vs, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn vertices_match_the_clipping_oracle() {
        // Two equal convex sets have equal support in every direction, so
        // comparing directional maxima sidesteps the duplicate and
        // collinear vertices that clipping can emit.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let region = random_region(&mut rng);
            let oracle = clip_oracle(region.half_planes(), 50.0);
            assert!(!oracle.is_empty());
            for step in 0..64 {
                let theta = 2.0 * std::f64::consts::PI * step as f64 / 64.0;
                let (dx, dy) = (theta.cos(), theta.sin());
                let sup = |pts: &[[f64; 2]]| {
                    pts.iter()
                        .map(|p| dx * p[0] + dy * p[1])
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                assert_abs_diff_eq!(
                    sup(region.vertices()),
                    sup(&oracle),
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn support_round_trip_is_exact_at_sampled_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let region = random_region(&mut rng);
            let mut alphas: Vec<f64> = region.half_planes().iter().map(|p| p.0).collect();
            alphas.extend([0.25, 0.75]);
            alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            alphas.dedup();
            let samples: Vec<(f64, f64)> = alphas
                .iter()
                .map(|&a| (a, c_alpha_of_polytope(&region, a).unwrap()))
                .collect();
            let curve = SupportCurve::new(samples.clone()).unwrap();
            let rebuilt = region_from_support(&curve).unwrap();
            for &(a, value) in &samples {
                assert_abs_diff_eq!(
                    c_alpha_of_polytope(&rebuilt, a).unwrap(),
                    value,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn refinement_shrinks_the_hausdorff_gap() {
        // A curved-ish region: several planes so coarse sampling overshoots.
        let region = RegionPolytope::from_half_planes(vec![
            (0.0, 1.0),
            (0.25, 0.8),
            (0.5, 0.8),
            (0.75, 0.8),
            (1.0, 1.0),
        ])
        .unwrap();
        let grids: [Vec<f64>; 3] = [
            vec![0.0, 0.5, 1.0],
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0],
        ];
        let mut last = f64::INFINITY;
        for grid in &grids {
            let samples: Vec<(f64, f64)> = grid
                .iter()
                .map(|&a| (a, c_alpha_of_polytope(&region, a).unwrap()))
                .collect();
            let rebuilt = region_from_support(&SupportCurve::new(samples).unwrap()).unwrap();
            // Outer approximation contains the region.
            for v in region.vertices() {
                for &(a, c) in rebuilt.half_planes() {
                    assert!(a * v[0] + (1.0 - a) * v[1] <= c + GEOM_TOL);
                }
            }
            let d = hausdorff_from(&rebuilt, &region);
            assert!(d <= last + GEOM_TOL, "distance grew: {d} > {last}");
            last = d;
        }
        assert_abs_diff_eq!(last, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn support_function_is_midpoint_convex_in_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..25 {
            let region = random_region(&mut rng);
            let grid: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
            let vals: Vec<f64> = grid
                .iter()
                .map(|&a| c_alpha_of_polytope(&region, a).unwrap())
                .collect();
            for i in 0..vals.len() - 2 {
                assert!(
                    vals[i + 1] <= (vals[i] + vals[i + 2]) / 2.0 + 1e-12,
                    "not convex at grid index {i}"
                );
            }
        }
    }
}
