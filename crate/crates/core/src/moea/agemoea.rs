//! AGE-MOEA environmental selection: front geometry estimation and the
//! diversity/proximity survival score.
//!
//! Internally objectives are turned into minimization distances from the
//! first front's ideal point: `s_j = max_front1(f_j) - f_j >= 0`.

// `!(x > 0)` is used on purpose below: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::fitness::FitnessVector;
use crate::scalar::Scalar;

use super::sorting::fast_nondominated_sort;
use super::Selection;

const M: usize = 4;

/// Lower and upper ends of the bracket searched for the geometry exponent.
pub const GEOMETRY_BRACKET: (f64, f64) = (0.1, 20.0);
pub const GEOMETRY_TOLERANCE: f64 = 1e-6;

/// Solves `sum_i c_i^p = 1` for `p` by bisection on [`GEOMETRY_BRACKET`].
///
/// Returns 1 when `c` has a zero coordinate, a coordinate at or above 1, or a
/// root below the bracket. A root above the bracket is clamped to its top.
pub fn solve_geometry_exponent<T: Scalar>(c: &[T]) -> T {
    let one = T::one();
    if c.iter().any(|&x| !(x > T::zero()) || x >= one || !x.is_finite()) {
        return one;
    }
    let h = |p: T| c.iter().fold(T::zero(), |acc, &x| acc + x.powf(p)) - one;
    let mut lo = T::from_f64_lossy(GEOMETRY_BRACKET.0);
    let mut hi = T::from_f64_lossy(GEOMETRY_BRACKET.1);
    if h(lo) <= T::zero() {
        return one;
    }
    if h(hi) > T::zero() {
        return hi;
    }
    let tol = T::from_f64_lossy(GEOMETRY_TOLERANCE);
    // h is strictly decreasing on the bracket when every c_i lies in (0, 1)
    while hi - lo > tol {
        let mid = (lo + hi) * T::half();
        if h(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::half()
}

fn lp_norm<T: Scalar>(x: &[T; M], p: T) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc + v.abs().powf(p)).powf(T::one() / p)
}

fn lp_distance<T: Scalar>(a: &[T; M], b: &[T; M], p: T) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs().powf(p))
        .powf(T::one() / p)
}

/// Perpendicular distance from `x` to the line through the origin along `dir`.
fn distance_to_line<T: Scalar>(x: &[T; M], dir: &[T; M]) -> T {
    let dd = dir.iter().fold(T::zero(), |a, &d| a + d * d);
    let proj = x.iter().zip(dir).fold(T::zero(), |a, (&v, &d)| a + v * d) / dd;
    x.iter()
        .zip(dir)
        .fold(T::zero(), |a, (&v, &d)| {
            let r = v - proj * d;
            a + r * r
        })
        .sqrt()
}

/// Solves the 4x4 system `a · x = b` by Gaussian elimination with partial pivoting.
fn solve_linear<T: Scalar>(mut a: [[T; M]; M], mut b: [T; M]) -> Option<[T; M]> {
    let eps = T::from_f64_lossy(1e-12);
    for col in 0..M {
        let pivot = (col..M).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
        })?;
        if a[pivot][col].abs() < eps {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..M {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x = *x - f * *p;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); M];
    for row in (0..M).rev() {
        let mut acc = b[row];
        for k in row + 1..M {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Indices of the members closest to each objective axis, one per axis, distinct.
fn corner_solutions<T: Scalar>(pts: &[[T; M]]) -> Vec<usize> {
    if pts.len() <= M {
        return (0..pts.len()).collect();
    }
    let small = T::from_f64_lossy(1e-6);
    let mut taken = vec![false; pts.len()];
    let mut corners = Vec::with_capacity(M);
    for axis in 0..M {
        let mut dir = [small; M];
        dir[axis] = T::one() + small;
        let best = (0..pts.len())
            .filter(|&i| !taken[i])
            .min_by(|&i, &j| {
                distance_to_line(&pts[i], &dir)
                    .partial_cmp(&distance_to_line(&pts[j], &dir))
                    .expect("finite")
                    .then(i.cmp(&j))
            })
            .expect("more members than axes");
        taken[best] = true;
        corners.push(best);
    }
    corners
}

/// Per-objective best members (smallest shifted value, ties to the smallest
/// L1 norm, then index).
fn objective_bests<T: Scalar>(pts: &[[T; M]]) -> Vec<usize> {
    (0..M)
        .map(|k| {
            (0..pts.len())
                .min_by(|&i, &j| {
                    let l1 = |p: &[T; M]| p.iter().fold(T::zero(), |a, &v| a + v);
                    pts[i][k]
                        .partial_cmp(&pts[j][k])
                        .expect("finite")
                        .then(l1(&pts[i]).partial_cmp(&l1(&pts[j])).expect("finite"))
                        .then(i.cmp(&j))
                })
                .expect("non-empty front")
        })
        .collect()
}

/// Scale factors derived from the first front, plus its geometry exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontGeometry<T> {
    /// Maximum of each objective over the first front.
    pub ideal: [T; M],
    /// Per-objective divisor; zero marks a degenerate objective.
    pub scale: [T; M],
    pub p: T,
}

impl<T: Scalar> FrontGeometry<T> {
    fn shift(&self, f: &FitnessVector<T>) -> [T; M] {
        std::array::from_fn(|k| self.ideal[k] - f.0[k])
    }

    pub fn normalize(&self, f: &FitnessVector<T>) -> [T; M] {
        let s = self.shift(f);
        std::array::from_fn(|k| {
            if self.scale[k] > T::zero() {
                s[k] / self.scale[k]
            } else {
                T::zero()
            }
        })
    }

    /// Estimates normalization and `p` from the members of the first front.
    pub fn from_first_front(front: &[FitnessVector<T>]) -> Self {
        assert!(!front.is_empty());
        let ideal: [T; M] = std::array::from_fn(|k| {
            front.iter().map(|f| f.0[k]).fold(T::neg_infinity(), T::max)
        });
        let shifted: Vec<[T; M]> = front
            .iter()
            .map(|f| std::array::from_fn(|k| ideal[k] - f.0[k]))
            .collect();
        let max_scale: [T; M] =
            std::array::from_fn(|k| shifted.iter().map(|s| s[k]).fold(T::zero(), T::max));

        if front.len() < M {
            let geometry = Self {
                ideal,
                scale: max_scale,
                p: T::one(),
            };
            geometry.warn_degenerate();
            return geometry;
        }

        let corners = corner_solutions(&shifted);
        let scale = Self::hyperplane_scale(&shifted, &corners).unwrap_or(max_scale);
        let mut geometry = Self {
            ideal,
            scale,
            p: T::one(),
        };
        geometry.warn_degenerate();

        let normalized: Vec<[T; M]> = front.iter().map(|f| geometry.normalize(f)).collect();
        let ones = [T::one(); M];
        let candidates: Vec<usize> = {
            let inner: Vec<usize> = (0..front.len()).filter(|i| !corners.contains(i)).collect();
            if inner.is_empty() {
                (0..front.len()).collect()
            } else {
                inner
            }
        };
        let central = candidates
            .into_iter()
            .min_by(|&i, &j| {
                distance_to_line(&normalized[i], &ones)
                    .partial_cmp(&distance_to_line(&normalized[j], &ones))
                    .expect("finite")
                    .then(i.cmp(&j))
            })
            .expect("non-empty");
        geometry.p = solve_geometry_exponent(&normalized[central]);
        geometry
    }

    /// Intercepts of the hyperplane through the corner points, if well defined.
    fn hyperplane_scale(shifted: &[[T; M]], corners: &[usize]) -> Option<[T; M]> {
        if corners.len() != M {
            return None;
        }
        let rows: [[T; M]; M] = std::array::from_fn(|r| shifted[corners[r]]);
        let x = solve_linear(rows, [T::one(); M])?;
        if x.iter().any(|&v| !(v > T::zero())) {
            return None;
        }
        let scale = x.map(|v| T::one() / v);
        scale.iter().all(|v| v.is_finite()).then_some(scale)
    }

    fn warn_degenerate(&self) {
        for (k, s) in self.scale.iter().enumerate() {
            if !(*s > T::zero()) {
                log::warn!("objective {k} has no spread on the first front; it contributes 0 to survival scores");
            }
        }
    }
}

/// Greedy survival scoring of one front. Returns members in selection order
/// paired with their score; at most `limit` members are scored.
///
/// Extreme members (axis corners and per-objective bests) come first with an
/// infinite score. Each remaining pick maximizes the sum of its two smallest
/// normalized distances to the already selected members, divided by its own
/// `L_p` proximity to the ideal point.
pub fn survival_scores<T: Scalar>(
    front: &[FitnessVector<T>],
    geometry: &FrontGeometry<T>,
    limit: usize,
) -> Vec<(usize, T)> {
    let m = front.len();
    let limit = limit.min(m);
    let pts: Vec<[T; M]> = front.iter().map(|f| geometry.normalize(f)).collect();

    let mut extremes = corner_solutions(&pts);
    for b in objective_bests(&pts) {
        if !extremes.contains(&b) {
            extremes.push(b);
        }
    }
    let mut order: Vec<(usize, T)> = Vec::with_capacity(limit);
    let mut selected = vec![false; m];
    for &e in &extremes {
        if order.len() == limit {
            return order;
        }
        selected[e] = true;
        order.push((e, T::infinity()));
    }

    let p = geometry.p;
    let proximity: Vec<T> = pts.iter().map(|x| lp_norm(x, p)).collect();
    // two smallest scaled distances from each remaining member to the selected set
    let mut nearest: Vec<(T, T)> = vec![(T::infinity(), T::infinity()); m];
    let scaled = |i: usize, j: usize| -> T {
        if proximity[i] > T::zero() {
            lp_distance(&pts[i], &pts[j], p) / proximity[i]
        } else {
            T::infinity()
        }
    };
    let push = |slot: &mut (T, T), d: T| {
        if d < slot.0 {
            *slot = (d, slot.0);
        } else if d < slot.1 {
            slot.1 = d;
        }
    };
    let mut n_selected = 0usize;
    for &(s, _) in &order {
        n_selected += 1;
        for i in 0..m {
            if !selected[i] {
                push(&mut nearest[i], scaled(i, s));
            }
        }
    }

    while order.len() < limit {
        let score_of = |i: usize| -> T {
            let (d1, d2) = nearest[i];
            if n_selected > 1 {
                d1 + d2
            } else {
                d1
            }
        };
        let mut best: Option<(usize, T)> = None;
        for i in (0..m).filter(|&i| !selected[i]) {
            let s = score_of(i);
            let better = match best {
                None => true,
                Some((_, b)) => s > b || (b.is_nan() && !s.is_nan()),
            };
            if better {
                best = Some((i, s));
            }
        }
        let (pick, score) = best.expect("remaining members while below limit");
        selected[pick] = true;
        n_selected += 1;
        order.push((pick, score));
        for i in 0..m {
            if !selected[i] {
                push(&mut nearest[i], scaled(i, pick));
            }
        }
    }
    order
}

/// Environmental selection keeping `needed` members of `points`.
pub fn agemoea_survival<T: Scalar>(points: &[FitnessVector<T>], needed: usize) -> Selection<T> {
    let fronts = fast_nondominated_sort(points);
    agemoea_survival_from_fronts(points, &fronts, needed)
}

/// As [`agemoea_survival`] with precomputed fronts.
pub fn agemoea_survival_from_fronts<T: Scalar>(
    points: &[FitnessVector<T>],
    fronts: &[Vec<usize>],
    needed: usize,
) -> Selection<T> {
    let needed = needed.min(points.len());
    let mut sel = Selection::with_capacity(needed);
    if fronts.is_empty() || needed == 0 {
        return sel;
    }
    let first: Vec<FitnessVector<T>> = fronts[0].iter().map(|&i| points[i]).collect();
    let geometry = FrontGeometry::from_first_front(&first);

    for (rank, front) in fronts.iter().enumerate() {
        let capacity = needed - sel.len();
        if capacity == 0 {
            break;
        }
        let members: Vec<FitnessVector<T>> = front.iter().map(|&i| points[i]).collect();
        if rank == 0 || front.len() > capacity {
            for (local, score) in survival_scores(&members, &geometry, capacity) {
                sel.push(front[local], rank, score);
            }
        } else {
            for (local, f) in members.iter().enumerate() {
                let prox = lp_norm(&geometry.normalize(f), geometry.p);
                let score = if prox > T::zero() {
                    T::one() / prox
                } else {
                    T::infinity()
                };
                sel.push(front[local], rank, score);
            }
        }
    }
    sel
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: [f64; 4]) -> FitnessVector<f64> {
        FitnessVector(v)
    }

    /// Root of sum c_i^p = 1 found by scanning then bisecting, kept separate
    /// from the production solver.
    fn scan_root(c: &[f64]) -> f64 {
        let h = |p: f64| c.iter().map(|x| x.powf(p)).sum::<f64>() - 1.0;
        let mut p = 0.1;
        while h(p + 0.01) > 0.0 {
            p += 0.01;
        }
        let (mut lo, mut hi) = (p, p + 0.01);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    /// Points on the surface sum s_i^p = 1 turned into maximization fitness.
    fn surface_front(p: f64) -> Vec<FitnessVector<f64>> {
        let mut pts = Vec::new();
        for axis in 0..4 {
            let mut s = [0.0; 4];
            s[axis] = 1.0;
            pts.push(s);
        }
        let t = 4f64.powf(-1.0 / p);
        pts.push([t; 4]);
        // an off-centre member lying on the same surface
        let a = 0.6f64;
        let rest = ((1.0 - a.powf(p)) / 3.0).powf(1.0 / p);
        pts.push([a, rest, rest, rest]);
        pts.into_iter().map(|s| fv(s.map(|x| 1.0 - x))).collect()
    }

    #[test]
    fn solver_agrees_with_scan() {
        for c in [[0.25; 4], [0.5; 4], [0.3, 0.4, 0.5, 0.2], [0.05, 0.9, 0.1, 0.2]] {
            let p = solve_geometry_exponent(&c);
            assert!((p - scan_root(&c)).abs() < 1e-5, "{c:?}: {p}");
        }
    }

    #[test]
    fn solver_fallbacks() {
        assert_eq!(solve_geometry_exponent(&[0.0, 0.5, 0.5, 0.5]), 1.0);
        assert_eq!(solve_geometry_exponent(&[1.2, 0.1, 0.1, 0.1]), 1.0);
        assert_eq!(solve_geometry_exponent(&[1e-9; 4]), 1.0);
        assert_eq!(solve_geometry_exponent(&[0.99; 4]), 20.0);
    }

    #[test]
    fn linear_vs_spherical_front() {
        let linear = FrontGeometry::from_first_front(&surface_front(1.0));
        let sphere = FrontGeometry::from_first_front(&surface_front(2.0));
        assert!((linear.p - 1.0).abs() < 0.1, "{}", linear.p);
        assert!((sphere.p - 2.0).abs() < 0.1, "{}", sphere.p);
    }

    #[test]
    fn identity_when_capacity_suffices() {
        let pts = vec![fv([0.9, 0.1, 0.5, 0.5]), fv([0.1, 0.9, 0.5, 0.5]), fv([0.2, 0.2, 0.2, 0.2])];
        let sel = agemoea_survival(&pts, 10);
        let mut kept = sel.indices.clone();
        kept.sort();
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn single_member_splitting_front() {
        let pts = vec![fv([1.0; 4]), fv([0.5; 4]), fv([0.2; 4])];
        assert_eq!(agemoea_survival(&pts, 2).indices, vec![0, 1]);
        assert_eq!(agemoea_survival(&pts, 1).indices, vec![0]);
    }

    #[test]
    fn extremes_survive_truncation() {
        let front = surface_front(2.0);
        let sel = agemoea_survival(&front, 4);
        // per-objective maxima are the axis-opposite corners
        for k in 0..4 {
            let best = front.iter().map(|f| f.0[k]).fold(f64::MIN, f64::max);
            assert!(sel.indices.iter().any(|&i| front[i].0[k] == best));
        }
    }

    #[test]
    fn degenerate_objective_contributes_zero() {
        let pts: Vec<_> = (0..6)
            .map(|i| {
                let x = i as f64 / 5.0;
                fv([x, 1.0 - x, 0.5, (x * 7.0).fract()])
            })
            .collect();
        let fronts = fast_nondominated_sort(&pts);
        let first: Vec<_> = fronts[0].iter().map(|&i| pts[i]).collect();
        let g = FrontGeometry::from_first_front(&first);
        for f in &first {
            assert_eq!(g.normalize(f)[2], 0.0);
        }
        let sel = agemoea_survival(&pts, 3);
        assert_eq!(sel.indices.len(), 3);
    }
}
