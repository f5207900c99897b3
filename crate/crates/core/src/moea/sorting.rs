//! Non-dominated sorting and crowding distance (maximization).

use crate::fitness::FitnessVector;
use crate::scalar::Scalar;

/// Partitions `points` into successive non-dominated fronts (indices into `points`).
pub fn fast_nondominated_sort<T: Scalar>(points: &[FitnessVector<T>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].dominates(&points[j]) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if points[j].dominates(&points[i]) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of every member of one front. Boundary members of each
/// objective get `+inf`; fronts of one or two members are all boundary.
pub fn crowding_distance<T: Scalar>(front: &[FitnessVector<T>]) -> Vec<T> {
    let n = front.len();
    let mut dist = vec![T::zero(); n];
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..4 {
        idx.sort_by(|&a, &b| {
            front[a].0[k]
                .partial_cmp(&front[b].0[k])
                .expect("fitness is never NaN")
                .then(a.cmp(&b))
        });
        let lo = front[idx[0]].0[k];
        let hi = front[idx[n - 1]].0[k];
        dist[idx[0]] = T::infinity();
        dist[idx[n - 1]] = T::infinity();
        let span = hi - lo;
        if span <= T::zero() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[idx[w + 1]].0[k] - front[idx[w - 1]].0[k];
            dist[idx[w]] = dist[idx[w]] + gap / span;
        }
    }
    dist
}
