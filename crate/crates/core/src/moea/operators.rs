//! Permutation variation operators: PMX crossover and swap/invert/insert mutation.

use rand::Rng as _;

use crate::ordering::Ordering;
use crate::rng::Rng;

/// Child that keeps `receiver` outside `[a, b)` and takes `donor` inside it.
/// Values displaced by the donor segment are repaired through the mapping
/// donor[i] -> receiver[i], followed until it leaves the segment.
fn pmx_child(receiver: &[usize], donor: &[usize], a: usize, b: usize) -> Vec<usize> {
    let n = receiver.len();
    let mut slot_in_segment = vec![usize::MAX; n];
    for i in a..b {
        slot_in_segment[donor[i]] = i;
    }
    let mut child = receiver.to_vec();
    child[a..b].copy_from_slice(&donor[a..b]);
    for i in (0..a).chain(b..n) {
        let mut v = receiver[i];
        while slot_in_segment[v] != usize::MAX {
            v = receiver[slot_in_segment[v]];
        }
        child[i] = v;
    }
    child
}

/// PMX with explicit cut points `0 <= a < b <= n`; the segment is `[a, b)`.
pub fn pmx_with_cuts(p1: &Ordering, p2: &Ordering, a: usize, b: usize) -> (Ordering, Ordering) {
    let (x, y) = (p1.as_slice(), p2.as_slice());
    assert_eq!(x.len(), y.len(), "parents differ in length");
    assert!(a < b && b <= x.len(), "invalid cut points ({a}, {b})");
    (
        Ordering::from_vec_unchecked(pmx_child(x, y, a, b)),
        Ordering::from_vec_unchecked(pmx_child(y, x, a, b)),
    )
}

/// Two distinct cut points drawn uniformly from `0..=n`, returned sorted.
pub fn sample_cuts(n: usize, rng: &mut Rng) -> (usize, usize) {
    let a = rng.random_range(0..=n);
    let mut b = rng.random_range(0..n);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

pub fn pmx_crossover(p1: &Ordering, p2: &Ordering, rng: &mut Rng) -> (Ordering, Ordering) {
    assert!(p1.len() >= 2, "PMX needs at least two genes");
    let (a, b) = sample_cuts(p1.len(), rng);
    pmx_with_cuts(p1, p2, a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationOp {
    Swap,
    Invert,
    Insert,
}

impl MutationOp {
    pub const ALL: [MutationOp; 3] = [MutationOp::Swap, MutationOp::Invert, MutationOp::Insert];

    /// Applies the operator at positions `i` and `j`.
    ///
    /// Invert reverses the inclusive slice between the two positions; insert
    /// removes the gene at `i` and reinserts it at `j`.
    pub fn apply(self, perm: &mut Vec<usize>, i: usize, j: usize) {
        match self {
            MutationOp::Swap => perm.swap(i, j),
            MutationOp::Invert => {
                let (lo, hi) = (i.min(j), i.max(j));
                perm[lo..=hi].reverse();
            }
            MutationOp::Insert => {
                let v = perm.remove(i);
                perm.insert(j, v);
            }
        }
    }
}

/// Applies one uniformly chosen operator at two distinct uniform positions.
pub fn mutate(p: &Ordering, rng: &mut Rng) -> Ordering {
    let n = p.len();
    assert!(n >= 2, "mutation needs at least two genes");
    let op = MutationOp::ALL[rng.random_range(0..3)];
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let mut v = p.as_slice().to_vec();
    op.apply(&mut v, i, j);
    Ordering::from_vec_unchecked(v)
}
