//! Reference prioritizers: random, adaptive random (ART-F), greedy total,
//! greedy additional and additional-spanning.

use rand::seq::{index::sample, SliceRandom};
use rand::Rng as _;

use crate::bitset::BitSet;
use crate::coverage::{CoverageIndex, EntityKind};
use crate::ordering::Ordering;
use crate::rng::Rng;

/// Coverage vectors compared by ART-F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArtVectors {
    #[default]
    Object,
    /// Concatenation of all four entity kinds.
    AllEntities,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub entity_kind: EntityKind,
    pub art_candidate_set_size: usize,
    pub art_vectors: ArtVectors,
    pub rng_seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            entity_kind: EntityKind::Object,
            art_candidate_set_size: 10,
            art_vectors: ArtVectors::Object,
            rng_seed: 0,
        }
    }
}

/// Uniform random permutation (Fisher-Yates).
pub fn random_order(n: usize, rng: &mut Rng) -> Ordering {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Ordering::from_vec_unchecked(v)
}

/// Tests by descending number of covered entities; ties keep suite order.
pub fn greedy_total(index: &CoverageIndex, kind: EntityKind) -> Ordering {
    let mut v: Vec<usize> = (0..index.n_tests()).collect();
    v.sort_by_key(|&t| std::cmp::Reverse(index.row(kind, t).count()));
    Ordering::from_vec_unchecked(v)
}

/// Additional-coverage greedy restricted to the entities in `mask`.
///
/// Picks the test adding the most uncovered entities (first in suite order on
/// ties). Once no remaining test adds anything, coverage resets and selection
/// continues; tests that cover nothing in `mask` go last in suite order.
pub fn greedy_additional_masked(index: &CoverageIndex, kind: EntityKind, mask: &BitSet) -> Ordering {
    let n = index.n_tests();
    let mut covered = BitSet::new(mask.capacity());
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let (slot, gain) = remaining
            .iter()
            .enumerate()
            .map(|(s, &t)| (s, index.row(kind, t).count_masked_difference(mask, &covered)))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if gain == 0 {
            if covered.is_empty() {
                order.append(&mut remaining);
                break;
            }
            covered.clear();
            continue;
        }
        let t = remaining.remove(slot);
        covered.union_with(index.row(kind, t));
        covered.intersect_with(mask);
        order.push(t);
    }
    Ordering::from_vec_unchecked(order)
}

pub fn greedy_additional(index: &CoverageIndex, kind: EntityKind) -> Ordering {
    let m = index.universe(kind).len();
    greedy_additional_masked(index, kind, &BitSet::full(m))
}

/// Entities that remain after dropping every entity whose cover set contains
/// another entity's cover set. Among entities with equal cover sets the first
/// in universe order is kept.
pub fn spanning_set(index: &CoverageIndex, kind: EntityKind) -> BitSet {
    let cols = index.kind(kind).columns();
    let m = cols.len();
    let mut keep = BitSet::new(m);
    for e in 0..m {
        let subsumed = (0..m).any(|o| {
            o != e && cols[o].is_subset(&cols[e]) && (o < e || cols[o] != cols[e])
        });
        if !subsumed {
            keep.insert(e);
        }
    }
    keep
}

/// Greedy additional over the spanning set.
pub fn additional_spanning(index: &CoverageIndex, kind: EntityKind) -> Ordering {
    greedy_additional_masked(index, kind, &spanning_set(index, kind))
}

fn art_distance(index: &CoverageIndex, vectors: ArtVectors, a: usize, b: usize) -> usize {
    match vectors {
        ArtVectors::Object => index
            .row(EntityKind::Object, a)
            .hamming(index.row(EntityKind::Object, b)),
        ArtVectors::AllEntities => EntityKind::ALL
            .iter()
            .map(|&k| index.row(k, a).hamming(index.row(k, b)))
            .sum(),
    }
}

/// Adaptive random prioritization with the max-min Manhattan rule.
///
/// The first test is uniform. Each later step samples up to
/// `art_candidate_set_size` distinct unprioritized tests and appends the one
/// whose minimum distance to the prioritized tests is largest (suite order on ties).
pub fn art_f(index: &CoverageIndex, rng: &mut Rng, cfg: &BaselineConfig) -> Ordering {
    assert!(cfg.art_candidate_set_size >= 1, "candidate set size must be positive");
    let n = index.n_tests();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut min_dist = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);

    let first = remaining.remove(rng.random_range(0..n));
    order.push(first);
    let mut last = first;
    while !remaining.is_empty() {
        for &t in &remaining {
            min_dist[t] = min_dist[t].min(art_distance(index, cfg.art_vectors, t, last));
        }
        let k = cfg.art_candidate_set_size.min(remaining.len());
        let mut candidates: Vec<usize> = sample(rng, remaining.len(), k).into_iter().collect();
        candidates.sort_unstable();
        // candidates are slots into `remaining`, which is kept in suite order
        let slot = candidates
            .into_iter()
            .fold(None::<usize>, |best, s| match best {
                Some(b) if min_dist[remaining[b]] >= min_dist[remaining[s]] => Some(b),
                _ => Some(s),
            })
            .expect("at least one candidate");
        last = remaining.remove(slot);
        order.push(last);
    }
    Ordering::from_vec_unchecked(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::fixtures::address_book;
    use crate::coverage::{TestCase, TestObject, TestSuite};
    use crate::rng::seeded;

    fn suite_of(tests: &[&[&str]]) -> CoverageIndex {
        let cases = tests
            .iter()
            .enumerate()
            .map(|(i, objs)| {
                let objects = objs
                    .iter()
                    .map(|o| TestObject::new("u", format!("/html/{o}"), *o, "s").unwrap())
                    .collect();
                TestCase::new(format!("t{i}"), objects, 1.0).unwrap()
            })
            .collect();
        CoverageIndex::build(&TestSuite::new(cases).unwrap())
    }

    #[test]
    fn random_small_cases() {
        assert_eq!(random_order(1, &mut seeded(1)).as_slice(), &[0]);
        assert_eq!(random_order(20, &mut seeded(9)), random_order(20, &mut seeded(9)));
    }

    #[test]
    fn greedy_total_table_example() {
        let idx = CoverageIndex::build(&address_book());
        assert_eq!(greedy_total(&idx, EntityKind::Object).as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn greedy_total_ties_and_reversal() {
        let idx = suite_of(&[&["a"], &["b"], &["c"]]);
        assert_eq!(greedy_total(&idx, EntityKind::Object).as_slice(), &[0, 1, 2]);
        let idx = suite_of(&[&["a"], &["b", "c"], &["d", "e", "f"]]);
        assert_eq!(greedy_total(&idx, EntityKind::Object).as_slice(), &[2, 1, 0]);
    }

    #[test]
    fn greedy_additional_cases() {
        let idx = suite_of(&[&["a"], &["b"], &["a", "b", "c"]]);
        assert_eq!(greedy_additional(&idx, EntityKind::Object).as_slice()[0], 2);
        let idx = suite_of(&[&["x", "y"], &["x", "y"]]);
        assert_eq!(greedy_additional(&idx, EntityKind::Object).as_slice(), &[0, 1]);
        // once every entity is covered, coverage resets before t0 and t3 are placed
        let idx = suite_of(&[&["a"], &["b", "d"], &["a", "b", "c"], &["d"]]);
        assert_eq!(greedy_additional(&idx, EntityKind::Object).as_slice(), &[2, 1, 0, 3]);
    }

    #[test]
    fn spanning_drops_universal_entity() {
        let idx = suite_of(&[&["all", "a"], &["all", "b"], &["all", "c"]]);
        let keep = spanning_set(&idx, EntityKind::Object);
        let names: Vec<&str> = keep
            .iter()
            .map(|e| idx.universe(EntityKind::Object)[e].key.as_str())
            .collect();
        assert_eq!(keep.count(), 3, "{names:?}");
        assert!(!keep.contains(0));
    }

    #[test]
    fn spanning_equal_cover_sets_keep_first() {
        let idx = suite_of(&[&["a", "b"], &["c"]]);
        let keep = spanning_set(&idx, EntityKind::Object);
        assert_eq!(keep.iter().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn spanning_incomparable_is_plain_greedy() {
        let idx = suite_of(&[&["a"], &["b"], &["c", "a"]]);
        // cover sets: a={0,2}, b={1}, c={2}: c ⊂ a so a is dropped
        assert_eq!(spanning_set(&idx, EntityKind::Object).count(), 2);
        let idx = suite_of(&[&["a", "b"], &["b", "c"], &["c", "a"]]);
        assert_eq!(spanning_set(&idx, EntityKind::Object).count(), 3);
        assert_eq!(
            additional_spanning(&idx, EntityKind::Object),
            greedy_additional(&idx, EntityKind::Object)
        );
    }

    #[test]
    fn art_two_tests() {
        let idx = suite_of(&[&["a"], &["b"]]);
        let o = art_f(&idx, &mut seeded(4), &BaselineConfig::default());
        assert_eq!(o.len(), 2);
    }

    #[test]
    fn art_picks_other_cluster() {
        let idx = suite_of(&[&["a", "b"], &["a", "b"], &["c", "d"], &["c", "d"]]);
        for seed in 0..50 {
            let o = art_f(&idx, &mut seeded(seed), &BaselineConfig::default());
            let s = o.as_slice();
            assert_ne!(s[0] < 2, s[1] < 2, "seed {seed}: {s:?}");
        }
    }

    #[test]
    fn art_all_entity_vectors() {
        let idx = suite_of(&[&["a", "b"], &["a", "b"], &["c", "d"]]);
        let cfg = BaselineConfig {
            art_vectors: ArtVectors::AllEntities,
            ..BaselineConfig::default()
        };
        let o = art_f(&idx, &mut seeded(0), &cfg);
        assert_eq!(o.len(), 3);
    }
}
