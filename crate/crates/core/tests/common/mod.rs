//! Shared fixtures and straight-line reference implementations for the
//! integration tests. The references deliberately avoid the library's metric
//! and fitness code paths.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use segprio::coverage::{CoverageIndex, EntityKind, TestCase, TestObject, TestSuite};
use segprio::metrics::{Fault, FaultOracle};
use segprio::rng::Rng;
use segprio::Ordering;

const TAGS: [&str; 4] = ["a", "button", "input", "td"];

/// Random suite of `n` tests over a small site, so entities are shared often.
pub fn random_suite(rng: &mut Rng, n: usize) -> TestSuite {
    let cases = (0..n)
        .map(|t| {
            let len = rng.random_range(1..=6);
            let objects = (0..len)
                .map(|_| {
                    let page = rng.random_range(0..2);
                    let seg = rng.random_range(0..3);
                    let group = rng.random_range(0..2);
                    let item = rng.random_range(1..=3);
                    let tag = TAGS[(seg + group) % TAGS.len()];
                    TestObject::new(
                        format!("https://site/{page}"),
                        format!("/html/body/div[{}]/ul{group}/li[{item}]/{tag}", seg + 1),
                        tag,
                        format!("s{seg}"),
                    )
                    .unwrap()
                })
                .collect();
            let cost = rng.random_range(1..=20) as f64 / 4.0;
            TestCase::new(format!("t{t}"), objects, cost).unwrap()
        })
        .collect();
    TestSuite::new(cases).unwrap()
}

pub fn random_order(rng: &mut Rng, n: usize) -> Ordering {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Ordering::new(v).unwrap()
}

/// Between 1 and 5 faults, each revealed by a random non-empty test subset.
pub fn random_oracle(rng: &mut Rng, n: usize) -> FaultOracle {
    let m = rng.random_range(1..=5);
    let faults = (0..m)
        .map(|f| {
            let mut revealing: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
            if revealing.is_empty() {
                revealing.push(rng.random_range(0..n));
            }
            Fault {
                id: format!("f{f}"),
                revealing,
            }
        })
        .collect();
    FaultOracle::new(n, faults).unwrap()
}

/// 1-based position of the first test in `order` that appears in `tests`.
fn first_position(order: &[usize], tests: &[usize]) -> Option<usize> {
    order.iter().position(|t| tests.contains(t)).map(|p| p + 1)
}

pub fn ref_apfd(order: &[usize], oracle: &FaultOracle) -> f64 {
    let n = order.len() as f64;
    let m = oracle.len() as f64;
    let mut sum = 0.0;
    for f in oracle.faults() {
        sum += first_position(order, &f.revealing).unwrap() as f64;
    }
    1.0 - sum / (n * m) + 1.0 / (2.0 * n)
}

/// Cost-cognizant APFD with unit severities; `costs` indexed by suite position.
pub fn ref_apfdc(order: &[usize], oracle: &FaultOracle, costs: &[f64]) -> f64 {
    let ordered: Vec<f64> = order.iter().map(|&t| costs[t]).collect();
    let total: f64 = ordered.iter().sum();
    let mut num = 0.0;
    for f in oracle.faults() {
        let tf = first_position(order, &f.revealing).unwrap();
        let mut tail = 0.0;
        for c in &ordered[tf - 1..] {
            tail += c;
        }
        num += tail - 0.5 * ordered[tf - 1];
    }
    num / (total * oracle.len() as f64)
}

pub fn ref_napfd(prefix: &[usize], oracle: &FaultOracle) -> f64 {
    let k = prefix.len() as f64;
    let m = oracle.len() as f64;
    let mut detected = 0.0;
    let mut sum = 0.0;
    for f in oracle.faults() {
        if let Some(p) = first_position(prefix, &f.revealing) {
            detected += 1.0;
            sum += p as f64;
        }
    }
    let p = detected / m;
    p - sum / (k * m) + p / (2.0 * k)
}

pub fn ref_mtfd(order: &[usize], oracle: &FaultOracle) -> f64 {
    let worst = oracle
        .faults()
        .iter()
        .map(|f| first_position(order, &f.revealing).unwrap())
        .max()
        .unwrap();
    worst as f64 / order.len() as f64
}

pub fn ref_fdr(order: &[usize], sets: &[BTreeSet<usize>]) -> f64 {
    let all: BTreeSet<usize> = sets.iter().flatten().copied().collect();
    let redundancy = |prefix: &[usize]| {
        let total: usize = prefix.iter().map(|&t| sets[t].len()).sum();
        let union: BTreeSet<usize> = prefix.iter().flat_map(|&t| sets[t].iter().copied()).collect();
        (total - union.len()) as f64
    };
    let den = redundancy(order);
    if den == 0.0 {
        return 0.0;
    }
    let mut seen = BTreeSet::new();
    let mut k = order.len();
    for (i, &t) in order.iter().enumerate() {
        seen.extend(sets[t].iter().copied());
        if seen == all {
            k = i + 1;
            break;
        }
    }
    redundancy(&order[..k]) / den
}

/// Entity keys covered by each test, computed from the raw objects.
pub fn ref_entity_sets(suite: &TestSuite, kind: EntityKind) -> Vec<BTreeSet<String>> {
    suite
        .test_cases()
        .iter()
        .map(|tc| tc.objects.iter().map(|o| o.entity_key(kind).key).collect())
        .collect()
}

pub fn ref_fitness(order: &[usize], suite: &TestSuite, kind: EntityKind) -> f64 {
    let sets = ref_entity_sets(suite, kind);
    let universe: BTreeSet<&String> = sets.iter().flatten().collect();
    let n = order.len() as f64;
    let m = universe.len() as f64;
    let mut sum = 0.0;
    for e in universe {
        let pos = order.iter().position(|&t| sets[t].contains(e)).unwrap() + 1;
        sum += pos as f64;
    }
    1.0 - sum / (n * m) + 1.0 / (2.0 * n)
}

/// Oracle with one fault per segment, revealed by every test touching it.
pub fn segment_oracle(index: &CoverageIndex) -> FaultOracle {
    let cols = index.kind(EntityKind::Segment).columns();
    let faults = cols
        .iter()
        .enumerate()
        .map(|(e, col)| Fault {
            id: format!("seg{e}"),
            revealing: col.iter().collect(),
        })
        .collect();
    FaultOracle::new(index.n_tests(), faults).unwrap()
}

pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
