//! Seeded synthetic UI suites with planted faults.
//!
//! Pages hold segments, segments hold sibling groups, groups hold objects that
//! share an XPath skeleton and tag. A test case is a random walk that tends to
//! linger inside one group (clicking several rows of one table, say) before
//! moving to another group, segment or page. Faults are planted per sibling
//! group, so every test touching any member of a faulty group fails, plus a
//! few cross-cutting faults on random object sets.

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::coverage::{TestCase, TestObject, TestSuite};
use crate::metrics::{Fault, FaultOracle};
use crate::rng::seeded;

use super::BenchError;

const TAGS: [&str; 7] = ["button", "a", "input", "select", "span", "img", "td"];

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub min: usize,
    pub max: usize,
}

impl Span {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub const fn exactly(v: usize) -> Self {
        Self { min: v, max: v }
    }

    fn sample(&self, rng: &mut crate::rng::Rng) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_tests: usize,
    pub n_pages: usize,
    pub segments_per_page: Span,
    pub sibling_groups_per_segment: Span,
    pub objects_per_group: Span,
    pub steps_per_test: Span,
    /// Probability that a sibling group carries a fault.
    pub group_fault_prob: f64,
    pub cross_cutting_faults: usize,
    /// Objects per cross-cutting fault.
    pub cross_cutting_size: Span,
    /// Probability that the next step stays inside the current sibling group.
    pub stay_in_group: f64,
    pub cost_log_mean: f64,
    pub cost_log_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_tests: 40,
            n_pages: 4,
            segments_per_page: Span::new(2, 5),
            sibling_groups_per_segment: Span::new(1, 4),
            objects_per_group: Span::new(1, 8),
            steps_per_test: Span::new(3, 15),
            group_fault_prob: 0.05,
            cross_cutting_faults: 3,
            cross_cutting_size: Span::new(1, 3),
            stay_in_group: 0.6,
            cost_log_mean: 0.0,
            cost_log_sd: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |what: &str| Err(BenchError::InvalidSpec(what.to_string()));
        if self.n_tests == 0 || self.n_pages == 0 {
            return bad("n_tests and n_pages must be at least 1");
        }
        for (name, s) in [
            ("segments_per_page", self.segments_per_page),
            ("sibling_groups_per_segment", self.sibling_groups_per_segment),
            ("objects_per_group", self.objects_per_group),
            ("steps_per_test", self.steps_per_test),
            ("cross_cutting_size", self.cross_cutting_size),
        ] {
            if s.min == 0 || s.min > s.max {
                return bad(&format!("{name} must satisfy 1 <= min <= max"));
            }
        }
        for (name, p) in [
            ("group_fault_prob", self.group_fault_prob),
            ("stay_in_group", self.stay_in_group),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.cost_log_sd >= 0.0 && self.cost_log_mean.is_finite()) {
            return bad("cost parameters must be finite with sd >= 0");
        }
        Ok(())
    }
}

struct Group {
    objects: Vec<TestObject>,
}

struct Segment {
    groups: Vec<Group>,
}

struct Page {
    segments: Vec<Segment>,
}

fn build_site(spec: &SyntheticSpec, rng: &mut crate::rng::Rng) -> Vec<Page> {
    (0..spec.n_pages)
        .map(|p| {
            let url = format!("https://app.example/page{p}");
            let n_seg = spec.segments_per_page.sample(rng);
            let segments = (0..n_seg)
                .map(|s| {
                    let seg_id = format!("seg{s}");
                    let n_groups = spec.sibling_groups_per_segment.sample(rng);
                    let groups = (0..n_groups)
                        .map(|g| {
                            let tag = *TAGS.choose(rng).expect("tags");
                            let n_obj = spec.objects_per_group.sample(rng);
                            let objects = (0..n_obj)
                                .map(|k| {
                                    let xpath = format!(
                                        "/html/body/div[{}]/x-g{g}/li[{}]/{tag}",
                                        s + 1,
                                        k + 1
                                    );
                                    TestObject::new(url.clone(), xpath, tag, seg_id.clone())
                                        .expect("generated objects are valid")
                                })
                                .collect();
                            Group { objects }
                        })
                        .collect();
                    Segment { groups }
                })
                .collect();
            Page { segments }
        })
        .collect()
}

/// Position of a walker: page, segment, group.
type Cursor = (usize, usize, usize);

fn random_cursor(site: &[Page], rng: &mut crate::rng::Rng) -> Cursor {
    let p = rng.random_range(0..site.len());
    let s = rng.random_range(0..site[p].segments.len());
    let g = rng.random_range(0..site[p].segments[s].groups.len());
    (p, s, g)
}

fn step(site: &[Page], at: Cursor, spec: &SyntheticSpec, rng: &mut crate::rng::Rng) -> Cursor {
    let (p, s, _) = at;
    if rng.random::<f64>() < spec.stay_in_group {
        return at;
    }
    let u = rng.random::<f64>();
    if u < 0.5 {
        (p, s, rng.random_range(0..site[p].segments[s].groups.len()))
    } else if u < 0.8 {
        let s = rng.random_range(0..site[p].segments.len());
        (p, s, rng.random_range(0..site[p].segments[s].groups.len()))
    } else {
        random_cursor(site, rng)
    }
}

/// Builds a suite and its fault oracle. Identical specs give identical output.
pub fn generate(spec: &SyntheticSpec) -> Result<(TestSuite, FaultOracle), BenchError> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let site = build_site(spec, &mut rng);
    let cost_dist = LogNormal::new(spec.cost_log_mean, spec.cost_log_sd)
        .map_err(|e| BenchError::InvalidSpec(e.to_string()))?;

    let mut walks: Vec<Vec<(Cursor, usize)>> = Vec::with_capacity(spec.n_tests);
    let mut cases = Vec::with_capacity(spec.n_tests);
    for t in 0..spec.n_tests {
        let len = spec.steps_per_test.sample(&mut rng);
        let mut at = random_cursor(&site, &mut rng);
        let mut walk = Vec::with_capacity(len);
        for i in 0..len {
            if i > 0 {
                at = step(&site, at, spec, &mut rng);
            }
            let group = &site[at.0].segments[at.1].groups[at.2];
            walk.push((at, rng.random_range(0..group.objects.len())));
        }
        let objects = walk
            .iter()
            .map(|&((p, s, g), k)| site[p].segments[s].groups[g].objects[k].clone())
            .collect();
        let cost = cost_dist.sample(&mut rng);
        cases.push(TestCase::new(format!("T{t:04}"), objects, cost)?);
        walks.push(walk);
    }
    let suite = TestSuite::new(cases)?;

    let mut faults = Vec::new();
    for (p, page) in site.iter().enumerate() {
        for (s, seg) in page.segments.iter().enumerate() {
            for g in 0..seg.groups.len() {
                if rng.random::<f64>() >= spec.group_fault_prob {
                    continue;
                }
                let revealing: Vec<usize> = walks
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| w.iter().any(|&(c, _)| c == (p, s, g)))
                    .map(|(t, _)| t)
                    .collect();
                if !revealing.is_empty() {
                    faults.push(Fault {
                        id: format!("F-p{p}-s{s}-g{g}"),
                        revealing,
                    });
                }
            }
        }
    }

    let touched: Vec<(Cursor, usize)> = {
        let mut all: Vec<(Cursor, usize)> = walks.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    for f in 0..spec.cross_cutting_faults {
        let size = spec.cross_cutting_size.sample(&mut rng).min(touched.len());
        let picked: Vec<(Cursor, usize)> = touched.choose_multiple(&mut rng, size).copied().collect();
        let revealing: Vec<usize> = walks
            .iter()
            .enumerate()
            .filter(|(_, w)| w.iter().any(|x| picked.contains(x)))
            .map(|(t, _)| t)
            .collect();
        faults.push(Fault {
            id: format!("F-x{f}"),
            revealing,
        });
    }
    let oracle = FaultOracle::new(suite.len(), faults)?;
    Ok((suite, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{load_suite, CoverageIndex, EntityKind, Strictness};

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec {
            seed: 99,
            ..SyntheticSpec::default()
        };
        let (a, fa) = generate(&spec).unwrap();
        let (b, fb) = generate(&spec).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(fa.to_json(&a), fb.to_json(&b));
        let other = generate(&SyntheticSpec { seed: 100, ..spec }).unwrap().0;
        assert_ne!(a.to_json(), other.to_json());
    }

    #[test]
    fn output_round_trips_through_loader() {
        let (suite, oracle) = generate(&SyntheticSpec::default()).unwrap();
        let back = load_suite(&suite.to_json(), Strictness::Strict).unwrap();
        assert_eq!(back, suite);
        let o2 = FaultOracle::from_json(&oracle.to_json(&suite), &back).unwrap();
        assert_eq!(o2, oracle);
    }

    #[test]
    fn sibling_groups_match_construction() {
        let spec = SyntheticSpec {
            n_pages: 1,
            segments_per_page: Span::exactly(1),
            sibling_groups_per_segment: Span::exactly(3),
            objects_per_group: Span::exactly(4),
            n_tests: 60,
            ..SyntheticSpec::default()
        };
        let (suite, _) = generate(&spec).unwrap();
        let idx = CoverageIndex::build(&suite);
        assert_eq!(idx.universe(EntityKind::Segment).len(), 1);
        assert!(idx.universe(EntityKind::Sibling).len() <= 3);
    }

    #[test]
    fn single_group_fault_hits_every_test() {
        let spec = SyntheticSpec {
            n_pages: 1,
            segments_per_page: Span::exactly(1),
            sibling_groups_per_segment: Span::exactly(1),
            group_fault_prob: 1.0,
            cross_cutting_faults: 0,
            n_tests: 12,
            ..SyntheticSpec::default()
        };
        let (suite, oracle) = generate(&spec).unwrap();
        assert_eq!(oracle.len(), 1);
        assert_eq!(oracle.faults()[0].revealing.len(), suite.len());
    }

    #[test]
    fn no_faults_planted() {
        let spec = SyntheticSpec {
            group_fault_prob: 0.0,
            cross_cutting_faults: 0,
            ..SyntheticSpec::default()
        };
        let (_, oracle) = generate(&spec).unwrap();
        assert!(oracle.is_empty());
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SyntheticSpec {
                n_tests: 0,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                objects_per_group: Span::new(0, 2),
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                group_fault_prob: 1.5,
                ..SyntheticSpec::default()
            },
        ] {
            assert!(matches!(generate(&spec), Err(BenchError::InvalidSpec(_))));
        }
    }
}
