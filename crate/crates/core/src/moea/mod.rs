//! Permutation-encoded multi-objective search (NSGA-II and AGE-MOEA) over the
//! four coverage objectives, and selection of one order from the final front.

pub mod agemoea;
pub mod operators;
pub mod sorting;

use std::cmp::Ordering as CmpOrdering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::coverage::CoverageIndex;
use crate::fitness::{self, FitnessError, FitnessVector};
use crate::ordering::Ordering;
use crate::rng::{seeded, Rng};
use crate::scalar::Scalar;

pub use agemoea::{agemoea_survival, FrontGeometry};
pub use operators::{mutate, pmx_crossover, pmx_with_cuts, MutationOp};
pub use sorting::{crowding_distance, fast_nondominated_sort};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoeaError {
    #[error("population size must be at least 2, got {0}")]
    PopulationTooSmall(usize),
    #[error("generations must be at least 1")]
    NoGenerations,
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("pareto front is empty")]
    EmptyFront,
    #[error("front members {0} and {1} dominate one another")]
    DominatedMember(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<T> {
    pub perm: Ordering,
    pub fitness: Option<FitnessVector<T>>,
}

impl<T: Scalar> Individual<T> {
    pub fn unevaluated(perm: Ordering) -> Self {
        Self { perm, fitness: None }
    }

    pub fn evaluated(perm: Ordering, fitness: FitnessVector<T>) -> Self {
        Self {
            perm,
            fitness: Some(fitness),
        }
    }

    fn fit(&self) -> &FitnessVector<T> {
        self.fitness.as_ref().expect("individual evaluated")
    }
}

/// Mutually non-dominated, non-empty set of evaluated individuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront<T> {
    members: Vec<Individual<T>>,
}

impl<T: Scalar> ParetoFront<T> {
    pub fn new(members: Vec<Individual<T>>) -> Result<Self, MoeaError> {
        if members.is_empty() {
            return Err(MoeaError::EmptyFront);
        }
        for (i, a) in members.iter().enumerate() {
            for (j, b) in members.iter().enumerate() {
                if a.fit().dominates(b.fit()) {
                    return Err(MoeaError::DominatedMember(i, j));
                }
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Individual<T>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Survivors of an environmental selection with their front rank and
/// secondary score (crowding distance or survival score; larger is better).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Selection<T> {
    pub indices: Vec<usize>,
    pub ranks: Vec<usize>,
    pub scores: Vec<T>,
}

impl<T> Selection<T> {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            indices: Vec::with_capacity(n),
            ranks: Vec::with_capacity(n),
            scores: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn push(&mut self, index: usize, rank: usize, score: T) {
        self.indices.push(index);
        self.ranks.push(rank);
        self.scores.push(score);
    }
}

/// NSGA-II environmental selection: whole fronts while they fit, then the
/// splitting front by descending crowding distance (ties to lower index).
pub fn nsga2_survival<T: Scalar>(points: &[FitnessVector<T>], needed: usize) -> Selection<T> {
    let needed = needed.min(points.len());
    let mut sel = Selection::with_capacity(needed);
    for (rank, front) in fast_nondominated_sort(points).into_iter().enumerate() {
        let capacity = needed - sel.len();
        if capacity == 0 {
            break;
        }
        let members: Vec<FitnessVector<T>> = front.iter().map(|&i| points[i]).collect();
        let dist = crowding_distance(&members);
        let mut local: Vec<usize> = (0..front.len()).collect();
        if front.len() > capacity {
            local.sort_by(|&a, &b| {
                dist[b]
                    .partial_cmp(&dist[a])
                    .expect("crowding distance is never NaN")
                    .then(a.cmp(&b))
            });
            local.truncate(capacity);
        }
        for l in local {
            sel.push(front[l], rank, dist[l]);
        }
    }
    sel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Algorithm {
    Nsga2,
    #[default]
    AgeMoea,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::AgeMoea => "agemoea",
        }
    }

    pub fn survival<T: Scalar>(self, points: &[FitnessVector<T>], needed: usize) -> Selection<T> {
        match self {
            Algorithm::Nsga2 => nsga2_survival(points, needed),
            Algorithm::AgeMoea => agemoea_survival(points, needed),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nsga2" | "nsga-ii" => Ok(Algorithm::Nsga2),
            "agemoea" | "age-moea" => Ok(Algorithm::AgeMoea),
            _ => Err(format!("unknown algorithm `{s}` (expected agemoea or nsga2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Probability that an offspring receives one swap/invert/insert mutation.
    pub mutation_prob: f64,
    pub rng_seed: u64,
    pub algorithm: Algorithm,
    /// Evaluate offspring on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 200,
            crossover_prob: 0.5,
            mutation_prob: 1.0,
            rng_seed: 0,
            algorithm: Algorithm::AgeMoea,
            parallel: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), MoeaError> {
        if self.population_size < 2 {
            return Err(MoeaError::PopulationTooSmall(self.population_size));
        }
        if self.generations < 1 {
            return Err(MoeaError::NoGenerations);
        }
        for (name, value) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(MoeaError::Probability { name, value });
            }
        }
        Ok(())
    }

    /// Population size actually used: odd sizes are rounded up so offspring
    /// come in pairs.
    pub fn effective_population(&self) -> usize {
        self.population_size + self.population_size % 2
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub front: ParetoFront<T>,
    pub chosen: Individual<T>,
}

/// Lexicographic preference (segment, sibling, type, object), larger first;
/// complete ties go to the lexicographically smaller permutation.
fn preference<T: Scalar>(a: &Individual<T>, b: &Individual<T>) -> CmpOrdering {
    let (fa, fb) = (a.fit(), b.fit());
    for k in 0..4 {
        match fb.0[k].partial_cmp(&fa.0[k]).expect("fitness is never NaN") {
            CmpOrdering::Equal => continue,
            other => return other,
        }
    }
    a.perm.cmp(&b.perm)
}

/// Picks the member ranked first by segment, then sibling, type and object fitness.
pub fn choose_solution<T: Scalar>(front: &ParetoFront<T>) -> &Individual<T> {
    front
        .members()
        .iter()
        .min_by(|a, b| preference(a, b))
        .expect("front is non-empty")
}

fn evaluate_all<T: Scalar>(
    perms: Vec<Ordering>,
    index: &CoverageIndex,
    parallel: bool,
) -> Result<Vec<Individual<T>>, MoeaError> {
    let eval = |p: Ordering| -> Result<Individual<T>, FitnessError> {
        let f = fitness::evaluate(&p, index)?;
        Ok(Individual::evaluated(p, f))
    };
    let out: Result<Vec<_>, FitnessError> = if parallel {
        perms.into_par_iter().map(eval).collect()
    } else {
        perms.into_iter().map(eval).collect()
    };
    Ok(out?)
}

/// Binary tournament on (rank ascending, score descending); ties keep the first draw.
fn tournament<T: Scalar>(ranks: &[usize], scores: &[T], rng: &mut Rng) -> usize {
    let a = rng.random_range(0..ranks.len());
    let b = rng.random_range(0..ranks.len());
    match ranks[a].cmp(&ranks[b]) {
        CmpOrdering::Less => a,
        CmpOrdering::Greater => b,
        CmpOrdering::Equal => {
            if scores[b] > scores[a] {
                b
            } else {
                a
            }
        }
    }
}

struct Population<T> {
    members: Vec<Individual<T>>,
    ranks: Vec<usize>,
    scores: Vec<T>,
}

/// Environmental selection over `candidates`. Duplicate permutations are only
/// kept when there are too few distinct ones to fill the population.
fn reinsert<T: Scalar>(candidates: Vec<Individual<T>>, size: usize, algorithm: Algorithm) -> Population<T> {
    let mut seen = HashSet::with_capacity(candidates.len());
    let (mut pool, dups): (Vec<_>, Vec<_>) = candidates
        .into_iter()
        .partition(|ind| seen.insert(ind.perm.clone()));
    if pool.len() < size {
        let missing = size - pool.len();
        pool.extend(dups.into_iter().take(missing));
    }
    let points: Vec<FitnessVector<T>> = pool.iter().map(|i| *i.fit()).collect();
    let sel = algorithm.survival(&points, size);
    let mut slots: Vec<Option<Individual<T>>> = pool.into_iter().map(Some).collect();
    let members = sel
        .indices
        .iter()
        .map(|&i| slots[i].take().expect("selected once"))
        .collect();
    Population {
        members,
        ranks: sel.ranks,
        scores: sel.scores,
    }
}

fn log_generation<T: Scalar>(generation: usize, pop: &Population<T>) {
    if !log::log_enabled!(log::Level::Info) {
        return;
    }
    let best: [f64; 4] = std::array::from_fn(|k| {
        pop.members
            .iter()
            .map(|m| m.fit().0[k].to_f64().unwrap_or(f64::NAN))
            .fold(f64::MIN, f64::max)
    });
    let front = pop.ranks.iter().filter(|&&r| r == 0).count();
    log::info!(
        "generation {generation}: front {front}, best seg {:.4} sib {:.4} type {:.4} obj {:.4}",
        best[0],
        best[1],
        best[2],
        best[3]
    );
}

/// Runs the configured search and returns the final non-dominated front and
/// the preferred member of it. Identical configurations give identical results.
pub fn run<T: Scalar>(index: &CoverageIndex, cfg: &GaConfig) -> Result<RunResult<T>, MoeaError> {
    run_with_observer(index, cfg, |_, _| {})
}

/// As [`run`], calling `observer(generation, population)` after every
/// environmental selection (generation 0 is the initial population).
pub fn run_with_observer<T: Scalar>(
    index: &CoverageIndex,
    cfg: &GaConfig,
    mut observer: impl FnMut(usize, &[Individual<T>]),
) -> Result<RunResult<T>, MoeaError> {
    cfg.validate()?;
    let size = cfg.effective_population();
    if size != cfg.population_size {
        log::warn!("population size {} is odd; using {size}", cfg.population_size);
    }
    let n = index.n_tests();
    let mut rng = seeded(cfg.rng_seed);

    let initial: Vec<Ordering> = (0..size)
        .map(|_| {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(&mut rng);
            Ordering::from_vec_unchecked(v)
        })
        .collect();
    let mut pop = reinsert(evaluate_all(initial, index, cfg.parallel)?, size, cfg.algorithm);
    log_generation(0, &pop);
    observer(0, &pop.members);

    for generation in 1..=cfg.generations {
        let mut children = Vec::with_capacity(size);
        while children.len() < size {
            let a = &pop.members[tournament(&pop.ranks, &pop.scores, &mut rng)].perm;
            let b = &pop.members[tournament(&pop.ranks, &pop.scores, &mut rng)].perm;
            let (c1, c2) = if n >= 2 && rng.random::<f64>() < cfg.crossover_prob {
                pmx_crossover(a, b, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            for c in [c1, c2] {
                let c = if n >= 2 && rng.random::<f64>() < cfg.mutation_prob {
                    mutate(&c, &mut rng)
                } else {
                    c
                };
                children.push(c);
            }
        }
        let mut candidates = std::mem::take(&mut pop.members);
        candidates.extend(evaluate_all(children, index, cfg.parallel)?);
        pop = reinsert(candidates, size, cfg.algorithm);
        log_generation(generation, &pop);
        observer(generation, &pop.members);
    }

    let mut seen = HashSet::new();
    let front_members: Vec<Individual<T>> = pop
        .members
        .into_iter()
        .zip(&pop.ranks)
        .filter(|(ind, &r)| r == 0 && seen.insert(ind.perm.clone()))
        .map(|(ind, _)| ind)
        .collect();
    let front = ParetoFront::new(front_members)?;
    let chosen = choose_solution(&front).clone();
    Ok(RunResult { front, chosen })
}
