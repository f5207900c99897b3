//! Uniform entry point over every prioritization technique.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::baselines::{self, BaselineConfig};
use crate::coverage::CoverageIndex;
use crate::fitness::{self, FitnessError, FitnessVector};
use crate::moea::{self, Algorithm, GaConfig, MoeaError};
use crate::ordering::Ordering;
use crate::rng::seeded;

#[derive(Debug, Error)]
pub enum PrioritizeError {
    #[error(transparent)]
    Moea(#[from] MoeaError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("candidate set size must be at least 1")]
    CandidateSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Technique {
    Random,
    ArtF,
    GreedyTotal,
    GreedyAdditional,
    AdditionalSpanning,
    Moea(Algorithm),
}

impl Technique {
    pub const ALL: [Technique; 7] = [
        Technique::Moea(Algorithm::AgeMoea),
        Technique::Moea(Algorithm::Nsga2),
        Technique::GreedyAdditional,
        Technique::GreedyTotal,
        Technique::AdditionalSpanning,
        Technique::ArtF,
        Technique::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Random => "random",
            Technique::ArtF => "art-f",
            Technique::GreedyTotal => "gt",
            Technique::GreedyAdditional => "ga",
            Technique::AdditionalSpanning => "ga-s",
            Technique::Moea(a) => a.name(),
        }
    }

    /// Whether the result depends on the seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Technique::Random | Technique::ArtF | Technique::Moea(_))
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Technique::Random),
            "art-f" | "artf" => Ok(Technique::ArtF),
            "gt" => Ok(Technique::GreedyTotal),
            "ga" => Ok(Technique::GreedyAdditional),
            "ga-s" => Ok(Technique::AdditionalSpanning),
            other => other.parse::<Algorithm>().map(Technique::Moea).map_err(|_| {
                format!("unknown algorithm `{s}` (expected agemoea, nsga2, random, art-f, gt, ga or ga-s)")
            }),
        }
    }
}

/// Settings shared by all techniques; each reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TechniqueParams {
    pub ga: GaConfig,
    pub baseline: BaselineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prioritized {
    pub order: Ordering,
    /// Coverage objectives of `order`.
    pub objectives: FitnessVector<f64>,
    /// Size of the final non-dominated front (search techniques only).
    pub front_size: Option<usize>,
}

/// Orders the suite behind `index` with `technique`, seeding every random
/// choice from `seed` (which overrides the seeds inside `params`).
pub fn prioritize(
    technique: Technique,
    index: &CoverageIndex,
    params: &TechniqueParams,
    seed: u64,
) -> Result<Prioritized, PrioritizeError> {
    let kind = params.baseline.entity_kind;
    let n = index.n_tests();
    let (order, front_size) = match technique {
        Technique::Random => (baselines::random_order(n, &mut seeded(seed)), None),
        Technique::ArtF => {
            if params.baseline.art_candidate_set_size == 0 {
                return Err(PrioritizeError::CandidateSet);
            }
            (baselines::art_f(index, &mut seeded(seed), &params.baseline), None)
        }
        Technique::GreedyTotal => (baselines::greedy_total(index, kind), None),
        Technique::GreedyAdditional => (baselines::greedy_additional(index, kind), None),
        Technique::AdditionalSpanning => (baselines::additional_spanning(index, kind), None),
        Technique::Moea(algorithm) => {
            let cfg = GaConfig {
                algorithm,
                rng_seed: seed,
                ..params.ga.clone()
            };
            let out = moea::run::<f64>(index, &cfg)?;
            (out.chosen.perm, Some(out.front.len()))
        }
    };
    let objectives = fitness::evaluate(&order, index)?;
    Ok(Prioritized {
        order,
        objectives,
        front_size,
    })
}
