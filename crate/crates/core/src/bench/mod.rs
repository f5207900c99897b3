//! Seeded benchmark harness: runs techniques over suites with a fault oracle,
//! writes per-trial CSV rows and summarizes them as mean/σ tables with
//! one-sided Wilcoxon comparisons.

mod stats;
mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::coverage::{load_suite, CoverageError, CoverageIndex, EntityKind, Strictness, TestSuite};
use crate::metrics::{self, FaultOracle, MetricError, MtfdDenominator};
use crate::moea::GaConfig;
use crate::prioritizer::{prioritize, Technique, TechniqueParams};
use crate::rng::derive_seed;

pub use stats::{mean, std_dev, wilcoxon_one_sided, StatsError, WilcoxonResult, EXACT_LIMIT};
pub use synth::{generate, Span, SyntheticSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// A suite ready for benchmarking.
#[derive(Debug, Clone)]
pub struct BenchSuite {
    pub id: String,
    pub suite: TestSuite,
    pub index: CoverageIndex,
    pub oracle: FaultOracle,
}

impl BenchSuite {
    pub fn new(id: impl Into<String>, suite: TestSuite, oracle: FaultOracle) -> Result<Self, BenchError> {
        if oracle.n_tests() != suite.len() {
            return Err(BenchError::Metric(MetricError::LengthMismatch {
                order: suite.len(),
                what: "oracle",
                other: oracle.n_tests(),
            }));
        }
        if oracle.is_empty() {
            return Err(BenchError::Metric(MetricError::NoFaults));
        }
        let index = CoverageIndex::build(&suite);
        Ok(Self {
            id: id.into(),
            suite,
            index,
            oracle,
        })
    }

    pub fn synthetic(id: impl Into<String>, spec: &SyntheticSpec) -> Result<Self, BenchError> {
        let (suite, oracle) = generate(spec)?;
        Self::new(id, suite, oracle)
    }
}

/// Everything except the suites and techniques that shapes an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub master_seed: u64,
    /// Repeats of every stochastic technique other than random.
    pub repeats: usize,
    /// Repeats of random ordering; `None` means one per test case.
    pub random_repeats: Option<usize>,
    pub params: TechniqueParams,
    /// When false, `prio_time_s` is written as 0 so output is byte-stable.
    pub record_timing: bool,
    pub mtfd: MtfdDenominator,
    pub function_kind: EntityKind,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            master_seed: 0,
            repeats: 10,
            random_repeats: None,
            params: TechniqueParams::default(),
            record_timing: true,
            mtfd: MtfdDenominator::SuiteSize,
            function_kind: EntityKind::Sibling,
            threads: None,
        }
    }
}

impl ExperimentPlan {
    pub fn repeats_for(&self, technique: Technique, n_tests: usize) -> usize {
        match technique {
            Technique::Random => self.random_repeats.unwrap_or(n_tests),
            t if t.is_stochastic() => self.repeats,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Apfd,
    Apfdc,
    Napfd10,
    Napfd25,
    Napfd50,
    Mtfd,
    Fdr,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Apfd,
        Metric::Apfdc,
        Metric::Napfd10,
        Metric::Napfd25,
        Metric::Napfd50,
        Metric::Mtfd,
        Metric::Fdr,
    ];

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Metric::Apfd => "apfd",
            Metric::Apfdc => "apfdc",
            Metric::Napfd10 => "napfd10",
            Metric::Napfd25 => "napfd25",
            Metric::Napfd50 => "napfd50",
            Metric::Mtfd => "mtfd",
            Metric::Fdr => "fdr",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Apfd => "APFD",
            Metric::Apfdc => "APFDc",
            Metric::Napfd10 => "NAPFD@10",
            Metric::Napfd25 => "NAPFD@25",
            Metric::Napfd50 => "NAPFD@50",
            Metric::Mtfd => "MTFD",
            Metric::Fdr => "FDR",
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Mtfd | Metric::Fdr)
    }
}

/// Metric values of one trial, indexed by [`Metric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics(pub [f64; 7]);

impl TrialMetrics {
    pub fn get(&self, m: Metric) -> f64 {
        self.0[m as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub suite: String,
    pub algorithm: String,
    pub repeat: usize,
    pub seed: u64,
    /// Metrics, or the error message of a failed trial.
    pub outcome: Result<TrialMetrics, String>,
    pub prio_time_s: f64,
}

fn run_trial(
    bs: &BenchSuite,
    technique: Technique,
    repeat: usize,
    plan: &ExperimentPlan,
    functions: &[std::collections::BTreeSet<usize>],
) -> TrialReport {
    let seed = derive_seed(plan.master_seed, &bs.id, technique.name(), repeat as u64);
    let start = Instant::now();
    let result = prioritize(technique, &bs.index, &plan.params, seed);
    let elapsed = start.elapsed().as_secs_f64();
    let outcome = result.map_err(|e| e.to_string()).and_then(|p| {
        let order = &p.order;
        let oracle = &bs.oracle;
        let values = (|| -> Result<[f64; 7], MetricError> {
            Ok([
                metrics::apfd(order, oracle)?,
                metrics::apfdc(order, oracle, &bs.suite.costs())?,
                metrics::napfd_at(order, 10.0, oracle)?,
                metrics::napfd_at(order, 25.0, oracle)?,
                metrics::napfd_at(order, 50.0, oracle)?,
                metrics::mtfd(order, oracle, plan.mtfd)?,
                metrics::fdr(order, functions)?,
            ])
        })();
        values.map(TrialMetrics).map_err(|e| e.to_string())
    });
    if let Err(e) = &outcome {
        log::warn!("trial {}/{}/{repeat} failed: {e}", bs.id, technique.name());
    }
    TrialReport {
        suite: bs.id.clone(),
        algorithm: technique.name().to_string(),
        repeat,
        seed,
        outcome,
        prio_time_s: if plan.record_timing { elapsed } else { 0.0 },
    }
}

/// Runs every (suite, technique, repeat) trial. Failed trials are reported,
/// not fatal. Output is sorted by suite id, technique name and repeat, and is
/// independent of the thread count apart from timings.
pub fn run_experiment(
    suites: &[BenchSuite],
    techniques: &[Technique],
    plan: &ExperimentPlan,
) -> Result<Vec<TrialReport>, BenchError> {
    if suites.is_empty() || techniques.is_empty() {
        return Err(BenchError::Manifest("need at least one suite and one technique".into()));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = suites.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(BenchError::Manifest(format!("duplicate suite id `{}`", dup.id)));
    }
    let functions: Vec<_> = suites
        .iter()
        .map(|s| metrics::function_sets(&s.index, plan.function_kind))
        .collect();
    let mut trials = Vec::new();
    for (si, s) in suites.iter().enumerate() {
        for &t in techniques {
            for r in 0..plan.repeats_for(t, s.suite.len()) {
                trials.push((si, t, r));
            }
        }
    }
    let work = || -> Vec<TrialReport> {
        trials
            .par_iter()
            .map(|&(si, t, r)| run_trial(&suites[si], t, r, plan, &functions[si]))
            .collect()
    };
    let mut reports = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BenchError::ThreadPool(e.to_string()))?
            .install(work),
        None => work(),
    };
    reports.sort_by(|a, b| {
        (&a.suite, &a.algorithm, a.repeat).cmp(&(&b.suite, &b.algorithm, b.repeat))
    });
    Ok(reports)
}

pub const CSV_HEADER: [&str; 12] = [
    "suite", "algo", "repeat", "seed", "apfd", "apfdc", "napfd10", "napfd25", "napfd50", "mtfd", "fdr",
    "prio_time_s",
];

/// One row per trial. Metric cells of failed trials are left empty.
pub fn write_csv<W: io::Write>(reports: &[TrialReport], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        let mut row = vec![r.suite.clone(), r.algorithm.clone(), r.repeat.to_string(), r.seed.to_string()];
        match &r.outcome {
            Ok(m) => row.extend(m.0.iter().map(|v| v.to_string())),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        row.push(r.prio_time_s.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

/// Mean of each technique's successful trials on each suite:
/// `technique -> suite -> metrics`.
pub fn suite_means(reports: &[TrialReport]) -> BTreeMap<String, BTreeMap<String, TrialMetrics>> {
    let mut groups: BTreeMap<(String, String), Vec<TrialMetrics>> = BTreeMap::new();
    for r in reports {
        if let Ok(m) = &r.outcome {
            groups.entry((r.algorithm.clone(), r.suite.clone())).or_default().push(*m);
        }
    }
    let mut out: BTreeMap<String, BTreeMap<String, TrialMetrics>> = BTreeMap::new();
    for ((algo, suite), ms) in groups {
        let avg = TrialMetrics(std::array::from_fn(|k| {
            mean(&ms.iter().map(|m| m.0[k]).collect::<Vec<_>>())
        }));
        out.entry(algo).or_default().insert(suite, avg);
    }
    out
}

/// Per-suite means of `metric` for two techniques over the suites both completed.
pub fn paired_suite_means(
    reports: &[TrialReport],
    a: &str,
    b: &str,
    metric: Metric,
) -> (Vec<f64>, Vec<f64>) {
    let means = suite_means(reports);
    let (Some(ma), Some(mb)) = (means.get(a), means.get(b)) else {
        return (Vec::new(), Vec::new());
    };
    ma.iter()
        .filter_map(|(suite, x)| mb.get(suite).map(|y| (x.get(metric), y.get(metric))))
        .unzip()
}

/// One-sided test that `a` is better than `b` on `metric` across suites.
pub fn compare(
    reports: &[TrialReport],
    a: &str,
    b: &str,
    metric: Metric,
) -> Result<WilcoxonResult, StatsError> {
    let (x, y) = paired_suite_means(reports, a, b, metric);
    if metric.higher_is_better() {
        wilcoxon_one_sided(&x, &y)
    } else {
        wilcoxon_one_sided(&y, &x)
    }
}

const TABLE_METRICS: [Metric; 5] = [Metric::Apfd, Metric::Apfdc, Metric::Napfd10, Metric::Mtfd, Metric::Fdr];

/// Markdown report: mean/σ across suites of per-suite means (in percent),
/// then Wilcoxon p-values of `reference` against every other technique.
pub fn markdown_summary(reports: &[TrialReport], reference: &str) -> String {
    let means = suite_means(reports);
    let mut out = String::new();
    out.push_str("| Technique |");
    for m in TABLE_METRICS {
        let _ = write!(out, " {} M/σ |", m.label());
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(TABLE_METRICS.len()));
    out.push('\n');
    for (algo, per_suite) in &means {
        let _ = write!(out, "| {algo} |");
        for m in TABLE_METRICS {
            let xs: Vec<f64> = per_suite.values().map(|v| v.get(m) * 100.0).collect();
            let _ = write!(out, " {:.1}/{:.1} |", mean(&xs), std_dev(&xs));
        }
        out.push('\n');
    }
    let failed = reports.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        let _ = writeln!(out, "\n{failed} trial(s) failed and are excluded.");
    }
    if means.contains_key(reference) && means.len() > 1 {
        let _ = write!(out, "\nOne-sided Wilcoxon p-values, {reference} better than:\n\n| Technique |");
        for m in TABLE_METRICS {
            let _ = write!(out, " {} |", m.label());
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(TABLE_METRICS.len()));
        out.push('\n');
        for algo in means.keys().filter(|a| a.as_str() != reference) {
            let _ = write!(out, "| {algo} |");
            for m in TABLE_METRICS {
                match compare(reports, reference, algo, m) {
                    Ok(r) => {
                        let _ = write!(out, " {:.4} |", r.p_value);
                    }
                    Err(e) => {
                        let _ = write!(out, " n/a ({e}) |");
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub id: String,
    pub coverage: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_prob: Option<f64>,
    pub mutation_prob: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub kind: Option<EntityKind>,
    pub candidate_set: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    /// `"n"` (suite size, default) or `"m"` (fault count).
    pub mtfd_denominator: Option<String>,
    pub fdr_kind: Option<EntityKind>,
}

/// Contents of a `bench.toml` file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub master_seed: u64,
    pub repeats: Option<usize>,
    pub random_repeats: Option<usize>,
    pub algorithms: Vec<String>,
    #[serde(default = "default_true")]
    pub record_timing: bool,
    pub threads: Option<usize>,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub metrics: MetricSection,
    pub suites: Vec<SuiteEntry>,
}

fn default_true() -> bool {
    true
}

fn read(path: &Path) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A manifest turned into runnable parts.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub suites: Vec<BenchSuite>,
    pub techniques: Vec<Technique>,
    pub plan: ExperimentPlan,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Manifest(e.to_string()))
    }

    pub fn techniques(&self) -> Result<Vec<Technique>, BenchError> {
        if self.algorithms.is_empty() {
            return Err(BenchError::Manifest("`algorithms` is empty".into()));
        }
        self.algorithms
            .iter()
            .map(|a| a.parse::<Technique>().map_err(BenchError::Manifest))
            .collect()
    }

    pub fn plan(&self) -> Result<ExperimentPlan, BenchError> {
        let defaults = ExperimentPlan::default();
        let ga_defaults = GaConfig::default();
        let ga = GaConfig {
            population_size: self.ga.population.unwrap_or(ga_defaults.population_size),
            generations: self.ga.generations.unwrap_or(ga_defaults.generations),
            crossover_prob: self.ga.crossover_prob.unwrap_or(ga_defaults.crossover_prob),
            mutation_prob: self.ga.mutation_prob.unwrap_or(ga_defaults.mutation_prob),
            ..ga_defaults
        };
        ga.validate().map_err(|e| BenchError::Manifest(e.to_string()))?;
        let mut params = TechniqueParams {
            ga,
            ..TechniqueParams::default()
        };
        if let Some(k) = self.baseline.kind {
            params.baseline.entity_kind = k;
        }
        if let Some(c) = self.baseline.candidate_set {
            if c == 0 {
                return Err(BenchError::Manifest("candidate_set must be at least 1".into()));
            }
            params.baseline.art_candidate_set_size = c;
        }
        let mtfd = match self.metrics.mtfd_denominator.as_deref() {
            None | Some("n") => MtfdDenominator::SuiteSize,
            Some("m") => MtfdDenominator::FaultCount,
            Some(other) => {
                return Err(BenchError::Manifest(format!("mtfd_denominator must be \"n\" or \"m\", got `{other}`")))
            }
        };
        if self.threads == Some(0) {
            return Err(BenchError::Manifest("threads must be at least 1".into()));
        }
        Ok(ExperimentPlan {
            master_seed: self.master_seed,
            repeats: self.repeats.unwrap_or(defaults.repeats),
            random_repeats: self.random_repeats,
            params,
            record_timing: self.record_timing,
            mtfd,
            function_kind: self.metrics.fdr_kind.unwrap_or(defaults.function_kind),
            threads: self.threads,
        })
    }

    /// Loads or generates every suite; relative paths resolve against `base`.
    pub fn suites(&self, base: &Path) -> Result<Vec<BenchSuite>, BenchError> {
        if self.suites.is_empty() {
            return Err(BenchError::Manifest("no suites listed".into()));
        }
        self.suites
            .iter()
            .map(|e| match (&e.coverage, &e.oracle, &e.synthetic) {
                (Some(c), Some(o), None) => {
                    let strictness = if e.lenient { Strictness::Lenient } else { Strictness::Strict };
                    let suite = load_suite(&read(&base.join(c))?, strictness)?;
                    let oracle = FaultOracle::from_json(&read(&base.join(o))?, &suite)?;
                    BenchSuite::new(e.id.clone(), suite, oracle)
                }
                (None, None, Some(spec)) => BenchSuite::synthetic(e.id.clone(), spec),
                _ => Err(BenchError::Manifest(format!(
                    "suite `{}` needs either `coverage` and `oracle`, or `synthetic`",
                    e.id
                ))),
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Experiment, BenchError> {
        let manifest = Self::from_toml(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(Experiment {
            suites: manifest.suites(base)?,
            techniques: manifest.techniques()?,
            plan: manifest.plan()?,
        })
    }
}
