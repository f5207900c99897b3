//! `segprio`: prioritize, evaluate, benchmark and generate UI test suites.
//!
//! Exit codes: 0 on success, 2 for invalid input (files, flags, documents),
//! 1 for internal failures.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use segprio::bench::{self, BenchError, Manifest, SyntheticSpec};
use segprio::coverage::{load_suite, CoverageError, Strictness};
use segprio::metrics::{evaluate_all, FaultOracle, MetricError, MetricOptions, MtfdDenominator};
use segprio::moea::{GaConfig, MoeaError};
use segprio::prioritizer::{prioritize, PrioritizeError, Technique, TechniqueParams};
use segprio::{CoverageIndex, EntityKind, Ordering, TestSuite};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn in_file(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

impl From<PrioritizeError> for CliError {
    fn from(e: PrioritizeError) -> Self {
        match e {
            PrioritizeError::Moea(MoeaError::PopulationTooSmall(_) | MoeaError::NoGenerations | MoeaError::Probability { .. })
            | PrioritizeError::CandidateSet => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Csv(_) | BenchError::ThreadPool(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "segprio", about = "Segment-aware test case prioritization for UI test suites")]
struct Cli {
    /// Log progress (per-generation objectives, trials) to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Order a coverage file and write the ordering JSON.
    Prioritize(PrioritizeArgs),
    /// Score an ordering against a fault oracle.
    Evaluate(EvaluateArgs),
    /// Run a benchmark manifest (bench.toml).
    Bench(BenchArgs),
    /// Generate a synthetic coverage file and fault oracle.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct PrioritizeArgs {
    /// Coverage JSON file.
    coverage: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// agemoea, nsga2, ga, gt, ga-s, art-f or random.
    #[arg(long, default_value = "agemoea")]
    algo: Technique,
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 200)]
    gens: usize,
    #[arg(long, default_value_t = 0.5)]
    crossover_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    mutation_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Entity kind used by the greedy baselines: segment, sibling, object-type or object.
    #[arg(long, default_value = "object")]
    kind: EntityKind,
    /// ART-F candidate set size.
    #[arg(long, default_value_t = 10)]
    candidate_set: usize,
    /// Accept mismatched tags and uppercase element names.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Ordering JSON: {"order": [test ids...]}.
    #[arg(long)]
    order: PathBuf,
    #[arg(long)]
    coverage: PathBuf,
    #[arg(long)]
    oracle: PathBuf,
    /// Comma-separated prefix percentages for NAPFD.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    napfd_at: Vec<f64>,
    /// Also report the four coverage objectives of the order.
    #[arg(long)]
    objectives: bool,
    /// Divide MTFD by the fault count instead of the suite size.
    #[arg(long)]
    mtfd_per_fault: bool,
    /// Entity kind treated as a "function" by FDR.
    #[arg(long, default_value = "sibling")]
    fdr_kind: EntityKind,
    #[arg(long)]
    lenient: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Manifest file; relative suite paths resolve against its directory.
    manifest: PathBuf,
    /// Per-trial CSV output; standard output when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Markdown summary output.
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Technique compared against every other one in the summary.
    #[arg(long, default_value = "agemoea")]
    reference: String,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Coverage JSON output.
    #[arg(long)]
    coverage: PathBuf,
    /// Fault oracle JSON output.
    #[arg(long)]
    oracle: PathBuf,
    /// TOML file with SyntheticSpec fields; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    tests: Option<usize>,
    #[arg(long)]
    pages: Option<usize>,
    /// Probability that a sibling group carries a fault.
    #[arg(long)]
    q: Option<f64>,
    /// Number of cross-cutting faults.
    #[arg(long)]
    cross: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Objectives {
    seg: f64,
    sib: f64,
    #[serde(rename = "type")]
    obj_type: f64,
    obj: f64,
}

#[derive(Serialize)]
struct OrderingOutput<'a> {
    order: Vec<&'a str>,
    objectives: Objectives,
    #[serde(skip_serializing_if = "Option::is_none")]
    front_size: Option<usize>,
}

#[derive(Deserialize)]
struct OrderingInput {
    order: Vec<String>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| in_file(path, e))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| in_file(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn strictness(lenient: bool) -> Strictness {
    if lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    }
}

fn load(path: &Path, lenient: bool) -> Result<TestSuite, CliError> {
    load_suite(&read(path)?, strictness(lenient)).map_err(|e: CoverageError| in_file(path, e))
}

fn cmd_prioritize(a: PrioritizeArgs) -> Result<(), CliError> {
    let suite = load(&a.coverage, a.lenient)?;
    let index = CoverageIndex::build(&suite);
    let mut params = TechniqueParams {
        ga: GaConfig {
            population_size: a.pop,
            generations: a.gens,
            crossover_prob: a.crossover_prob,
            mutation_prob: a.mutation_prob,
            ..GaConfig::default()
        },
        ..TechniqueParams::default()
    };
    params.baseline.entity_kind = a.kind;
    params.baseline.art_candidate_set_size = a.candidate_set;
    let result = prioritize(a.algo, &index, &params, a.seed)?;
    let ids = suite.ids();
    let [seg, sib, obj_type, obj] = result.objectives.0;
    let out = OrderingOutput {
        order: result.order.as_slice().iter().map(|&i| ids[i]).collect(),
        objectives: Objectives { seg, sib, obj_type, obj },
        front_size: result.front_size,
    };
    let mut text = serde_json::to_string_pretty(&out).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_out(a.out.as_deref(), &text)
}

/// Maps an ordering document onto suite indices, rejecting non-permutations.
fn parse_order(path: &Path, suite: &TestSuite) -> Result<Ordering, CliError> {
    let doc: OrderingInput = serde_json::from_str(&read(path)?).map_err(|e| in_file(path, e))?;
    let ids = suite.id_index();
    let positions = doc
        .order
        .iter()
        .enumerate()
        .map(|(i, id)| {
            ids.get(id.as_str())
                .copied()
                .ok_or_else(|| in_file(path, format!("$.order[{i}]: unknown test id `{id}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if positions.len() != suite.len() {
        return Err(in_file(
            path,
            format!("$.order lists {} tests but the suite has {}", positions.len(), suite.len()),
        ));
    }
    Ordering::new(positions).map_err(|e| in_file(path, format!("$.order: {e}")))
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let suite = load(&a.coverage, a.lenient)?;
    let oracle = FaultOracle::from_json(&read(&a.oracle)?, &suite).map_err(|e| in_file(&a.oracle, e))?;
    let order = parse_order(&a.order, &suite)?;
    if let Some(p) = a.napfd_at.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
        return Err(CliError::Input(format!("--napfd-at values must lie in (0, 100], got {p}")));
    }
    let index = CoverageIndex::build(&suite);
    let opts = MetricOptions {
        napfd_percents: a.napfd_at,
        mtfd: if a.mtfd_per_fault {
            MtfdDenominator::FaultCount
        } else {
            MtfdDenominator::SuiteSize
        },
        function_kind: a.fdr_kind,
    };
    let mut report = evaluate_all(&order, &suite, &index, &oracle, &opts)
        .map_err(|e: MetricError| CliError::Input(e.to_string()))?;
    if a.objectives {
        let f = segprio::fitness::evaluate::<f64>(&order, &index).map_err(|e| CliError::Input(e.to_string()))?;
        report.objectives = Some(f.0);
    }
    write_out(None, &(report.to_json() + "\n"))
}

fn cmd_bench(a: BenchArgs, threads: Option<u16>) -> Result<(), CliError> {
    let mut exp = Manifest::load(&a.manifest)?;
    if let Some(t) = threads {
        exp.plan.threads = Some(t as usize);
    }
    if !exp.techniques.iter().any(|t| t.name() == a.reference) {
        log::warn!("reference technique `{}` is not in the manifest", a.reference);
    }
    let reports = bench::run_experiment(&exp.suites, &exp.techniques, &exp.plan)?;
    let mut csv = Vec::new();
    bench::write_csv(&reports, &mut csv)?;
    let csv = String::from_utf8(csv).map_err(|e| CliError::Internal(e.to_string()))?;
    write_out(a.csv.as_deref(), &csv)?;
    if let Some(md) = &a.markdown {
        write_out(Some(md), &bench::markdown_summary(&reports, &a.reference))?;
    }
    let failed = reports.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} trials failed", reports.len());
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let mut spec = match &a.spec {
        Some(p) => toml::from_str::<SyntheticSpec>(&read(p)?).map_err(|e| in_file(p, e))?,
        None => SyntheticSpec::default(),
    };
    if let Some(n) = a.tests {
        spec.n_tests = n;
    }
    if let Some(p) = a.pages {
        spec.n_pages = p;
    }
    if let Some(q) = a.q {
        spec.group_fault_prob = q;
    }
    if let Some(c) = a.cross {
        spec.cross_cutting_faults = c;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let (suite, oracle) = bench::generate(&spec)?;
    write_out(Some(&a.coverage), &(suite.to_json() + "\n"))?;
    write_out(Some(&a.oracle), &(oracle.to_json(&suite) + "\n"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Prioritize(a) => cmd_prioritize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Bench(a) => cmd_bench(a, cli.threads),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!(
            "{} (prng: {}; trial seeds: {})",
            env!("CARGO_PKG_VERSION"),
            segprio::rng::PRNG_NAME,
            segprio::rng::SEED_HASH_NAME
        )
        .into_boxed_str(),
    );
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
