//! Acceptance gate: prints one PASS/FAIL line per criterion and exits non-zero
//! if any hard criterion fails. Findings that are reported but not enforced
//! are marked NOT MET.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng as _;
use segprio::bench::{self, Manifest, Metric, SyntheticSpec};
use segprio::coverage::{CoverageIndex, EntityKind};
use segprio::fitness::{coverage_fitness, evaluate, FitnessVector};
use segprio::metrics::{self, MtfdDenominator};
use segprio::moea::operators::{mutate, pmx_crossover};
use segprio::moea::sorting::fast_nondominated_sort;
use segprio::moea::{self, Algorithm, GaConfig};
use segprio::rng::seeded;
use segprio::Ordering;

struct Gate {
    failures: usize,
}

impl Gate {
    fn report(&mut self, id: &str, ok: bool, detail: String) {
        println!("criterion {id}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn criterion_1() -> (bool, String) {
    let mut rng = seeded(101);
    let mut trials = 0;
    let mut optimal = 0;
    let mut slowest = Duration::ZERO;
    for n in [4, 5, 6] {
        for _ in 0..7 {
            let suite = random_suite(&mut rng, n);
            let idx = CoverageIndex::build(&suite);
            let all: Vec<FitnessVector<f64>> = all_permutations(n)
                .into_iter()
                .map(|p| evaluate(&Ordering::new(p).unwrap(), &idx).unwrap())
                .collect();
            let start = Instant::now();
            for algorithm in [Algorithm::Nsga2, Algorithm::AgeMoea] {
                let cfg = GaConfig {
                    algorithm,
                    rng_seed: rng.random(),
                    ..GaConfig::default()
                };
                let out = moea::run::<f64>(&idx, &cfg).unwrap();
                let f = out.chosen.fitness.unwrap();
                trials += 1;
                if !all.iter().any(|g| g.dominates(&f)) {
                    optimal += 1;
                }
            }
            slowest = slowest.max(start.elapsed());
        }
    }
    let ok = optimal == trials && slowest < Duration::from_secs(5);
    (ok, format!("{optimal}/{trials} chosen orders non-dominated over n! on 21 suites; slowest suite {slowest:.2?}"))
}

fn criterion_2() -> (bool, String) {
    let mut rng = seeded(202);
    let mut worst = 0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..15);
        let suite = random_suite(&mut rng, n);
        let idx = CoverageIndex::build(&suite);
        let oracle = segment_oracle(&idx);
        let order = random_order(&mut rng, n);
        let f: f64 = coverage_fitness(&order, &idx, EntityKind::Segment).unwrap();
        let a: f64 = metrics::apfd(&order, &oracle).unwrap();
        worst = worst.max((f - a).abs());
    }
    (worst <= 1e-12, format!("max |f_seg - apfd| = {worst:e} over 100 suites"))
}

fn criterion_3() -> (bool, String) {
    let mut rng = seeded(303);
    let mut worst = 0f64;
    let mut equal_cost_worst = 0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(1..13);
        let suite = random_suite(&mut rng, n);
        let idx = CoverageIndex::build(&suite);
        let oracle = random_oracle(&mut rng, n);
        let order = random_order(&mut rng, n);
        let v = order.as_slice();
        let costs = suite.costs();
        let k = rng.random_range(1..=n);
        let sets = metrics::function_sets(&idx, EntityKind::Sibling);
        let apfd: f64 = metrics::apfd(&order, &oracle).unwrap();
        let pairs = [
            (apfd, ref_apfd(v, &oracle)),
            (metrics::apfdc(&order, &oracle, &costs).unwrap(), ref_apfdc(v, &oracle, &costs)),
            (metrics::napfd(&v[..k], &oracle).unwrap(), ref_napfd(&v[..k], &oracle)),
            (metrics::mtfd(&order, &oracle, MtfdDenominator::SuiteSize).unwrap(), ref_mtfd(v, &oracle)),
            (metrics::fdr(&order, &sets).unwrap(), ref_fdr(v, &sets)),
        ];
        for (got, want) in pairs {
            worst = worst.max((got - want).abs());
        }
        let equal: f64 = metrics::apfdc(&order, &oracle, &vec![3.0; n]).unwrap();
        equal_cost_worst = equal_cost_worst.max((equal - apfd).abs());
    }
    (
        worst <= 1e-12 && equal_cost_worst <= 1e-12,
        format!("10^4 triples: max deviation {worst:e}; max |apfdc(equal) - apfd| {equal_cost_worst:e}"),
    )
}

fn naive_fronts(points: &[FitnessVector<f64>]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| {
                !left.iter().any(|&j| {
                    let (a, b) = (&points[j].0, &points[i].0);
                    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
                })
            })
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn criterion_4() -> (bool, String) {
    let mut rng = seeded(404);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let p = rng.random_range(1..=200);
        let levels = rng.random_range(2..12);
        let pts: Vec<FitnessVector<f64>> = (0..p)
            .map(|_| FitnessVector(std::array::from_fn(|_| rng.random_range(0..levels) as f64 / levels as f64)))
            .collect();
        if fast_nondominated_sort(&pts) != naive_fronts(&pts) {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("{mismatches} mismatches on 1000 populations (P <= 200)"))
}

fn criterion_5() -> (bool, String) {
    let mut rng = seeded(505);
    let mut invalid = 0;
    let valid = |o: &Ordering| {
        let mut v = o.as_slice().to_vec();
        v.sort_unstable();
        v.iter().enumerate().all(|(i, &x)| i == x)
    };
    for _ in 0..100_000 {
        let n = rng.random_range(2..24);
        let mut a = random_order(&mut rng, n);
        let mut b = random_order(&mut rng, n);
        for _ in 0..rng.random_range(1..6) {
            if rng.random_bool(0.5) {
                (a, b) = pmx_crossover(&a, &b, &mut rng);
            } else {
                a = mutate(&a, &mut rng);
            }
            if !valid(&a) || !valid(&b) {
                invalid += 1;
            }
        }
    }
    (invalid == 0, format!("{invalid} invalid permutations over 10^5 operator sequences"))
}

fn corpus_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests/directional.toml")
}

fn criterion_6(gate: &mut Gate) {
    let exp = Manifest::load(&corpus_path()).expect("directional corpus manifest");
    let sizes: Vec<usize> = exp.suites.iter().map(|s| s.suite.len()).collect();
    let start = Instant::now();
    let reports = bench::run_experiment(&exp.suites, &exp.techniques, &exp.plan).unwrap();
    let elapsed = start.elapsed();
    let failed = reports.iter().filter(|r| r.outcome.is_err()).count();
    let mean_of = |algo: &str, m: Metric| {
        let means = bench::suite_means(&reports);
        bench::mean(&means[algo].values().map(|v| v.get(m)).collect::<Vec<_>>())
    };
    let p = |a: &str, b: &str, m: Metric| bench::compare(&reports, a, b, m).map(|r| r.p_value).unwrap_or(1.0);
    let (seg, ga, rnd) = ("agemoea", "ga", "random");
    let apfd = [mean_of(seg, Metric::Apfd), mean_of(ga, Metric::Apfd), mean_of(rnd, Metric::Apfd)];
    let fdr = [mean_of(seg, Metric::Fdr), mean_of(ga, Metric::Fdr), mean_of(rnd, Metric::Fdr)];
    println!(
        "criterion 6: corpus {} suites, n in [{}, {}], {} trials ({failed} failed) in {elapsed:.1?}",
        sizes.len(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        reports.len()
    );
    println!("criterion 6: mean APFD segtcp {:.4} / ga {:.4} / random {:.4}", apfd[0], apfd[1], apfd[2]);
    println!("criterion 6: mean FDR  segtcp {:.4} / ga {:.4} / random {:.4}", fdr[0], fdr[1], fdr[2]);

    let vs_random = (p(seg, rnd, Metric::Apfd), p(seg, rnd, Metric::Fdr));
    gate.report(
        "6a",
        apfd[0] > apfd[2] && fdr[0] < fdr[2] && vs_random.0 < 0.05 && vs_random.1 < 0.05,
        format!("SegTCP vs Random: APFD p = {:.6}, FDR p = {:.6}", vs_random.0, vs_random.1),
    );
    gate.report(
        "6b",
        apfd[1] > apfd[2] && fdr[1] < fdr[2],
        "Greedy Additional beats Random on mean APFD and mean FDR".into(),
    );
    let fdr_vs_ga = p(seg, ga, Metric::Fdr);
    gate.report("6c", fdr[0] < fdr[1] && fdr_vs_ga < 0.05, format!("SegTCP FDR below Greedy Additional, p = {fdr_vs_ga:.6}"));
    let apfd_vs_ga = p(seg, ga, Metric::Apfd);
    let met = apfd[0] > apfd[1] && apfd_vs_ga < 0.05;
    println!(
        "criterion 6d: {} — SegTCP APFD above Greedy Additional, p = {apfd_vs_ga:.6} (reported, not enforced)",
        if met { "PASS" } else { "NOT MET" }
    );
    let mtfd = (mean_of(seg, Metric::Mtfd), mean_of(rnd, Metric::Mtfd));
    gate.report("6e", mtfd.0 < mtfd.1, format!("mean MTFD segtcp {:.4} < random {:.4}", mtfd.0, mtfd.1));
    gate.report("6f", elapsed < Duration::from_secs(600), format!("full corpus run took {elapsed:.1?} (< 10 min)"));
}

fn criterion_7() -> (bool, String) {
    let a: Vec<f64> = (0..11).map(|i| i as f64 + 1.0).collect();
    let b: Vec<f64> = a.iter().map(|x| x - 1.0).collect();
    let r = bench::wilcoxon_one_sided(&a, &b).unwrap();
    let exact_ok = r.w_minus == 0.0 && (r.p_value - 2f64.powi(-11)).abs() < 1e-15;

    let mut rng = seeded(707);
    let mut ks = Vec::new();
    for pairs in [25usize, 40] {
        let mut ps: Vec<f64> = (0..10_000)
            .map(|_| {
                let x: Vec<f64> = (0..pairs).map(|_| rng.random::<f64>()).collect();
                let y: Vec<f64> = (0..pairs).map(|_| rng.random::<f64>()).collect();
                bench::wilcoxon_one_sided(&x, &y).unwrap().p_value
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        // the null CDF equals p at every attainable p-value, so compare the
        // empirical CDF there (after the last copy of each value)
        let total = ps.len() as f64;
        let mut d = 0f64;
        for i in 0..ps.len() {
            if i + 1 == ps.len() || ps[i + 1] != ps[i] {
                d = d.max(((i + 1) as f64 / total - ps[i]).abs());
            }
        }
        ks.push((pairs, d));
    }
    let ks_ok = ks.iter().all(|&(_, d)| d <= 0.02);
    (
        exact_ok && ks_ok,
        format!(
            "11 positive pairs: W- = {}, p = {:.9} (2^-11 = {:.9}); KS distance exact n=25: {:.4}, normal n=40: {:.4}",
            r.w_minus,
            r.p_value,
            2f64.powi(-11),
            ks[0].1,
            ks[1].1
        ),
    )
}

fn csv_for(threads: usize) -> Vec<u8> {
    let mut exp = Manifest::load(&corpus_path()).unwrap();
    exp.suites.truncate(3);
    exp.plan.repeats = 2;
    exp.plan.record_timing = false;
    exp.plan.params.ga.population_size = 30;
    exp.plan.params.ga.generations = 30;
    exp.plan.threads = Some(threads);
    let reports = bench::run_experiment(&exp.suites, &exp.techniques, &exp.plan).unwrap();
    let mut out = Vec::new();
    bench::write_csv(&reports, &mut out).unwrap();
    out
}

fn criterion_8() -> (bool, String) {
    let runs = [csv_for(1), csv_for(4), csv_for(1), csv_for(4)];
    let bench_ok = runs.iter().all(|r| r == &runs[0]);
    let spec = SyntheticSpec {
        seed: 808,
        ..SyntheticSpec::default()
    };
    let gen_ok = bench::generate(&spec).unwrap().0.to_json() == bench::generate(&spec).unwrap().0.to_json();
    let idx = CoverageIndex::build(&random_suite(&mut seeded(8), 10));
    let front = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let cfg = GaConfig {
                population_size: 24,
                generations: 20,
                rng_seed: 5,
                ..GaConfig::default()
            };
            moea::run::<f64>(&idx, &cfg).unwrap().front.members().to_vec()
        })
    };
    let moea_ok = front(1) == front(4) && front(4) == front(4);
    (
        bench_ok && gen_ok && moea_ok,
        format!("bench CSV identical across runs and threads {{1, 4}}: {bench_ok}; generator: {gen_ok}; MOEA front: {moea_ok}"),
    )
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0 };
    let (ok, d) = criterion_1();
    gate.report("1", ok, d);
    let (ok, d) = criterion_2();
    gate.report("2", ok, d);
    let (ok, d) = criterion_3();
    gate.report("3", ok, d);
    let (ok, d) = criterion_4();
    gate.report("4", ok, d);
    let (ok, d) = criterion_5();
    gate.report("5", ok, d);
    criterion_6(&mut gate);
    let (ok, d) = criterion_7();
    gate.report("7", ok, d);
    let (ok, d) = criterion_8();
    gate.report("8", ok, d);
    if gate.failures == 0 {
        println!("acceptance: all enforced criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", gate.failures);
        ExitCode::FAILURE
    }
}
