//! Fault-detection and redundancy metrics for a prioritized order.
//!
//! All metrics treat fault severity as 1. Positions are 1-based: `TF_i` is the
//! slot of the first test revealing fault `i`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{CoverageIndex, EntityKind, TestSuite};
use crate::ordering::Ordering;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("fault oracle has no faults")]
    NoFaults,
    #[error("fault `{0}` has no revealing test")]
    EmptyFault(String),
    #[error("fault `{fault}` references unknown test `{test}`")]
    UnknownTest { fault: String, test: String },
    #[error("fault `{0}` listed more than once")]
    DuplicateFault(String),
    #[error("order has {order} tests but {what} has {other}")]
    LengthMismatch {
        order: usize,
        what: &'static str,
        other: usize,
    },
    #[error("cost of test {index} must be positive, got {value}")]
    NonPositiveCost { index: usize, value: f64 },
    #[error("prefix must contain at least one test")]
    EmptyPrefix,
    #[error("prefix entry {0} is out of range or repeated")]
    InvalidPrefix(usize),
    #[error("no functions are covered by any test")]
    NoFunctions,
    #[error("invalid oracle document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub id: String,
    /// Suite indices of the tests that fail because of this fault, ascending.
    pub revealing: Vec<usize>,
}

/// Ground truth: which tests reveal which fault. Used for evaluation only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultOracle {
    n_tests: usize,
    faults: Vec<Fault>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleDocument {
    faults: Vec<FaultDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultDocument {
    id: String,
    failing_tests: Vec<String>,
}

impl FaultOracle {
    /// Oracle over a suite of `n_tests`; an empty fault list is allowed here and
    /// rejected by the metric functions.
    pub fn new(n_tests: usize, faults: Vec<Fault>) -> Result<Self, MetricError> {
        let mut ids = HashSet::new();
        let mut cleaned = Vec::with_capacity(faults.len());
        for mut f in faults {
            if !ids.insert(f.id.clone()) {
                return Err(MetricError::DuplicateFault(f.id));
            }
            if f.revealing.is_empty() {
                return Err(MetricError::EmptyFault(f.id));
            }
            if let Some(&bad) = f.revealing.iter().find(|&&t| t >= n_tests) {
                return Err(MetricError::UnknownTest {
                    fault: f.id,
                    test: format!("#{bad}"),
                });
            }
            f.revealing.sort_unstable();
            f.revealing.dedup();
            cleaned.push(f);
        }
        Ok(Self {
            n_tests,
            faults: cleaned,
        })
    }

    pub fn from_json(text: &str, suite: &TestSuite) -> Result<Self, MetricError> {
        let doc: OracleDocument =
            serde_json::from_str(text).map_err(|e| MetricError::Document(e.to_string()))?;
        let index = suite.id_index();
        let faults = doc
            .faults
            .into_iter()
            .map(|f| {
                let revealing = f
                    .failing_tests
                    .iter()
                    .map(|t| {
                        index.get(t.as_str()).copied().ok_or_else(|| MetricError::UnknownTest {
                            fault: f.id.clone(),
                            test: t.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Fault { id: f.id, revealing })
            })
            .collect::<Result<Vec<_>, MetricError>>()?;
        Self::new(suite.len(), faults)
    }

    pub fn to_json(&self, suite: &TestSuite) -> String {
        let ids = suite.ids();
        let doc = OracleDocument {
            faults: self
                .faults
                .iter()
                .map(|f| FaultDocument {
                    id: f.id.clone(),
                    failing_tests: f.revealing.iter().map(|&t| ids[t].to_string()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("oracle serializes")
    }

    pub fn n_tests(&self) -> usize {
        self.n_tests
    }

    pub fn faults(&self) -> &[Fault] {
        &self.faults
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    fn check(&self, order_len: usize) -> Result<(), MetricError> {
        if self.faults.is_empty() {
            return Err(MetricError::NoFaults);
        }
        if order_len != self.n_tests {
            return Err(MetricError::LengthMismatch {
                order: order_len,
                what: "fault oracle",
                other: self.n_tests,
            });
        }
        Ok(())
    }

    /// 1-based first-reveal slot of every fault in `order`.
    pub fn first_reveal_positions(&self, order: &Ordering) -> Result<Vec<usize>, MetricError> {
        self.check(order.len())?;
        let pos = order.positions();
        Ok(self
            .faults
            .iter()
            .map(|f| f.revealing.iter().map(|&t| pos[t]).min().expect("non-empty") + 1)
            .collect())
    }
}

/// `1 - sum/(n·m) + 1/(2n)`, shared by APFD and the coverage fitness functions.
pub(crate) fn apfd_formula<T: Scalar>(position_sum: usize, n: usize, m: usize) -> T {
    T::one() - T::from_count(position_sum) / T::from_count(n * m) + T::one() / T::from_count(2 * n)
}

/// Average percentage of faults detected.
pub fn apfd<T: Scalar>(order: &Ordering, oracle: &FaultOracle) -> Result<T, MetricError> {
    let tf = oracle.first_reveal_positions(order)?;
    Ok(apfd_formula(tf.iter().sum(), order.len(), tf.len()))
}

/// Cost-cognizant APFD. `costs` is indexed by suite position; the `t_i` of the
/// formula are these costs re-read in prioritized order.
pub fn apfdc<T: Scalar>(order: &Ordering, oracle: &FaultOracle, costs: &[T]) -> Result<T, MetricError> {
    if costs.len() != order.len() {
        return Err(MetricError::LengthMismatch {
            order: order.len(),
            what: "cost list",
            other: costs.len(),
        });
    }
    if let Some((i, c)) = costs.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > T::zero())) {
        return Err(MetricError::NonPositiveCost {
            index: i,
            value: c.to_f64().unwrap_or(f64::NAN),
        });
    }
    let tf = oracle.first_reveal_positions(order)?;
    let n = order.len();
    // suffix[s] = sum of ordered costs from slot s to the end
    let mut suffix = vec![T::zero(); n + 1];
    for s in (0..n).rev() {
        suffix[s] = suffix[s + 1] + costs[order.as_slice()[s]];
    }
    let half = T::half();
    let numerator = tf.iter().fold(T::zero(), |acc, &p| {
        let slot = p - 1;
        acc + suffix[slot] - half * costs[order.as_slice()[slot]]
    });
    Ok(numerator / (suffix[0] * T::from_count(tf.len())))
}

/// Normalized APFD of an executed prefix. Faults the prefix misses add
/// nothing to the position sum; `n` is the prefix length.
pub fn napfd<T: Scalar>(prefix: &[usize], oracle: &FaultOracle) -> Result<T, MetricError> {
    if oracle.is_empty() {
        return Err(MetricError::NoFaults);
    }
    let k = prefix.len();
    if k == 0 {
        return Err(MetricError::EmptyPrefix);
    }
    let mut slot = vec![usize::MAX; oracle.n_tests()];
    for (s, &t) in prefix.iter().enumerate() {
        if t >= oracle.n_tests() || slot[t] != usize::MAX {
            return Err(MetricError::InvalidPrefix(t));
        }
        slot[t] = s;
    }
    let m = oracle.len();
    let mut detected = 0usize;
    let mut sum = 0usize;
    for f in oracle.faults() {
        if let Some(first) = f.revealing.iter().map(|&t| slot[t]).min().filter(|&s| s != usize::MAX) {
            detected += 1;
            sum += first + 1;
        }
    }
    let p = T::from_count(detected) / T::from_count(m);
    Ok(p - T::from_count(sum) / T::from_count(k * m) + p / T::from_count(2 * k))
}

/// Prefix length used for a NAPFD budget expressed as a percentage of the suite:
/// `ceil(percent·n/100)`, clamped to `1..=n`.
pub fn prefix_len(n: usize, percent: f64) -> usize {
    let k = (percent * n as f64 / 100.0 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

pub fn napfd_at<T: Scalar>(order: &Ordering, percent: f64, oracle: &FaultOracle) -> Result<T, MetricError> {
    napfd(&order.as_slice()[..prefix_len(order.len(), percent)], oracle)
}

/// Denominator of the minimal-tests-for-fault-detection ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MtfdDenominator {
    /// Fraction of the suite executed: `max TF / n`.
    #[default]
    SuiteSize,
    /// Literal `max TF / m` form, kept for comparison with published tables.
    FaultCount,
}

pub fn mtfd<T: Scalar>(order: &Ordering, oracle: &FaultOracle, denom: MtfdDenominator) -> Result<T, MetricError> {
    let tf = oracle.first_reveal_positions(order)?;
    let max = *tf.iter().max().expect("oracle non-empty");
    let d = match denom {
        MtfdDenominator::SuiteSize => order.len(),
        MtfdDenominator::FaultCount => tf.len(),
    };
    Ok(T::from_count(max) / T::from_count(d))
}

/// Function duplication rate. `functions[t]` is the function set of suite test `t`.
///
/// With `k` the shortest prefix covering every function, returns the duplicated
/// function count within that prefix over the duplicated count of the whole
/// suite. A suite with no duplication at all scores 0.
pub fn fdr<T: Scalar, K: Ord>(order: &Ordering, functions: &[BTreeSet<K>]) -> Result<T, MetricError> {
    if functions.len() != order.len() {
        return Err(MetricError::LengthMismatch {
            order: order.len(),
            what: "function list",
            other: functions.len(),
        });
    }
    let total: BTreeSet<&K> = functions.iter().flatten().collect();
    if total.is_empty() {
        return Err(MetricError::NoFunctions);
    }
    let total_size: usize = functions.iter().map(BTreeSet::len).sum();
    let denominator = total_size - total.len();
    if denominator == 0 {
        log::warn!("no function is covered twice; FDR defined as 0");
        return Ok(T::zero());
    }
    let mut seen: BTreeSet<&K> = BTreeSet::new();
    let mut sizes = 0usize;
    for &t in order.as_slice() {
        sizes += functions[t].len();
        seen.extend(functions[t].iter());
        if seen.len() == total.len() {
            break;
        }
    }
    Ok(T::from_count(sizes - seen.len()) / T::from_count(denominator))
}

/// Per-test function sets keyed by entity index of `kind`. Sibling groups are
/// the default notion of "function".
pub fn function_sets(index: &CoverageIndex, kind: EntityKind) -> Vec<BTreeSet<usize>> {
    (0..index.n_tests())
        .map(|t| index.row(kind, t).iter().collect())
        .collect()
}

/// Flat metric record written by `evaluate`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub apfd: f64,
    pub apfdc: f64,
    /// `(percent, value)` pairs.
    pub napfd: Vec<(f64, f64)>,
    pub mtfd: f64,
    pub fdr: f64,
    pub objectives: Option<[f64; 4]>,
}

/// Settings for [`evaluate_all`].
#[derive(Debug, Clone)]
pub struct MetricOptions {
    pub napfd_percents: Vec<f64>,
    pub mtfd: MtfdDenominator,
    pub function_kind: EntityKind,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            napfd_percents: vec![10.0],
            mtfd: MtfdDenominator::SuiteSize,
            function_kind: EntityKind::Sibling,
        }
    }
}

/// Every metric for one order.
pub fn evaluate_all(
    order: &Ordering,
    suite: &TestSuite,
    index: &CoverageIndex,
    oracle: &FaultOracle,
    opts: &MetricOptions,
) -> Result<MetricReport, MetricError> {
    let napfd = opts
        .napfd_percents
        .iter()
        .map(|&p| napfd_at::<f64>(order, p, oracle).map(|v| (p, v)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricReport {
        apfd: apfd(order, oracle)?,
        apfdc: apfdc(order, oracle, &suite.costs())?,
        napfd,
        mtfd: mtfd(order, oracle, opts.mtfd)?,
        fdr: fdr(order, &function_sets(index, opts.function_kind))?,
        objectives: None,
    })
}

fn percent_label(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        let s = format!("{p:.6}");
        s.trim_end_matches('0').to_string()
    }
}

impl MetricReport {
    /// `{"apfd":…,"apfdc":…,"napfd@10":…,"mtfd":…,"fdr":…}`, six decimals each.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{");
        let _ = write!(out, "\"apfd\":{:.6},\"apfdc\":{:.6}", self.apfd, self.apfdc);
        for (p, v) in &self.napfd {
            let _ = write!(out, ",\"napfd@{}\":{:.6}", percent_label(*p), v);
        }
        let _ = write!(out, ",\"mtfd\":{:.6},\"fdr\":{:.6}", self.mtfd, self.fdr);
        if let Some(o) = &self.objectives {
            let _ = write!(
                out,
                ",\"objectives\":{{\"seg\":{:.6},\"sib\":{:.6},\"type\":{:.6},\"obj\":{:.6}}}",
                o[0], o[1], o[2], o[3]
            );
        }
        out.push('}');
        out
    }
}
