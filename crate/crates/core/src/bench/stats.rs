//! Summary statistics and the one-sided Wilcoxon signed-rank test.

use thiserror::Error;

/// Largest number of non-zero pairs handled with the exact null distribution.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least 5 pairs are required, got {0}")]
    TooFewPairs(usize),
    #[error("every paired difference is zero")]
    AllTied,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n_used: usize,
    /// P(W+ >= observed) under the null hypothesis.
    pub p_value: f64,
    pub exact: bool,
}

/// Average ranks of `values` (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// One-sided paired test of H1: `a` tends to exceed `b`.
///
/// Zero differences are dropped and tied magnitudes share average ranks. With
/// at most [`EXACT_LIMIT`] remaining pairs the p-value comes from the exact
/// permutation distribution of W+ (which accounts for ties); beyond that a
/// normal approximation with continuity and tie correction is used.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 5 {
        return Err(StatsError::TooFewPairs(a.len()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Err(StatsError::AllTied);
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_upper_tail(&ranks, w_plus), true)
    } else {
        (normal_upper_tail(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult {
        w_plus,
        w_minus,
        n_used: n,
        p_value,
        exact,
    })
}

/// Counts sign assignments by their doubled rank sum (average ranks are
/// multiples of 1/2, so doubling makes them integers).
fn exact_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = (2.0 * w_plus).round() as usize;
    let tail: f64 = counts[observed..].iter().sum();
    tail / 2f64.powi(ranks.len() as i32)
}

fn normal_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mu = n * (n + 1.0) / 4.0;
    // tie correction: sum of t^3 - t over groups of equal ranks
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mu - 0.5) / var.sqrt();
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_and_sample_sd() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_abs_diff_eq!(std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), 2.138089935, epsilon = 1e-9);
        assert_eq!(std_dev(&[5.0]), 0.0);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn all_positive_eleven_pairs() {
        let a: Vec<f64> = (1..=11).map(|i| i as f64 + 0.5).collect();
        let b: Vec<f64> = (1..=11).map(|i| i as f64 * 0.1).collect();
        let r = wilcoxon_one_sided(&a, &b).unwrap();
        assert!(r.exact);
        assert_eq!(r.w_plus, 66.0);
        assert_abs_diff_eq!(r.p_value, 2f64.powi(-11), epsilon = 1e-15);
        let rev = wilcoxon_one_sided(&b, &a).unwrap();
        assert_abs_diff_eq!(rev.p_value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn small_exact_table() {
        // n = 5, ranks 1..5; W+ = 13 has 3 of 32 subsets at or above it (13, 14, 15)
        let a = [1.0, -2.0, 3.0, 4.0, 5.0];
        let r = wilcoxon_one_sided(&a, &[0.0; 5]).unwrap();
        assert_eq!(r.w_plus, 13.0);
        assert_abs_diff_eq!(r.p_value, 3.0 / 32.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_differences_dropped_and_errors() {
        let r = wilcoxon_one_sided(&[1.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.n_used, 4);
        assert_eq!(wilcoxon_one_sided(&[1.0; 5], &[1.0; 5]), Err(StatsError::AllTied));
        assert_eq!(wilcoxon_one_sided(&[1.0; 4], &[0.0; 4]), Err(StatsError::TooFewPairs(4)));
        assert_eq!(wilcoxon_one_sided(&[1.0; 5], &[0.0; 6]), Err(StatsError::LengthMismatch(5, 6)));
    }

    #[test]
    fn normal_branch_close_to_exact() {
        let a: Vec<f64> = (1..=30).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect();
        let b = vec![0.0; 30];
        let approx = wilcoxon_one_sided(&a, &b).unwrap();
        assert!(!approx.exact);
        let magnitudes: Vec<f64> = a.iter().map(|x| x.abs()).collect();
        let exact = exact_upper_tail(&average_ranks(&magnitudes), approx.w_plus);
        assert!((approx.p_value - exact).abs() < 0.01, "{} vs {exact}", approx.p_value);
    }
}
