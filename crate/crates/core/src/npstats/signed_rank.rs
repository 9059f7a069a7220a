use super::dist::norm_tails;
use super::rank::midrank;
use super::wilcoxon::{tail_probabilities, EXACT_MAX_N};
use super::{check_finite, pick_tail, Alternative, Method, PMode, Result, StatsError, TestResult, AUTO_EXACT_MAX_N};

/// Wilcoxon signed-rank test on paired differences.
///
/// Zero differences are dropped before ranking. The statistic is the sum of
/// the ranks of the positive differences; `Greater` tests whether the
/// differences tend to be positive.
pub fn wilcoxon_signed_rank(diffs: &[f64], alt: Alternative, mode: PMode) -> Result<TestResult> {
    if diffs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(diffs)?;
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(StatsError::AllZero);
    }
    let n = nonzero.len();
    let mags: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranked = midrank(&mags)?;
    let v: f64 = nonzero
        .iter()
        .zip(&ranked.midranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let exact = match mode {
        PMode::Exact => true,
        PMode::Asymptotic => false,
        PMode::Auto => n <= AUTO_EXACT_MAX_N && !ranked.has_ties(),
    };

    if exact {
        if n > EXACT_MAX_N {
            return Err(StatsError::InvalidArgument(format!(
                "exact signed-rank enumeration is limited to {EXACT_MAX_N} differences"
            )));
        }
        let doubled: Vec<usize> = ranked.midranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let obs = (2.0 * v).round() as usize;
        let counts = sign_sum_counts(&doubled);
        let (less, greater) = tail_probabilities(&counts, obs);
        return Ok(TestResult::new(Method::SignedRankExact, v, vec![], pick_tail(alt, less, greater), alt));
    }

    let nf = n as f64;
    let expected = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ranked.tie_term() / 48.0;
    let z = if var > 0.0 { (v - expected) / var.sqrt() } else { 0.0 };
    let (less, greater) = norm_tails(z);
    let mut res = TestResult::new(Method::SignedRankAsymptotic, v, vec![], pick_tail(alt, less, greater), alt);
    res.z = Some(z);
    Ok(res)
}

/// Number of sign assignments for each attainable positive-rank sum.
fn sign_sum_counts(items: &[usize]) -> Vec<u128> {
    let total: usize = items.iter().sum();
    let mut counts = vec![0u128; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &it in items {
        reach += it;
        for s in (it..=reach).rev() {
            counts[s] += counts[s - it];
        }
    }
    counts
}
