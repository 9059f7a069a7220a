use super::dist::norm_tails;
use super::rank::midrank;
use super::{pick_tail, Alternative, Method, PMode, Result, StatsError, TestResult, AUTO_EXACT_MAX_N};

/// Upper limit on the combined size for explicit exact enumeration.
pub(crate) const EXACT_MAX_N: usize = 100;

/// Wilcoxon rank-sum (Mann-Whitney) test of `x` against `y`.
///
/// The reported statistic is the rank sum of `x` in the combined sample.
/// `Less` tests whether `x` tends to be smaller than `y`.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64], alt: Alternative, mode: PMode) -> Result<TestResult> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let m = x.len();
    let n = y.len();
    let big_n = m + n;
    let combined: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranked = midrank(&combined)?;
    let w: f64 = ranked.midranks[..m].iter().sum();

    let exact = match mode {
        PMode::Exact => true,
        PMode::Asymptotic => false,
        PMode::Auto => big_n <= AUTO_EXACT_MAX_N && !ranked.has_ties(),
    };

    if exact {
        if big_n > EXACT_MAX_N {
            return Err(StatsError::InvalidArgument(format!(
                "exact rank-sum enumeration is limited to {EXACT_MAX_N} observations"
            )));
        }
        let doubled: Vec<usize> = ranked.midranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let obs: usize = doubled[..m].iter().sum();
        let counts = subset_sum_counts(&doubled, m);
        let (less, greater) = tail_probabilities(&counts, obs);
        let p = pick_tail(alt, less, greater);
        return Ok(TestResult::new(Method::RankSumExact, w, vec![], p, alt));
    }

    let (mf, nf, nn) = (m as f64, n as f64, big_n as f64);
    let expected = mf * (nn + 1.0) / 2.0;
    let var = mf * nf / 12.0 * ((nn + 1.0) - ranked.tie_term() / (nn * (nn - 1.0)));
    let z = if var > 0.0 { (w - expected) / var.sqrt() } else { 0.0 };
    let (less, greater) = norm_tails(z);
    let mut res = TestResult::new(Method::RankSumAsymptotic, w, vec![], pick_tail(alt, less, greater), alt);
    res.z = Some(z);
    Ok(res)
}

/// Number of `k`-subsets of `items` for every attainable sum.
fn subset_sum_counts(items: &[usize], k: usize) -> Vec<u128> {
    let total: usize = items.iter().sum();
    // table[j][s] = number of j-subsets of the items seen so far with sum s
    let mut table = vec![vec![0u128; total + 1]; k + 1];
    table[0][0] = 1;
    let mut reach = 0;
    for &it in items {
        reach += it;
        for j in (1..=k).rev() {
            let (lower, upper) = table.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (it..=reach).rev() {
                let add = prev[s - it];
                if add != 0 {
                    cur[s] += add;
                }
            }
        }
    }
    table.swap_remove(k)
}

/// `(P(S ≤ obs), P(S ≥ obs))` from a table of counts indexed by sum.
pub(crate) fn tail_probabilities(counts: &[u128], obs: usize) -> (f64, f64) {
    let total: u128 = counts.iter().sum();
    let le: u128 = counts[..=obs.min(counts.len() - 1)].iter().sum();
    let ge: u128 = if obs < counts.len() { counts[obs..].iter().sum() } else { 0 };
    (le as f64 / total as f64, ge as f64 / total as f64)
}
