use super::dist::t_tails;
use super::summary::{mean, sample_variance};
use super::{check_finite, pick_tail, Alternative, Method, Result, StatsError, TestResult};

/// Welch's unequal-variance t-test. `Less` tests `mean(x) < mean(y)`.
pub fn t_test(x: &[f64], y: &[f64], alt: Alternative) -> Result<TestResult> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (m, n) = (x.len() as f64, y.len() as f64);
    let a = sample_variance(x) / m;
    let b = sample_variance(y) / n;
    if a + b == 0.0 {
        return Err(StatsError::ZeroVariance("both samples are constant"));
    }
    let t = (mean(x) - mean(y)) / (a + b).sqrt();
    let df = (a + b) * (a + b) / (a * a / (m - 1.0) + b * b / (n - 1.0));
    let (less, greater) = t_tails(t, df);
    Ok(TestResult::new(Method::WelchT, t, vec![df], pick_tail(alt, less, greater), alt))
}

/// One-sample t-test of the paired differences against zero.
pub fn paired_t(diffs: &[f64], alt: Alternative) -> Result<TestResult> {
    if diffs.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: diffs.len() });
    }
    check_finite(diffs)?;
    let n = diffs.len() as f64;
    let var = sample_variance(diffs);
    if var == 0.0 {
        return Err(StatsError::ZeroVariance("differences are constant"));
    }
    let t = mean(diffs) / (var / n).sqrt();
    let df = n - 1.0;
    let (less, greater) = t_tails(t, df);
    Ok(TestResult::new(Method::PairedT, t, vec![df], pick_tail(alt, less, greater), alt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_samples() {
        let r = t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0], Alternative::TwoSided).unwrap();
        assert!((r.statistic + 1.224744871391589).abs() < 1e-12);
        assert!((r.df[0] - 4.0).abs() < 1e-12);
        // scipy.stats.ttest_ind(..., equal_var=False).pvalue
        assert!((r.p_value - 0.2878641347266908).abs() < 1e-12);
    }

    #[test]
    fn one_sided_tails_sum_to_one() {
        let x = [0.3, 1.9, 2.2, 5.1];
        let y = [1.0, 1.1, 4.4];
        let l = t_test(&x, &y, Alternative::Less).unwrap();
        let g = t_test(&x, &y, Alternative::Greater).unwrap();
        assert_eq!(l.p_value + g.p_value, 1.0);
    }

    #[test]
    fn constant_samples_rejected() {
        assert!(matches!(t_test(&[2.0, 2.0], &[3.0, 3.0], Alternative::TwoSided), Err(StatsError::ZeroVariance(_))));
        // a single constant sample is fine
        assert!(t_test(&[2.0, 2.0], &[3.0, 4.0], Alternative::TwoSided).is_ok());
    }

    #[test]
    fn paired_cases() {
        let r = paired_t(&[-1.0, 0.0, 1.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = paired_t(&[1.0, 2.0, 3.0], Alternative::TwoSided).unwrap();
        assert!((r.statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, vec![2.0]);
        assert!(matches!(paired_t(&[5.0, 5.0], Alternative::TwoSided), Err(StatsError::ZeroVariance(_))));
    }
}
