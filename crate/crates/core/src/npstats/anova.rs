use super::dist::{chi2_sf, f_sf, t_tails};
use super::rank::midrank;
use super::summary::{mean, median, sample_variance};
use super::{check_finite, pick_tail, Alternative, Method, Result, StatsError, TestResult};

fn check_groups<S: AsRef<[f64]>>(groups: &[S], min_len: usize) -> Result<()> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        let g = g.as_ref();
        if g.len() < min_len {
            return Err(if g.is_empty() {
                StatsError::EmptySample
            } else {
                StatsError::TooFewObservations { needed: min_len, got: g.len() }
            });
        }
        check_finite(g)?;
    }
    Ok(())
}

/// Classic one-way ANOVA F-test assuming equal variances.
pub fn anova_f<S: AsRef<[f64]>>(groups: &[S]) -> Result<TestResult> {
    check_groups(groups, 2)?;
    let k = groups.len() as f64;
    let n_total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let grand = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n_total as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        ssw += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    if ssw == 0.0 {
        return Err(StatsError::ZeroVariance("pooled within-group variance is zero"));
    }
    let df1 = k - 1.0;
    let df2 = n_total as f64 - k;
    let f = (ssb / df1) / (ssw / df2);
    Ok(TestResult::new(Method::AnovaF, f, vec![df1, df2], f_sf(f, df1, df2), Alternative::TwoSided))
}

/// Welch's heteroscedastic one-way ANOVA.
pub fn welch_anova<S: AsRef<[f64]>>(groups: &[S]) -> Result<TestResult> {
    check_groups(groups, 2)?;
    let k = groups.len() as f64;
    let mut stats = Vec::with_capacity(groups.len());
    for g in groups {
        let g = g.as_ref();
        let var = sample_variance(g);
        if var == 0.0 {
            return Err(StatsError::ZeroVariance("a group has zero variance"));
        }
        stats.push((g.len() as f64, mean(g), var));
    }
    let weights: Vec<f64> = stats.iter().map(|(n, _, v)| n / v).collect();
    let w_sum: f64 = weights.iter().sum();
    let weighted_mean = stats.iter().zip(&weights).map(|((_, m, _), w)| w * m).sum::<f64>() / w_sum;
    let a = stats
        .iter()
        .zip(&weights)
        .map(|((_, m, _), w)| w * (m - weighted_mean) * (m - weighted_mean))
        .sum::<f64>()
        / (k - 1.0);
    let lambda = stats
        .iter()
        .zip(&weights)
        .map(|((n, _, _), w)| {
            let r = 1.0 - w / w_sum;
            r * r / (n - 1.0)
        })
        .sum::<f64>();
    let b = 1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lambda;
    let f = a / b;
    let df1 = k - 1.0;
    let df2 = (k * k - 1.0) / (3.0 * lambda);
    Ok(TestResult::new(Method::WelchAnova, f, vec![df1, df2], f_sf(f, df1, df2), Alternative::TwoSided))
}

/// Absolute deviations from each group's median.
pub fn abs_median_deviations<S: AsRef<[f64]>>(groups: &[S]) -> Vec<Vec<f64>> {
    groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            let med = median(g);
            g.iter().map(|x| (x - med).abs()).collect()
        })
        .collect()
}

/// Brown-Forsythe test of equal variances: [`anova_f`] on absolute deviations
/// from the group medians.
pub fn brown_forsythe<S: AsRef<[f64]>>(groups: &[S]) -> Result<TestResult> {
    check_groups(groups, 2)?;
    let mut res = anova_f(&abs_median_deviations(groups))?;
    res.method = Method::BrownForsythe;
    Ok(res)
}

/// Two-sample Brown-Forsythe test with a direction.
///
/// The two-sided form is [`brown_forsythe`]. One-sided forms use the pooled
/// two-sample t statistic on the absolute median deviations (whose square is
/// the two-group F); `Less` tests whether `x` is less dispersed than `y`.
pub fn brown_forsythe_two_sample(x: &[f64], y: &[f64], alt: Alternative) -> Result<TestResult> {
    if alt == Alternative::TwoSided {
        return brown_forsythe(&[x, y]);
    }
    check_groups(&[x, y], 2)?;
    let dev = abs_median_deviations(&[x, y]);
    let (zx, zy) = (&dev[0], &dev[1]);
    let (m, n) = (zx.len() as f64, zy.len() as f64);
    let ss = sample_variance(zx) * (m - 1.0) + sample_variance(zy) * (n - 1.0);
    let df = m + n - 2.0;
    let pooled = ss / df;
    if pooled == 0.0 {
        return Err(StatsError::ZeroVariance("pooled within-group variance is zero"));
    }
    let t = (mean(zx) - mean(zy)) / (pooled * (1.0 / m + 1.0 / n)).sqrt();
    let (less, greater) = t_tails(t, df);
    Ok(TestResult::new(Method::BrownForsythe, t, vec![df], pick_tail(alt, less, greater), alt))
}

/// Kruskal-Wallis H test with tie correction; chi-square reference with
/// k − 1 degrees of freedom. When every value is tied, H = 0 and p = 1.
pub fn kruskal_wallis<S: AsRef<[f64]>>(groups: &[S]) -> Result<TestResult> {
    check_groups(groups, 1)?;
    let sizes: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    let n_total: usize = sizes.iter().sum();
    if n_total < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: n_total });
    }
    let combined: Vec<f64> = groups.iter().flat_map(|g| g.as_ref()).copied().collect();
    let ranked = midrank(&combined)?;
    let nf = n_total as f64;
    let df = (groups.len() - 1) as f64;
    let correction = 1.0 - ranked.tie_term() / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(TestResult::new(Method::KruskalWallis, 0.0, vec![df], 1.0, Alternative::TwoSided));
    }
    let center = (nf + 1.0) / 2.0;
    let mut offset = 0;
    let mut spread = 0.0;
    for &len in &sizes {
        let r_mean = ranked.midranks[offset..offset + len].iter().sum::<f64>() / len as f64;
        spread += len as f64 * (r_mean - center) * (r_mean - center);
        offset += len;
    }
    let h = 12.0 / (nf * (nf + 1.0)) * spread / correction;
    Ok(TestResult::new(Method::KruskalWallis, h, vec![df], chi2_sf(h, df), Alternative::TwoSided))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anova_identical_groups() {
        let r = anova_f(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn anova_shifted_groups() {
        let r = anova_f(&[[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [3.0, 4.0, 5.0]]).unwrap();
        assert!((r.statistic - 3.0).abs() < 1e-12);
        assert_eq!(r.df, vec![2.0, 6.0]);
        assert!((r.p_value - 0.125).abs() < 1e-12);
    }

    #[test]
    fn anova_rejects_singleton_group() {
        let groups: Vec<Vec<f64>> = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(matches!(anova_f(&groups), Err(StatsError::TooFewObservations { .. })));
        assert!(matches!(anova_f(&[[1.0, 1.0], [2.0, 2.0]]), Err(StatsError::ZeroVariance(_))));
    }

    #[test]
    fn welch_cases() {
        let r = welch_anova(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = welch_anova(&[[1.0, 2.0, 3.0], [10.0, 20.0, 30.0], [-5.0, 0.0, 5.0]]).unwrap();
        // statsmodels anova_oneway(..., use_var="unequal")
        assert!((r.statistic - 4.106113033448674).abs() < 1e-12);
        assert!((r.df[1] - 2.7944111776447103).abs() < 1e-12);
        assert!((r.p_value - 0.14728333580995792).abs() < 1e-12, "{}", r.p_value);
        assert!(matches!(welch_anova(&[[1.0, 1.0], [1.0, 2.0]]), Err(StatsError::ZeroVariance(_))));
    }

    #[test]
    fn brown_forsythe_is_anova_on_deviations() {
        let g = [[1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 3.0, 5.0, 7.0, 9.0]];
        let bf = brown_forsythe(&g).unwrap();
        let a = anova_f(&[[2.0, 1.0, 0.0, 1.0, 2.0], [4.0, 2.0, 0.0, 2.0, 4.0]]).unwrap();
        assert_eq!(bf.statistic, a.statistic);
        assert_eq!(bf.p_value, a.p_value);
        let same = brown_forsythe(&[[1.0, 2.0, 4.0], [1.0, 2.0, 4.0]]).unwrap();
        assert_eq!(same.statistic, 0.0);
    }

    #[test]
    fn one_sided_brown_forsythe_direction() {
        let narrow = [4.9, 5.0, 5.1, 5.0, 4.95, 5.05];
        let wide = [1.0, 9.0, 3.0, 7.0, 5.0, 2.0];
        let l = brown_forsythe_two_sample(&narrow, &wide, Alternative::Less).unwrap();
        let g = brown_forsythe_two_sample(&narrow, &wide, Alternative::Greater).unwrap();
        assert!(l.p_value < 0.01);
        assert_eq!(l.p_value + g.p_value, 1.0);
        let two = brown_forsythe_two_sample(&narrow, &wide, Alternative::TwoSided).unwrap();
        // t² = F and the two-sided t tail equals the F tail
        assert!((l.statistic * l.statistic - two.statistic).abs() < 1e-9 * two.statistic);
        assert!((2.0 * l.p_value - two.p_value).abs() < 1e-12);
    }

    #[test]
    fn kruskal_wallis_cases() {
        let r = kruskal_wallis(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert!((r.statistic - 4.571428571428571).abs() < 1e-12);
        assert!((r.p_value - chi2_sf(4.571428571428571, 2.0)).abs() < 1e-15);
        let r = kruskal_wallis(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = kruskal_wallis(&[[2.0, 2.0], [2.0, 2.0]]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let one: [[f64; 2]; 1] = [[1.0, 2.0]];
        assert_eq!(kruskal_wallis(&one), Err(StatsError::TooFewGroups(1)));
    }
}
