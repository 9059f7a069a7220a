use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::dist::{kolmogorov_sf, norm_cdf};
use super::summary::{mean, sample_variance};
use super::{check_finite, Alternative, Method, Result, StatsError, TestResult};

/// Two-sample Kolmogorov-Smirnov distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsStatistics {
    /// `sup |F̂x − F̂y|`
    pub d: f64,
    /// `sup (F̂x − F̂y)`
    pub d_plus: f64,
    /// `sup (F̂y − F̂x)`
    pub d_minus: f64,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn ks_statistics(x: &[f64], y: &[f64]) -> Result<KsStatistics> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(x)?;
    check_finite(y)?;
    let (xs, ys) = (sorted(x), sorted(y));
    let (m, n) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let (mut d_plus, mut d_minus) = (0.0f64, 0.0f64);
    while i < m && j < n {
        let t = xs[i].min(ys[j]);
        while i < m && xs[i] == t {
            i += 1;
        }
        while j < n && ys[j] == t {
            j += 1;
        }
        let diff = i as f64 / m as f64 - j as f64 / n as f64;
        d_plus = d_plus.max(diff);
        d_minus = d_minus.max(-diff);
    }
    Ok(KsStatistics { d: d_plus.max(d_minus), d_plus, d_minus })
}

/// Two-sample Kolmogorov-Smirnov test with asymptotic p-values.
///
/// The one-sided forms compare the empirical cdfs: `Greater` uses
/// `D⁺ = sup(F̂x − F̂y)`, so a significant `Greater` result says the cdf of
/// `x` lies above that of `y`, i.e. `x` is stochastically smaller. `Less` is
/// the mirror image. One-sided p-values are `exp(−2 D² mn/(m+n))`; the
/// two-sided p-value comes from the Kolmogorov limiting distribution.
pub fn ks_two_sample(x: &[f64], y: &[f64], alt: Alternative) -> Result<TestResult> {
    let s = ks_statistics(x, y)?;
    let (m, n) = (x.len() as f64, y.len() as f64);
    let en = m * n / (m + n);
    let (stat, p) = match alt {
        Alternative::TwoSided => (s.d, kolmogorov_sf(s.d * en.sqrt())),
        Alternative::Greater => (s.d_plus, (-2.0 * s.d_plus * s.d_plus * en).exp()),
        Alternative::Less => (s.d_minus, (-2.0 * s.d_minus * s.d_minus * en).exp()),
    };
    Ok(TestResult::new(Method::KolmogorovSmirnov, stat, vec![], p, alt))
}

/// KS distance between the empirical cdf of `x` and the normal cdf with the
/// sample mean and standard deviation.
pub fn lilliefors_statistic(x: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(StatsError::TooFewObservations { needed: 4, got: x.len() });
    }
    check_finite(x)?;
    let var = sample_variance(x);
    if var == 0.0 {
        return Err(StatsError::ZeroVariance("sample is constant"));
    }
    Ok(normal_fit_distance(x, mean(x), var.sqrt()))
}

fn normal_fit_distance(x: &[f64], mu: f64, sd: f64) -> f64 {
    let xs = sorted(x);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = norm_cdf((xs[i] - mu) / sd);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    d
}

/// Lilliefors test of normality. The p-value is estimated by simulating
/// `replicates` standard-normal samples of the same size (the statistic is
/// location/scale invariant) and is `(1 + #{D* ≥ D}) / (replicates + 1)`.
/// Replicate `r` draws from its own stream of a ChaCha generator keyed by
/// `seed`, so the result does not depend on thread scheduling.
pub fn lilliefors(x: &[f64], replicates: usize, seed: u64) -> Result<TestResult> {
    if replicates == 0 {
        return Err(StatsError::InvalidArgument("replicates must be positive".into()));
    }
    let d = lilliefors_statistic(x)?;
    let n = x.len();
    let exceed: usize = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let sim: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let sd = sample_variance(&sim).sqrt();
            usize::from(normal_fit_distance(&sim, mean(&sim), sd) >= d)
        })
        .sum();
    let p = (1 + exceed) as f64 / (replicates + 1) as f64;
    Ok(TestResult::new(Method::Lilliefors, d, vec![], p, Alternative::TwoSided))
}
