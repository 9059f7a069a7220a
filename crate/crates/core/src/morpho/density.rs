use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{MorphoError, Result};
use crate::npstats::{median, quantile, sample_variance};

/// Kernel bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema, Default)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    /// `0.9 · min(sd, IQR/1.34) · n^(-1/5)`.
    #[default]
    Silverman,
    /// Fixed bandwidth in mm.
    Fixed(f64),
}

impl FromStr for Bandwidth {
    type Err = MorphoError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("silverman") || s.eq_ignore_ascii_case("auto") {
            return Ok(Bandwidth::Silverman);
        }
        let h: f64 = s.parse().map_err(|_| MorphoError::Invalid(format!("bandwidth {s:?} is neither 'silverman' nor a number")))?;
        if !(h.is_finite() && h > 0.0) {
            return Err(MorphoError::InvalidBandwidth(h));
        }
        Ok(Bandwidth::Fixed(h))
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Silverman => f.write_str("silverman"),
            Bandwidth::Fixed(h) => write!(f, "{h}"),
        }
    }
}

/// Evaluation grid for densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum GridSpec {
    /// From four bandwidths below the smallest value to four above the largest.
    Auto { points: usize },
    /// Evenly spaced points from `lo` to `hi` inclusive.
    Range { lo: f64, hi: f64, points: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto { points: 512 }
    }
}

impl GridSpec {
    fn build(self, data_lo: f64, data_hi: f64, h: f64) -> Result<Vec<f64>> {
        let (lo, hi, points) = match self {
            GridSpec::Auto { points } => (data_lo - 4.0 * h, data_hi + 4.0 * h, points),
            GridSpec::Range { lo, hi, points } => (lo, hi, points),
        };
        if points < 2 {
            return Err(MorphoError::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(MorphoError::InvalidGrid(format!("bad range [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (points - 1) as f64;
        Ok((0..points).map(|i| if i == points - 1 { hi } else { lo + i as f64 * step }).collect())
    }
}

/// A density sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl Density {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2).zip(values.windows(2)).map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1])).sum()
}

/// Silverman's rule-of-thumb bandwidth. Falls back to the standard deviation
/// alone when the IQR is zero.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(MorphoError::TooFewValues { needed: 2, got: sample.len() });
    }
    let sd = sample_variance(sample).sqrt();
    if !(sd > 0.0) {
        return Err(MorphoError::ZeroSpread);
    }
    let iqr = quantile(sample, 0.75) - quantile(sample, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (sample.len() as f64).powf(-0.2))
}

fn resolve(bw: Bandwidth, sample: &[f64]) -> Result<f64> {
    match bw {
        Bandwidth::Silverman => silverman_bandwidth(sample),
        Bandwidth::Fixed(h) if h.is_finite() && h > 0.0 => Ok(h),
        Bandwidth::Fixed(h) => Err(MorphoError::InvalidBandwidth(h)),
    }
}

/// Kernel mass beyond this many bandwidths is below 1e-14 and skipped.
const KERNEL_REACH: f64 = 8.0;

/// Unnormalized Gaussian kernel sums `Σ exp(-((g - x)/h)²/2)` at every grid
/// point; `sorted` must be ascending.
fn kernel_sums(sorted: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    grid.par_iter()
        .map(|&g| {
            let lo = sorted.partition_point(|&x| x < g - KERNEL_REACH * h);
            let hi = sorted.partition_point(|&x| x <= g + KERNEL_REACH * h);
            sorted[lo..hi]
                .iter()
                .map(|&x| {
                    let u = (g - x) / h;
                    (-0.5 * u * u).exp()
                })
                .sum()
        })
        .collect()
}

fn sorted_copy(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(crate::npstats::StatsError::NonFinite.into());
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Gaussian kernel density estimate.
pub fn kde(sample: &[f64], bandwidth: Bandwidth, grid: GridSpec) -> Result<Density> {
    if sample.len() < 2 {
        return Err(MorphoError::TooFewValues { needed: 2, got: sample.len() });
    }
    let sorted = sorted_copy(sample)?;
    let h = resolve(bandwidth, &sorted)?;
    let grid = grid.build(sorted[0], sorted[sorted.len() - 1], h)?;
    Ok(kde_sorted(&sorted, h, grid))
}

/// Gaussian kernel density estimate with bandwidth `h` on an explicit grid.
pub fn kde_on_grid(sample: &[f64], h: f64, grid: Vec<f64>) -> Result<Density> {
    if sample.is_empty() {
        return Err(MorphoError::EmptySample);
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(MorphoError::InvalidBandwidth(h));
    }
    Ok(kde_sorted(&sorted_copy(sample)?, h, grid))
}

fn kde_sorted(sorted: &[f64], h: f64, grid: Vec<f64>) -> Density {
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * PI).sqrt());
    let values = kernel_sums(sorted, &grid, h).into_iter().map(|s| s * norm).collect();
    Density { grid, values, bandwidth: h }
}

/// Right-continuous empirical cdf of `sample` evaluated at each grid point.
pub fn empirical_cdf(sample: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(MorphoError::EmptySample);
    }
    let sorted = sorted_copy(sample)?;
    let n = sorted.len() as f64;
    Ok(grid.iter().map(|&g| sorted.partition_point(|&x| x <= g) as f64 / n).collect())
}

/// How the outlier cut-off is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum OutlierThreshold {
    /// Multiple of the median score within the group.
    MedianMultiple(f64),
    /// Fixed L1 distance.
    Absolute(f64),
}

impl Default for OutlierThreshold {
    fn default() -> Self {
        OutlierThreshold::MedianMultiple(1.5)
    }
}

impl FromStr for OutlierThreshold {
    type Err = MorphoError;

    /// `"2.0x"` is a median multiple, a bare number an absolute cut-off.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || MorphoError::Invalid(format!("outlier threshold {s:?} is not a number or a multiple like 1.5x"));
        let t = s.trim();
        if let Some(m) = t.strip_suffix(['x', 'X']) {
            let v: f64 = m.parse().map_err(|_| bad())?;
            if v.is_nan() || v < 0.0 {
                return Err(bad());
            }
            Ok(OutlierThreshold::MedianMultiple(v))
        } else {
            let v: f64 = t.parse().map_err(|_| bad())?;
            if v.is_nan() || v < 0.0 {
                return Err(bad());
            }
            Ok(OutlierThreshold::Absolute(v))
        }
    }
}

/// Scores at or below this L1 distance count as no difference at all.
pub const MIN_OUTLIER_SCORE: f64 = 1e-9;

/// Outlier screening outcome for one group and hemisphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierScores {
    pub subject_ids: Vec<String>,
    /// L1 distance between each subject's density and the density of the
    /// other subjects pooled.
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub flagged: Vec<String>,
    pub bandwidth: f64,
}

/// Scores each subject by the L1 distance between its kernel density and
/// that of the remaining subjects pooled, on a grid common to the group. All
/// densities share the bandwidth chosen for the whole group, which makes the
/// leave-one-out density an exact linear combination of per-subject kernel
/// sums.
pub fn flag_outliers(
    subjects: &[(String, &[f64])],
    bandwidth: Bandwidth,
    threshold: OutlierThreshold,
) -> Result<OutlierScores> {
    if subjects.len() < 3 {
        return Err(MorphoError::TooFewSubjects { needed: 3, got: subjects.len() });
    }
    if let Some((_, s)) = subjects.iter().find(|(_, s)| s.is_empty()) {
        return Err(MorphoError::TooFewValues { needed: 1, got: s.len() });
    }
    let pooled: Vec<f64> = subjects.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    let pooled = sorted_copy(&pooled)?;
    let h = resolve(bandwidth, &pooled)?;
    let grid = GridSpec::default().build(pooled[0], pooled[pooled.len() - 1], h)?;
    let sums: Vec<Vec<f64>> = subjects
        .iter()
        .map(|(_, s)| sorted_copy(s).map(|sorted| kernel_sums(&sorted, &grid, h)))
        .collect::<Result<_>>()?;
    let total: Vec<f64> = (0..grid.len()).map(|g| sums.iter().map(|s| s[g]).sum()).collect();
    let c = 1.0 / (h * (2.0 * PI).sqrt());
    let big_n = pooled.len() as f64;
    let scores: Vec<f64> = subjects
        .iter()
        .zip(&sums)
        .map(|((_, s), own)| {
            let n = s.len() as f64;
            let diff: Vec<f64> = own
                .iter()
                .zip(&total)
                .map(|(&o, &t)| (c * o / n - c * (t - o) / (big_n - n)).abs())
                .collect();
            trapezoid(&grid, &diff)
        })
        .collect();
    let cut = match threshold {
        OutlierThreshold::MedianMultiple(m) => m * median(&scores),
        OutlierThreshold::Absolute(t) => t,
    };
    let flagged = subjects
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s > cut && s > MIN_OUTLIER_SCORE)
        .map(|((id, _), _)| id.clone())
        .collect();
    Ok(OutlierScores {
        subject_ids: subjects.iter().map(|(id, _)| id.clone()).collect(),
        scores,
        threshold: cut,
        flagged,
        bandwidth: h,
    })
}
