//! Hypothesis tests used by the pooled-distance pipeline and the Monte Carlo
//! harness.
//!
//! Every test returns a [`TestResult`]. Rank tests expose both an exact and an
//! asymptotic route; the asymptotic normal approximations deliberately omit
//! the continuity correction so that the two one-sided p-values of a rank-sum
//! test are exact complements.

mod adjust;
mod anova;
mod correlation;
pub mod dist;
mod ks;
mod rank;
mod signed_rank;
mod summary;
mod ttest;
mod wilcoxon;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adjust::{bonferroni_adjust, holm_adjust};
pub use anova::{
    abs_median_deviations, anova_f, brown_forsythe, brown_forsythe_two_sample, kruskal_wallis,
    welch_anova,
};
pub use correlation::{pearson, spearman};
pub use ks::{ks_statistics, ks_two_sample, lilliefors, lilliefors_statistic, KsStatistics};
pub use rank::{midrank, RankedSample};
pub use signed_rank::wilcoxon_signed_rank;
pub use summary::{mean, median, quantile, sample_variance};
pub use ttest::{paired_t, t_test};
pub use wilcoxon::wilcoxon_rank_sum;

/// Direction of the alternative hypothesis.
///
/// `Less` means the first sample tends to be smaller than the second (the
/// `(ℓ)` annotation in pairwise tables); `Greater` the opposite. For the
/// Kolmogorov-Smirnov test the direction refers to the empirical cdfs instead,
/// see [`ks_two_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum Alternative {
    TwoSided,
    Less,
    Greater,
}

impl Alternative {
    pub fn short(self) -> &'static str {
        match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Less => "l",
            Alternative::Greater => "g",
        }
    }
}

/// How rank-test p-values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub enum PMode {
    /// Enumerate the permutation distribution.
    Exact,
    /// Normal approximation with tie-corrected variance, no continuity correction.
    Asymptotic,
    /// Exact for small tie-free inputs (n ≤ 20), asymptotic otherwise.
    Auto,
}

/// Largest total sample size for which [`PMode::Auto`] enumerates.
pub const AUTO_EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum Method {
    RankSumExact,
    RankSumAsymptotic,
    SignedRankExact,
    SignedRankAsymptotic,
    KruskalWallis,
    AnovaF,
    WelchAnova,
    WelchT,
    PairedT,
    BrownForsythe,
    KolmogorovSmirnov,
    Lilliefors,
    Spearman,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::RankSumExact => "wilcoxon-rank-sum-exact",
            Method::RankSumAsymptotic => "wilcoxon-rank-sum",
            Method::SignedRankExact => "wilcoxon-signed-rank-exact",
            Method::SignedRankAsymptotic => "wilcoxon-signed-rank",
            Method::KruskalWallis => "kruskal-wallis",
            Method::AnovaF => "anova-f",
            Method::WelchAnova => "welch-anova",
            Method::WelchT => "welch-t",
            Method::PairedT => "paired-t",
            Method::BrownForsythe => "brown-forsythe",
            Method::KolmogorovSmirnov => "kolmogorov-smirnov",
            Method::Lilliefors => "lilliefors",
            Method::Spearman => "spearman",
        }
    }
}

/// Outcome of a single test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TestResult {
    pub method: Method,
    /// Rank sum of the first sample for rank-sum tests, sum of positive ranks
    /// for signed-rank tests, otherwise the usual statistic (H, F, t, D, ρ).
    pub statistic: f64,
    /// Degrees of freedom; empty when not applicable, two entries for F.
    pub df: Vec<f64>,
    pub p_value: f64,
    pub alternative: Alternative,
    /// Standardized normal score for asymptotic rank tests.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<f64>,
}

impl TestResult {
    pub(crate) fn new(
        method: Method,
        statistic: f64,
        df: Vec<f64>,
        p_value: f64,
        alternative: Alternative,
    ) -> Self {
        TestResult {
            method,
            statistic,
            df,
            p_value: p_value.clamp(0.0, 1.0),
            alternative,
            z: None,
        }
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("all differences are zero")]
    AllZero,
    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),
    #[error("sample lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;

pub(crate) fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// One-sided tails from a continuous statistic whose lower tail is `lower`
/// and upper tail `upper`, where only the smaller of the two is computed
/// directly. The other is its complement, so `less + greater == 1`.
pub(crate) fn complementary_tails(lower_small: bool, small_tail: f64) -> (f64, f64) {
    if lower_small {
        (small_tail, 1.0 - small_tail)
    } else {
        (1.0 - small_tail, small_tail)
    }
}

/// Combines one-sided tails into the requested p-value.
pub(crate) fn pick_tail(alt: Alternative, less: f64, greater: f64) -> f64 {
    match alt {
        Alternative::Less => less,
        Alternative::Greater => greater,
        Alternative::TwoSided => (2.0 * less.min(greater)).min(1.0),
    }
}
