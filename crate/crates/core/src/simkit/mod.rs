//! Synthetic LCDM-like distance samples and Monte Carlo size/power studies.
//!
//! Distances are drawn by picking a 0.5 mm bin `i` with probability
//! proportional to a frequency profile and adding `U(0, r)/2` within the bin.
//! Alternatives perturb the profile by `η` (spilling mass into a thirteenth
//! bin) and stretch the within-bin spread through `r`.

mod study;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use study::{
    replicate_rng, run_power_study, run_size_study, run_study, Agreement, Direction, Estimate, EstimateRow,
    EstimateTable, ProfileSpec, SimConfig, StudyKind, TestKind, SEED_RULE,
};

/// Reference bin frequencies of the synthetic distance profile.
pub const REFERENCE_NU: [u64; 12] = [2059, 1898, 1764, 1670, 1492, 1268, 814, 417, 142, 81, 61, 16];

/// Variant of the profile with 1469 in the fifth bin; its entries add up to
/// [`REFERENCE_TOTAL`].
pub const VARIANT_NU: [u64; 12] = [2059, 1898, 1764, 1670, 1469, 1268, 814, 417, 142, 81, 61, 16];

/// Reference total used for the pmf and the overflow bin.
pub const REFERENCE_TOTAL: u64 = 11659;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("profile must have 12 bins, got {0}")]
    ProfileLength(usize),
    #[error("profile has zero total frequency")]
    EmptyProfile,
    #[error("negative overflow bin: eta = {eta} leaves {value} for the 13th bin")]
    NegativeOverflow { eta: u64, value: i64 },
    #[error("invalid alternative: r = {0} (must be finite and >= 1)")]
    InvalidSpread(f64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Twelve bin frequencies with the reference total the overflow bin is
/// measured against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinFrequencies {
    counts: Vec<u64>,
    reference_total: u64,
}

impl BinFrequencies {
    pub fn new(counts: Vec<u64>, reference_total: u64) -> Result<Self> {
        if counts.len() != 12 {
            return Err(SimError::ProfileLength(counts.len()));
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(SimError::EmptyProfile);
        }
        Ok(BinFrequencies { counts, reference_total })
    }

    /// Profile whose reference total is its own sum.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total = counts.iter().sum();
        Self::new(counts, total)
    }

    /// The canonical profile: [`REFERENCE_NU`] against [`REFERENCE_TOTAL`].
    pub fn reference() -> Self {
        BinFrequencies { counts: REFERENCE_NU.to_vec(), reference_total: REFERENCE_TOTAL }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sum(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn reference_total(&self) -> u64 {
        self.reference_total
    }
}

impl Default for BinFrequencies {
    fn default() -> Self {
        Self::reference()
    }
}

/// Perturbed 13-bin profile. The first twelve entries are `|ν_i − η|`
/// sorted in descending order, the last is the reference total minus their
/// sum. For `η = 0` the profile is returned unchanged with an empty
/// overflow bin.
pub fn alt_frequencies(nu: &BinFrequencies, eta: u64) -> Result<[u64; 13]> {
    let mut bins = [0u64; 13];
    let mut shifted: Vec<u64> = nu.counts.iter().map(|&v| v.abs_diff(eta)).collect();
    shifted.sort_unstable_by(|a, b| b.cmp(a));
    bins[..12].copy_from_slice(&shifted);
    if eta == 0 {
        return Ok(bins);
    }
    let overflow = nu.reference_total as i64 - shifted.iter().sum::<u64>() as i64;
    if overflow < 0 {
        return Err(SimError::NegativeOverflow { eta, value: overflow });
    }
    bins[12] = overflow as u64;
    Ok(bins)
}

/// Spread and frequency perturbation for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltParams {
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default)]
    pub eta: u64,
}

fn one() -> f64 {
    1.0
}

impl AltParams {
    pub const NULL: AltParams = AltParams { r: 1.0, eta: 0 };

    pub fn new(r: f64, eta: u64) -> Result<Self> {
        let p = AltParams { r, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 1.0) {
            return Err(SimError::InvalidSpread(self.r));
        }
        Ok(())
    }

    pub fn is_null(&self) -> bool {
        self.r == 1.0 && self.eta == 0
    }
}

impl Default for AltParams {
    fn default() -> Self {
        Self::NULL
    }
}

/// Sampler for one profile and parameter set; build once, draw many times.
#[derive(Debug, Clone)]
pub struct Generator {
    bins: WeightedIndex<u64>,
    r: f64,
}

impl Generator {
    pub fn new(nu: &BinFrequencies, params: AltParams) -> Result<Self> {
        params.validate()?;
        let weights = alt_frequencies(nu, params.eta)?;
        let bins = WeightedIndex::new(weights).map_err(|_| SimError::EmptyProfile)?;
        Ok(Generator { bins, r: params.r })
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        let i = self.bins.sample(rng);
        (i as f64 + rng.random::<f64>() * self.r) / 2.0
    }

    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// Draws `n` distances (mm) from a generator seeded with `seed`.
pub fn generate_sample(nu: &BinFrequencies, params: AltParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let gen = Generator::new(nu, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gen.sample(&mut rng, n))
}

#[cfg(test)]
mod tests;
