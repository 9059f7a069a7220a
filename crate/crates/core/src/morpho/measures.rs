use std::collections::BTreeMap;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{MorphoError, Result};
use crate::npstats::{mean, median, sample_variance};

/// Result of trimming a sample to `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filtered {
    pub values: Vec<f64>,
    pub below: usize,
    pub above: usize,
    pub frac_below: f64,
    pub frac_above: f64,
}

/// Keeps the values with `lo ≤ d ≤ hi`, in their original order.
pub fn filter_distances(raw: &[f64], lo: f64, hi: f64) -> Result<Filtered> {
    if !(lo < hi) {
        return Err(MorphoError::InvalidBounds { lo, hi });
    }
    let mut values = Vec::with_capacity(raw.len());
    let (mut below, mut above) = (0, 0);
    for &d in raw {
        if d < lo {
            below += 1;
        } else if d > hi {
            above += 1;
        } else {
            values.push(d);
        }
    }
    let n = raw.len().max(1) as f64;
    Ok(Filtered { values, below, above, frac_below: below as f64 / n, frac_above: above as f64 / n })
}

/// Volume of `n_voxels` voxels of the given edge lengths, in mm³.
pub fn volume_mm3(n_voxels: usize, voxel_mm: [f64; 3]) -> f64 {
    n_voxels as f64 * voxel_mm[0] * voxel_mm[1] * voxel_mm[2]
}

/// Location and spread summaries of one distance sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Descriptives {
    pub n: usize,
    pub mean_mm: f64,
    pub median_mm: f64,
    /// Most frequent value after rounding to 0.1 mm; the smallest wins ties.
    pub mode_mm: f64,
    pub range_mm: f64,
    pub variance_mm2: f64,
}

pub fn descriptives(sample: &[f64]) -> Result<Descriptives> {
    if sample.len() < 2 {
        return Err(MorphoError::TooFewValues { needed: 2, got: sample.len() });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(crate::npstats::StatsError::NonFinite.into());
    }
    let mut tenths: BTreeMap<i64, usize> = BTreeMap::new();
    for &x in sample {
        *tenths.entry((x * 10.0).round() as i64).or_default() += 1;
    }
    // BTreeMap iterates in increasing order, so the first maximum is the smallest.
    let (mode_key, _) = tenths
        .iter()
        .fold((0i64, 0usize), |(bk, bc), (&k, &c)| if c > bc { (k, c) } else { (bk, bc) });
    let (lo, hi) = sample.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    Ok(Descriptives {
        n: sample.len(),
        mean_mm: mean(sample),
        median_mm: median(sample),
        mode_mm: mode_key as f64 / 10.0,
        range_mm: hi - lo,
        variance_mm2: sample_variance(sample),
    })
}

/// Per-hemisphere measures of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SubjectMeasures {
    pub volume_mm3: f64,
    pub descriptives: Descriptives,
}

pub fn subject_measures(sample: &[f64], voxel_mm: [f64; 3]) -> Result<SubjectMeasures> {
    Ok(SubjectMeasures { volume_mm3: volume_mm3(sample.len(), voxel_mm), descriptives: descriptives(sample)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn filter_examples() {
        let f = filter_distances(&[-0.7, -0.2, 3.0, 5.9], -0.5, 5.5).unwrap();
        assert_eq!(f.values, vec![-0.2, 3.0]);
        assert_eq!((f.below, f.above), (1, 1));
        let inside = [0.0, 1.0, 5.5, -0.5];
        assert_eq!(filter_distances(&inside, -0.5, 5.5).unwrap().values, inside.to_vec());
        assert!(filter_distances(&inside, 1.0, 1.0).is_err());
    }

    #[test]
    fn filter_trims_expected_fractions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let raw: Vec<f64> = (0..1_000_000).map(|_| rng.random_range(-1.0..6.0)).collect();
        let f = filter_distances(&raw, -0.5, 5.5).unwrap();
        assert!((f.frac_below - 0.5 / 7.0).abs() < 0.002);
        assert!((f.frac_above - 0.5 / 7.0).abs() < 0.002);
    }

    #[test]
    fn volume_examples() {
        assert_eq!(volume_mm3(8, [0.5; 3]), 1.0);
        assert_eq!(volume_mm3(0, [0.5; 3]), 0.0);
        assert_eq!(volume_mm3(13446, [0.5; 3]), 1680.75);
    }

    #[test]
    fn descriptive_examples() {
        assert_eq!(descriptives(&[2.21, 2.24, 1.13]).unwrap().mode_mm, 2.2);
        assert_eq!(descriptives(&[1.0, 5.0]).unwrap().range_mm, 4.0);
        let d = descriptives(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((d.median_mm, d.variance_mm2), (2.0, 1.0));
        // Three singleton bins tie; the smallest wins.
        assert_eq!(descriptives(&[0.31, 0.12, 0.2]).unwrap().mode_mm, 0.1);
        assert!(descriptives(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn hemisphere_composition(
            l in prop::collection::vec(-0.5f64..5.5, 2..100),
            r in prop::collection::vec(-0.5f64..5.5, 2..100),
        ) {
            let both: Vec<f64> = l.iter().chain(&r).copied().collect();
            let (dl, dr, db) = (descriptives(&l).unwrap(), descriptives(&r).unwrap(), descriptives(&both).unwrap());
            prop_assert_eq!(volume_mm3(both.len(), [0.5; 3]), volume_mm3(l.len(), [0.5; 3]) + volume_mm3(r.len(), [0.5; 3]));
            let lo = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(db.range_mm, hi(&l).max(hi(&r)) - lo(&l).min(lo(&r)));
            prop_assert!(db.range_mm >= dl.range_mm.max(dr.range_mm));
            prop_assert!(db.variance_mm2 >= 0.0);
        }
    }
}
