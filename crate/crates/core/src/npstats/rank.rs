use super::{check_finite, Result, StatsError};

/// Values with their midranks and tie structure.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    pub values: Vec<f64>,
    /// Midrank of each value, in input order (1-based).
    pub midranks: Vec<f64>,
    /// Sizes of the tie groups, in ascending value order; singletons included.
    pub tie_sizes: Vec<usize>,
}

impl RankedSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_ties(&self) -> bool {
        self.tie_sizes.iter().any(|&t| t > 1)
    }

    /// `Σ (t³ − t)` over tie groups.
    pub fn tie_term(&self) -> f64 {
        self.tie_sizes
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum()
    }
}

/// Ranks `values`, giving tied observations the mean of the ranks they span.
pub fn midrank(values: &[f64]) -> Result<RankedSample> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(values)?;
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut midranks = vec![0.0; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            midranks[k] = r;
        }
        tie_sizes.push(j - i);
        i = j;
    }
    Ok(RankedSample {
        values: values.to_vec(),
        midranks,
        tie_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distinct_values() {
        let r = midrank(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.midranks, vec![3.0, 1.0, 2.0]);
        assert!(!r.has_ties());
    }

    #[test]
    fn ties_get_mean_rank() {
        let r = midrank(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.midranks, vec![1.5, 1.5, 3.0]);
        assert_eq!(r.tie_sizes, vec![2, 1]);
        assert_eq!(r.tie_term(), 6.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(midrank(&[]), Err(StatsError::EmptySample));
        assert_eq!(midrank(&[1.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    proptest! {
        #[test]
        fn rank_sum_identity(xs in prop::collection::vec(-5i32..5, 1..60)) {
            let v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            let r = midrank(&v).unwrap();
            let n = v.len() as f64;
            prop_assert_eq!(r.midranks.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
        }
    }
}
