use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{MorphoError, Result};
use crate::npstats::{Alternative, TestResult};

/// Stochastic ordering deduced from the two one-sided KS tests of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum OrderVerdict {
    /// Only the cdf-above alternative is significant: the first sample's cdf
    /// lies above the second's.
    FirstStochasticallySmaller,
    /// Only the cdf-below alternative is significant.
    SecondStochasticallySmaller,
    /// Both one-sided alternatives are significant: the cdfs cross.
    DifferentNoOrdering,
    NoDifference,
}

/// Maps the pair of one-sided KS decisions at level `alpha` to a verdict.
/// `ks_less` must test `Alternative::Less` (first cdf below the second) and
/// `ks_greater` `Alternative::Greater` (first cdf above).
pub fn infer_stochastic_order(ks_less: &TestResult, ks_greater: &TestResult, alpha: f64) -> Result<OrderVerdict> {
    if ks_less.alternative != Alternative::Less || ks_greater.alternative != Alternative::Greater {
        return Err(MorphoError::MismatchedAlternatives(ks_less.alternative, ks_greater.alternative));
    }
    Ok(verdict(ks_less.p_value < alpha, ks_greater.p_value < alpha))
}

pub(crate) fn verdict(less_significant: bool, greater_significant: bool) -> OrderVerdict {
    match (less_significant, greater_significant) {
        (false, true) => OrderVerdict::FirstStochasticallySmaller,
        (true, false) => OrderVerdict::SecondStochasticallySmaller,
        (true, true) => OrderVerdict::DifferentNoOrdering,
        (false, false) => OrderVerdict::NoDifference,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npstats::{ks_two_sample, Method};

    fn ks(alt: Alternative, p: f64) -> TestResult {
        TestResult { method: Method::KolmogorovSmirnov, statistic: 0.0, df: vec![], p_value: p, alternative: alt, z: None }
    }

    #[test]
    fn truth_table() {
        let cases = [
            (0.9544, 0.00001, OrderVerdict::FirstStochasticallySmaller),
            (0.0138, 0.00001, OrderVerdict::DifferentNoOrdering),
            (0.5, 0.5, OrderVerdict::NoDifference),
            (0.001, 0.7519, OrderVerdict::SecondStochasticallySmaller),
        ];
        for (pl, pg, want) in cases {
            let got = infer_stochastic_order(&ks(Alternative::Less, pl), &ks(Alternative::Greater, pg), 0.05).unwrap();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn alternatives_must_match_roles() {
        let r = infer_stochastic_order(&ks(Alternative::Greater, 0.5), &ks(Alternative::Less, 0.5), 0.05);
        assert!(matches!(r, Err(MorphoError::MismatchedAlternatives(..))));
    }

    #[test]
    fn shifted_sample_is_smaller() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.5).collect();
        let less = ks_two_sample(&x, &y, Alternative::Less).unwrap();
        let greater = ks_two_sample(&x, &y, Alternative::Greater).unwrap();
        assert_eq!(infer_stochastic_order(&less, &greater, 0.05).unwrap(), OrderVerdict::FirstStochasticallySmaller);
    }
}
