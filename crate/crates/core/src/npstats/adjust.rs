use super::{Result, StatsError};

fn check_p(p: &[f64]) -> Result<()> {
    match p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&bad) => Err(StatsError::InvalidPValue(bad)),
        None => Ok(()),
    }
}

/// Holm's step-down adjustment. Returned in input order, capped at 1 and
/// monotone along the sorted order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check_p(p)?;
    let k = p.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; k];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        let adj = ((k - rank) as f64 * p[i]).min(1.0);
        running = running.max(adj);
        out[i] = running;
    }
    Ok(out)
}

pub fn bonferroni_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check_p(p)?;
    let k = p.len() as f64;
    Ok(p.iter().map(|v| (v * k).min(1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_step_down() {
        let adj = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        let expected = [0.03, 0.06, 0.06];
        for (a, e) in adj.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15, "{adj:?}");
        }
    }

    #[test]
    fn single_value_unchanged() {
        assert_eq!(holm_adjust(&[0.2]).unwrap(), vec![0.2]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert_eq!(holm_adjust(&[0.1, 1.5]), Err(StatsError::InvalidPValue(1.5)));
        assert!(holm_adjust(&[f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn dominated_by_bonferroni(p in prop::collection::vec(0.0f64..=1.0, 1..30)) {
            let h = holm_adjust(&p).unwrap();
            let b = bonferroni_adjust(&p).unwrap();
            for i in 0..p.len() {
                prop_assert!(h[i] <= b[i]);
                prop_assert!(h[i] >= p[i]);
            }
            // monotone along sorted raw p
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            for w in idx.windows(2) {
                prop_assert!(h[w[0]] <= h[w[1]]);
            }
        }
    }
}
