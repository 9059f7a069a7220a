use super::dist::t_tails;
use super::rank::midrank;
use super::{check_finite, pick_tail, Alternative, Method, Result, StatsError, TestResult};

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance("constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with the two-sided t-approximation test
/// `t = ρ √((n−2)/(1−ρ²))`, df = n − 2. A perfect monotone relation gives
/// p = 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, TestResult)> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: x.len() });
    }
    let rx = midrank(x)?;
    let ry = midrank(y)?;
    let rho = pearson(&rx.midranks, &ry.midranks)?;
    let df = x.len() as f64 - 2.0;
    let alt = Alternative::TwoSided;
    let res = if rho.abs() >= 1.0 {
        TestResult::new(Method::Spearman, rho, vec![df], 0.0, alt)
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let (less, greater) = t_tails(t, df);
        TestResult::new(Method::Spearman, rho, vec![df], pick_tail(alt, less, greater), alt)
    };
    Ok((rho, res))
}
