use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

/// Two-pass Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Mismatch(format!("{} vs {} points", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewPoints(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a Pearson `r` over `n` points, from the t statistic
/// with `n - 2` degrees of freedom.
pub fn pearson_p_value(r: f64, n: usize) -> Result<f64, EvalError> {
    if n < 3 {
        return Err(EvalError::TooFewPoints(n));
    }
    if r.abs() >= 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

pub const SIGNIFICANCE: f64 = 0.05;

/// A correlation with its significance. `coefficient` is on the reporting
/// scale of whichever metric produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaResult {
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
}

impl TaResult {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE
    }
}

/// Pearson `r` times `scale`, with its p-value.
pub fn correlation_test(x: &[f64], y: &[f64], scale: f64) -> Result<TaResult, EvalError> {
    let r = pearson(x, y)?;
    Ok(TaResult { coefficient: r * scale, p_value: pearson_p_value(r, x.len())?, n: x.len() })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Some((m, sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_of_a_known_case() {
        // r = 0.5 over 12 points: t = 0.5 * sqrt(10 / 0.75) = 1.8257, two-sided p about 0.0979
        let p = pearson_p_value(0.5, 12).unwrap();
        assert!((p - 0.0979).abs() < 5e-4, "{p}");
        assert_eq!(pearson_p_value(-1.0, 5).unwrap(), 0.0);
        assert!(pearson_p_value(0.0, 30).unwrap() > 0.999);
    }

    #[test]
    fn mean_sd_small_cases() {
        assert_eq!(mean_sd(&[]), None);
        assert_eq!(mean_sd(&[3.0]), Some((3.0, 0.0)));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
