//! Sample moments and empirical quantiles.

use crate::{Error, Result};

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the `n - 1` denominator; zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sd(values: &[f64]) -> f64 {
    variance(values).sqrt()
}

/// Empirical quantile of already sorted values, interpolating linearly
/// between order statistics at position `(n - 1) q` (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mean with the 2.5% and 97.5% empirical quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn summarize(values: &[f64]) -> Result<Interval> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let s = sorted(values);
    Ok(Interval {
        mean: mean(values),
        lower: quantile_sorted(&s, 0.025),
        upper: quantile_sorted(&s, 0.975),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles_of_one_to_thousand() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        let s = summarize(&v).unwrap();
        assert!((s.mean - 500.5).abs() < 1e-12);
        assert!((s.lower - 25.975).abs() < 1e-9);
        assert!((s.upper - 975.025).abs() < 1e-9);
    }

    #[test]
    fn constant_and_empty() {
        let s = summarize(&[3.5; 17]).unwrap();
        assert_eq!((s.mean, s.lower, s.upper), (3.5, 3.5, 3.5));
        assert!(summarize(&[]).is_err());
        assert_eq!(quantile_sorted(&[2.0], 0.9), 2.0);
    }

    #[test]
    fn sample_sd() {
        assert!((sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sd(&[1.0]), 0.0);
    }
}
