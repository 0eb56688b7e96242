//! Wilson intervals and chi-square tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the interval always contains phat; clamp against rounding
    ((center - half).max(0.0).min(phat), (center + half).min(1.0).max(phat))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn upper_tail(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .sf(statistic)
}

/// Goodness of fit of observed counts against cell probabilities. Cells with
/// zero expected probability must have zero count and are dropped.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquare {
    let total: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        let e = p * total as f64;
        statistic += (o as f64 - e).powi(2) / e;
    }
    let df = cells.saturating_sub(1);
    ChiSquare {
        statistic,
        df,
        p_value: if statistic.is_infinite() {
            0.0
        } else {
            upper_tail(statistic, df)
        },
    }
}

/// Two-sample homogeneity test on binned counts with possibly different
/// sample sizes. Bins empty in both samples are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquare {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        bins += 1;
        statistic += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
    }
    let df = bins.saturating_sub(1);
    ChiSquare {
        statistic,
        df,
        p_value: upper_tail(statistic, df),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wilson_known_values() {
        // 95% interval for 8/10 from the standard score-interval formula
        let (lo, hi) = wilson_interval(8, 10, 1.959_963_984_540_054);
        assert_abs_diff_eq!(lo, 0.4901624, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.9433178, epsilon = 1e-6);
        let (lo, hi) = wilson_interval(0, 50, Z_99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.15);
        let (lo, hi) = wilson_interval(50, 50, Z_99);
        assert!(lo < 1.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn gof_identical_is_zero() {
        let chi = chi_square_gof(&[20, 30, 50], &[0.2, 0.3, 0.5]);
        assert_abs_diff_eq!(chi.statistic, 0.0, epsilon = 1e-12);
        assert_eq!(chi.df, 2);
        assert_abs_diff_eq!(chi.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gof_known_value() {
        // (60-50)^2/50 + (40-50)^2/50 = 4 on 1 df: p = 0.0455003
        let chi = chi_square_gof(&[60, 40], &[0.5, 0.5]);
        assert_abs_diff_eq!(chi.statistic, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chi.p_value, 0.0455003, epsilon = 1e-6);
        assert_eq!(chi_square_gof(&[1, 10], &[0.0, 1.0]).p_value, 0.0);
    }

    #[test]
    fn two_sample_matches_contingency_table() {
        // equal sizes: 2x2 table [[30,70],[50,50]] has Pearson statistic 8.3333
        let chi = chi_square_two_sample(&[30, 70], &[50, 50]);
        assert_abs_diff_eq!(chi.statistic, 8.333_333, epsilon = 1e-5);
        assert_eq!(chi.df, 1);
        let same = chi_square_two_sample(&[10, 20, 0], &[20, 40, 0]);
        assert_abs_diff_eq!(same.statistic, 0.0, epsilon = 1e-12);
        assert_eq!(same.df, 1);
    }
}
