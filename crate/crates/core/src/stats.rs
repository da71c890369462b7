//! Small numeric helpers shared by the cost accounting and the checkers.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::Error;
use crate::Result;

/// log2 of the binomial coefficient C(n, k), via log-gamma so that desk-scale
/// but astronomically large coefficients (C(2^20, 512), say) stay exact to
/// f64 precision.
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    let n = n as f64;
    let k = k as f64;
    (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)) / std::f64::consts::LN_2
}

/// Smallest integer `t` with `3^t >= c` where `log3c = log3(c)`, computed with
/// a tiny backoff so values a rounding error below an integer don't get bumped
/// a full step up.
pub fn ceil_of_log(log_value: f64) -> u64 {
    (log_value - 1e-9).ceil().max(0.0) as u64
}

/// Pearson chi-square statistic for observed counts against a uniform null.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let cells = counts.len();
    if cells == 0 || total == 0 {
        return 0.0;
    }
    let expected = total as f64 / cells as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// Upper critical value of the chi-square distribution with `df` degrees of
/// freedom at significance `alpha` (i.e. the 1-alpha quantile).
pub fn chi_square_critical(df: usize, alpha: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi-square needs at least 1 df".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Domain(format!("significance {alpha} outside (0,1)")));
    }
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::Domain(format!("chi-square df={df}: {e}")))?;
    Ok(dist.inverse_cdf(1.0 - alpha))
}

/// Convenience: does a uniformity test on `counts` pass at `alpha`?
pub fn uniform_fit_passes(counts: &[u64], alpha: f64) -> Result<bool> {
    let stat = chi_square_uniform(counts);
    let crit = chi_square_critical(counts.len().saturating_sub(1), alpha)?;
    Ok(stat <= crit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_binomial_matches_exact_small_values() {
        // C(10,3) = 120
        assert!((log2_binomial(10, 3) - 120f64.log2()).abs() < 1e-10);
        assert!((log2_binomial(10, 3) - 6.906890595608519).abs() < 1e-9);
        assert_eq!(log2_binomial(5, 0), 0.0);
        assert_eq!(log2_binomial(5, 5), 0.0);
        assert_eq!(log2_binomial(5, 6), f64::NEG_INFINITY);
        // symmetry at scale
        assert!((log2_binomial(1 << 20, 512) - log2_binomial(1 << 20, (1 << 20) - 512)).abs() < 1e-6);
    }

    #[test]
    fn ceil_of_log_handles_near_integers() {
        assert_eq!(ceil_of_log(3.2618595), 4);
        assert_eq!(ceil_of_log(4.0 + 1e-12), 4);
        assert_eq!(ceil_of_log(4.0 - 1e-12), 4);
        assert_eq!(ceil_of_log(0.0), 0);
    }

    #[test]
    fn chi_square_statistic_and_critical() {
        // Perfect uniformity gives statistic 0.
        assert_eq!(chi_square_uniform(&[10, 10, 10, 10]), 0.0);
        // df=7 at alpha=1e-3: known value ≈ 24.32.
        let crit = chi_square_critical(7, 1e-3).unwrap();
        assert!((24.2..24.5).contains(&crit), "crit = {crit}");
        // A wildly skewed table fails.
        assert!(!uniform_fit_passes(&[1000, 0, 0, 0, 0, 0, 0, 0], 1e-3).unwrap());
        // A near-uniform table passes.
        assert!(uniform_fit_passes(&[1001, 998, 1003, 999, 1002, 997, 1000, 1000], 1e-3).unwrap());
    }
}
