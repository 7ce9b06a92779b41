//! Error-rate estimation by public comparison of a random sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{domain, Error, Result};

use super::SiftedKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub sampled: usize,
    pub errors: usize,
    pub estimate: f64,
    /// Two-sided 95% Clopper-Pearson interval.
    pub lower: f64,
    pub upper: f64,
}

/// Exact binomial confidence interval for `errors` out of `trials`.
pub fn clopper_pearson(errors: usize, trials: usize, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || errors > trials || !(0.0 < confidence && confidence < 1.0) {
        return Err(domain("clopper-pearson needs 0 <= errors <= trials, trials > 0"));
    }
    let alpha = 1.0 - confidence;
    let (x, n) = (errors as f64, trials as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| Error::Estimation(e.to_string()));
    let lower = if errors == 0 { 0.0 } else { beta(x, n - x + 1.0)?.inverse_cdf(alpha / 2.0) };
    let upper = if errors == trials { 1.0 } else { beta(x + 1.0, n - x)?.inverse_cdf(1.0 - alpha / 2.0) };
    Ok((lower, upper))
}

/// Discloses a uniformly chosen `sample_fraction` of the key, compares it
/// and returns the estimate together with the undisclosed remainder.
pub fn estimate_qber(mut key: SiftedKey, sample_fraction: f64, seed: u64) -> Result<(QberEstimate, SiftedKey)> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(domain(format!("sample fraction must lie in (0, 1], got {sample_fraction}")));
    }
    let n = key.len();
    let k = ((n as f64) * sample_fraction).round() as usize;
    if k == 0 {
        return Err(Error::Estimation(format!("sampling {sample_fraction} of {n} bits leaves nothing to compare")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disclosed = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, k) {
        disclosed[i] = true;
    }
    let errors = (0..n).filter(|&i| disclosed[i] && key.alice[i] != key.bob[i]).count();
    let (lower, upper) = clopper_pearson(errors, k, 0.95)?;
    let keep: Vec<bool> = disclosed.iter().map(|d| !d).collect();
    key.retain_indices(&keep);
    Ok((QberEstimate { sampled: k, errors, estimate: errors as f64 / k as f64, lower, upper }, key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postproc::Announcement;

    fn key_with_errors(n: usize, error_at: impl Fn(usize) -> bool) -> SiftedKey {
        SiftedKey {
            leaf: 0,
            positions: (0..n as u64).map(|p| Announcement { packet: p, slot: 1 }).collect(),
            alice: (0..n).map(|i| i % 3 == 0).collect(),
            bob: (0..n).map(|i| (i % 3 == 0) ^ error_at(i)).collect(),
        }
    }

    #[test]
    fn agreeing_sample() {
        let (q, rest) = estimate_qber(key_with_errors(1000, |_| false), 0.1, 1).unwrap();
        assert_eq!(q.sampled, 100);
        assert_eq!(q.estimate, 0.0);
        assert!(q.upper > 0.0);
        assert_eq!(rest.len(), 900);
        for w in rest.positions.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn full_disclosure_is_exact() {
        let (q, rest) = estimate_qber(key_with_errors(1000, |i| i % 37 == 0 && i < 999), 1.0, 5).unwrap();
        assert_eq!(q.errors, 27);
        assert_eq!(q.estimate, 0.027);
        assert!(q.lower < 0.027 && 0.027 < q.upper);
        assert!(rest.is_empty());
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(estimate_qber(key_with_errors(3, |_| false), 0.1, 0), Err(Error::Estimation(_))));
        assert!(estimate_qber(key_with_errors(3, |_| false), 0.0, 0).is_err());
    }

    #[test]
    fn interval_matches_beta_quantiles() {
        // reference values from the exact binomial tails
        let (lo, hi) = clopper_pearson(27, 1000, 0.95).unwrap();
        let tail = |p: f64, upper: bool| -> f64 {
            let mut s = 0.0;
            let mut term = (1.0 - p).powi(1000);
            for k in 0..=1000usize {
                if (upper && k >= 27) || (!upper && k <= 27) {
                    s += term;
                }
                term *= (1000 - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
            }
            s
        };
        assert!((tail(lo, true) - 0.025).abs() < 1e-6);
        assert!((tail(hi, false) - 0.025).abs() < 1e-6);
    }
}
