//! Secure fraction of the raw key against individual attacks.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Shannon binary entropy in bits.
pub fn binary_entropy(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(domain(format!("binary entropy needs a probability, got {e}")));
    }
    if e == 0.0 || e == 1.0 {
        return Ok(0.0);
    }
    Ok(-e * e.log2() - (1.0 - e) * (1.0 - e).log2())
}

/// Upper end of the error rates the collision bound is stated for.
pub const COLLISION_VALIDITY_LIMIT: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionProbability {
    pub value: f64,
    /// The error rate exceeded the validity limit and the limit's value was used.
    pub saturated: bool,
}

/// Eavesdropper's collision probability per sifted bit,
/// `p_c = 1 − e² − (1 − 6e)²/2`.
pub fn collision_probability(e: f64) -> Result<CollisionProbability> {
    if !(0.0..=1.0).contains(&e) {
        return Err(domain(format!("error rate must lie in [0, 1], got {e}")));
    }
    let saturated = e > COLLISION_VALIDITY_LIMIT;
    let e = e.min(COLLISION_VALIDITY_LIMIT);
    Ok(CollisionProbability { value: 1.0 - e * e - (1.0 - 6.0 * e).powi(2) / 2.0, saturated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    /// Mean photons per pulse sent by the leaf unit.
    pub mu: f64,
    /// Transmissivity from the leaf unit to the detectors.
    pub transmissivity: f64,
    /// Error rate.
    pub qber: f64,
    /// Error-correction efficiency relative to the Shannon limit.
    pub ec_efficiency: f64,
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(domain(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.transmissivity > 0.0 && self.transmissivity <= 1.0) {
            return Err(domain(format!("transmissivity must lie in (0, 1], got {}", self.transmissivity)));
        }
        if !(0.0..=0.5).contains(&self.qber) {
            return Err(domain(format!("error rate must lie in [0, 0.5], got {}", self.qber)));
        }
        if !(self.ec_efficiency >= 1.0) || !self.ec_efficiency.is_finite() {
            return Err(domain(format!("error-correction efficiency must be >= 1, got {}", self.ec_efficiency)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecureFraction {
    pub value: f64,
    pub entropy: f64,
    pub collision: CollisionProbability,
    /// Before clamping at zero.
    pub unclamped: f64,
}

/// `r = max(0, (1 − 2μ(1−T))·(−log2 p_c) − f·h(e))`. Zero whenever the
/// collision bound saturates.
pub fn secure_fraction(p: &SecurityParams) -> Result<SecureFraction> {
    p.validate()?;
    let collision = collision_probability(p.qber)?;
    let entropy = binary_entropy(p.qber)?;
    let multiphoton = 1.0 - 2.0 * p.mu * (1.0 - p.transmissivity);
    let unclamped = multiphoton * -collision.value.log2() - p.ec_efficiency * entropy;
    let value = if collision.saturated { 0.0 } else { unclamped.clamp(0.0, 1.0) };
    Ok(SecureFraction { value, entropy, collision, unclamped })
}

/// Final key rate in bits/s.
pub fn secure_rate(raw_rate: f64, fraction: f64) -> Result<f64> {
    if !(raw_rate >= 0.0) || !raw_rate.is_finite() {
        return Err(domain(format!("raw rate must be >= 0, got {raw_rate}")));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(domain(format!("secure fraction must lie in [0, 1], got {fraction}")));
    }
    Ok(raw_rate * fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn r(mu: f64, t: f64, e: f64, f: f64) -> f64 {
        secure_fraction(&SecurityParams { mu, transmissivity: t, qber: e, ec_efficiency: f }).unwrap().value
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // direct evaluation with natural logs
        let e: f64 = 0.027;
        let h = -(e * e.ln() + (1.0 - e) * (1.0 - e).ln()) / std::f64::consts::LN_2;
        assert_abs_diff_eq!(binary_entropy(e).unwrap(), h, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(e).unwrap(), 0.179116, epsilon = 1e-6);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn collision_values() {
        assert_eq!(collision_probability(0.0).unwrap().value, 0.5);
        assert_abs_diff_eq!(collision_probability(0.027).unwrap().value, 0.64815, epsilon = 1e-5);
        let edge = collision_probability(1.0 / 6.0).unwrap();
        assert_abs_diff_eq!(edge.value, 1.0 - 1.0 / 36.0, epsilon = 1e-15);
        assert!(!edge.saturated);
        let over = collision_probability(0.3).unwrap();
        assert!(over.saturated);
        assert_eq!(over.value, edge.value);
    }

    #[test]
    fn fraction_anchors() {
        assert_abs_diff_eq!(r(0.1, 0.2, 0.027, 1.05), 0.337, epsilon = 1e-3);
        assert_abs_diff_eq!(r(0.1, 1e-7, 0.027, 1.05), 0.312, epsilon = 1e-3);
        assert_abs_diff_eq!(r(1e-12, 1.0, 0.0, 1.0), 1.0, epsilon = 1e-9);
        assert_eq!(r(0.1, 0.2, 0.2, 1.05), 0.0);
        assert_eq!(r(0.1, 0.2, 0.15, 1.2), 0.0);
    }

    #[test]
    fn rate_examples() {
        assert_abs_diff_eq!(secure_rate(10_000.0, 0.34).unwrap(), 3400.0, epsilon = 1e-9);
        assert_eq!(secure_rate(123.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(secure_rate(10_000.0, 0.337).unwrap(), 3370.0, epsilon = 1e-9);
        assert!(secure_rate(-1.0, 0.3).is_err());
    }

    #[test]
    fn invalid_params() {
        let ok = SecurityParams { mu: 0.1, transmissivity: 0.2, qber: 0.027, ec_efficiency: 1.05 };
        assert!(secure_fraction(&SecurityParams { mu: 0.0, ..ok }).is_err());
        assert!(secure_fraction(&SecurityParams { transmissivity: 0.0, ..ok }).is_err());
        assert!(secure_fraction(&SecurityParams { ec_efficiency: 0.9, ..ok }).is_err());
    }

    #[test]
    fn monotone_on_grid() {
        let es: Vec<f64> = (0..=30).map(|i| i as f64 * 0.002).collect();
        let mus: Vec<f64> = (0..=15).map(|i| 0.05 + i as f64 * 0.01).collect();
        let ts: Vec<f64> = (0..=14).map(|i| 10f64.powf(-7.0 + i as f64 * 0.5)).collect();
        for &mu in &mus {
            for &t in &ts {
                for w in es.windows(2) {
                    assert!(r(mu, t, w[1], 1.05) <= r(mu, t, w[0], 1.05));
                }
            }
        }
        for &e in &es {
            for &t in &ts {
                for w in mus.windows(2) {
                    assert!(r(w[1], t, e, 1.05) <= r(w[0], t, e, 1.05));
                }
            }
            for &mu in &mus {
                for w in ts.windows(2) {
                    assert!(r(mu, w[1], e, 1.05) >= r(mu, w[0], e, 1.05));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fraction_is_a_fraction(mu in 1e-6f64..1.0, t in 1e-9f64..1.0, e in 0.0f64..0.5, f in 1.0f64..2.0) {
            let v = r(mu, t, e, f);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
