//! Semantic similarity curve and semantic-to-bit rate conversions.

use crate::error::{Error, Result};
use crate::netmodel::SemanticParams;

/// Relative half-width kept away from each asymptote when inverting.
pub const CLAMP_REL: f64 = 1e-6;

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Similarity `a1 + a2 / (1 + exp(-c1 r - c2))` at satellite-hop SNR `r_db`.
pub fn similarity(r_db: f64, sem: &SemanticParams) -> f64 {
    if r_db == f64::INFINITY {
        return sem.a1 + sem.a2;
    }
    if r_db == f64::NEG_INFINITY {
        return sem.a1;
    }
    sem.a1 + sem.a2 * logistic(sem.c1 * r_db + sem.c2)
}

/// Derivative of [`similarity`] with respect to `r_db`.
pub fn similarity_derivative(r_db: f64, sem: &SemanticParams) -> f64 {
    if !r_db.is_finite() {
        return 0.0;
    }
    let s = logistic(sem.c1 * r_db + sem.c2);
    sem.a2 * sem.c1 * s * (1.0 - s)
}

pub fn similarity_second_derivative(r_db: f64, sem: &SemanticParams) -> f64 {
    if !r_db.is_finite() {
        return 0.0;
    }
    let s = logistic(sem.c1 * r_db + sem.c2);
    sem.a2 * sem.c1 * sem.c1 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

pub fn clamp_delta(sem: &SemanticParams) -> f64 {
    CLAMP_REL * sem.a2
}

/// Clamps `eps` into the invertible interval; the flag reports whether it moved.
pub fn clamp_similarity(eps: f64, sem: &SemanticParams) -> (f64, bool) {
    let d = clamp_delta(sem);
    let lo = sem.a1 + d;
    let hi = sem.a1 + sem.a2 - d;
    if eps < lo {
        (lo, true)
    } else if eps > hi {
        (hi, true)
    } else {
        (eps, false)
    }
}

/// Closed-form logit inverse of [`similarity`] on the clamped interval.
pub fn similarity_inverse(eps: f64, sem: &SemanticParams) -> Result<f64> {
    let d = clamp_delta(sem);
    let lo = sem.a1 + d;
    let hi = sem.a1 + sem.a2 - d;
    if !(eps >= lo) {
        return Err(Error::domain(format!("similarity {eps} below lower bound a1+delta={lo}")));
    }
    if !(eps <= hi) {
        return Err(Error::domain(format!("similarity {eps} above upper bound a1+a2-delta={hi}")));
    }
    let s = (eps - sem.a1) / sem.a2;
    Ok(((s / (1.0 - s)).ln() - sem.c2) / sem.c1)
}

/// SNR (dB) at which the curvature of `S(r) * 10^(-r/10)` changes sign.
///
/// For `r` above this point the satellite-hop rate is concave in both its
/// bandwidth and its power.
pub fn concavity_threshold_db(sem: &SemanticParams) -> f64 {
    let k = std::f64::consts::LN_10 / 10.0;
    let s = (0.5 * (1.0 - k / sem.c1)).clamp(1e-12, 0.5);
    ((s / (1.0 - s)).ln() - sem.c2) / sem.c1
}

/// Equivalent conventional bit rate of a satellite hop: `mu1 (b/Q) eps(r)`.
pub fn semantic_to_bit_s2r(b: f64, r_db: f64, sem: &SemanticParams) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    sem.kappa() * b * similarity(r_db, sem)
}

/// Semantic rate of a satellite hop in suts/s: `(b M / Q) eps(r)`.
pub fn semantic_rate_s2r(b: f64, r_db: f64, sem: &SemanticParams) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    b * sem.m_suts / sem.q_symbols * similarity(r_db, sem)
}

/// Equivalent bit rate of a semantic downlink carrying `c_bits` bits/s.
pub fn semantic_to_bit_r2su(c_bits: f64, sem: &SemanticParams) -> f64 {
    sem.mu1 * c_bits / (sem.mu2 * sem.q_symbols)
}

/// Semantic rate of a semantic downlink in suts/s.
pub fn semantic_rate_r2su(c_bits: f64, sem: &SemanticParams) -> f64 {
    c_bits * sem.m_suts / (sem.mu2 * sem.q_symbols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sem() -> SemanticParams {
        SemanticParams::default()
    }

    #[test]
    fn values_at_reference_points() {
        let s = sem();
        assert!((similarity(0.0, &s) - 0.51211).abs() < 1e-4);
        assert!((similarity(10.0, &s) - 0.83838).abs() < 1e-4);
        assert!((similarity(f64::INFINITY, &s) - 0.9365).abs() < 1e-12);
        assert!((similarity(f64::NEG_INFINITY, &s) - 0.3980).abs() < 1e-12);
    }

    #[test]
    fn inverse_values() {
        let s = sem();
        let r = similarity_inverse(similarity(0.0, &s), &s).unwrap();
        assert!(r.abs() < 1e-9);
        let mid = similarity_inverse(s.a1 + 0.5 * s.a2, &s).unwrap();
        assert!((mid - 4.6661).abs() < 1e-4);
        let e = similarity_inverse(0.99, &s).unwrap_err().to_string();
        assert!(e.contains("upper bound"), "{e}");
        assert!(similarity_inverse(0.2, &s).unwrap_err().to_string().contains("lower bound"));
    }

    #[test]
    fn clamp_flags() {
        let s = sem();
        assert!(clamp_similarity(0.99, &s).1);
        assert!(!clamp_similarity(0.6, &s).1);
    }

    #[test]
    fn s2r_conversions() {
        let s = sem();
        // eps = 0.9 needs r with similarity 0.9
        let r = similarity_inverse(0.9, &s).unwrap();
        assert!((semantic_to_bit_s2r(1e6, r, &s) - 1.08e7).abs() < 1e-3);
        assert_eq!(semantic_to_bit_s2r(0.0, r, &s), 0.0);
        let floor = semantic_to_bit_s2r(1e6, f64::NEG_INFINITY, &s);
        assert!((floor - 12.0 * 1e6 * 0.3980).abs() < 1e-6);
    }

    #[test]
    fn r2su_conversions() {
        let s = sem();
        assert!((semantic_to_bit_r2su(6.6582e6, &s) - 1.99746e7).abs() < 1.0);
        assert_eq!(semantic_to_bit_r2su(0.0, &s), 0.0);
        let unit = SemanticParams { mu1: 16.0, ..s };
        assert_eq!(semantic_to_bit_r2su(123.5, &unit), 123.5);
    }

    #[test]
    fn m_cancels_in_bit_rates() {
        let s = sem();
        let t = SemanticParams { m_suts: 17.0, ..s.clone() };
        assert_eq!(semantic_to_bit_s2r(3e6, 2.5, &s).to_bits(), semantic_to_bit_s2r(3e6, 2.5, &t).to_bits());
        assert_eq!(semantic_to_bit_r2su(3e6, &s).to_bits(), semantic_to_bit_r2su(3e6, &t).to_bits());
        assert!(semantic_rate_s2r(3e6, 2.5, &t) > semantic_rate_s2r(3e6, 2.5, &s));
    }

    #[test]
    fn concavity_threshold_is_inflection_of_power_marginal() {
        let s = sem();
        let r0 = concavity_threshold_db(&s);
        let k = std::f64::consts::LN_10 / 10.0;
        let d1 = similarity_derivative(r0, &s);
        let d2 = similarity_second_derivative(r0, &s);
        assert!((d2 - k * d1).abs() < 1e-12);
    }
}
