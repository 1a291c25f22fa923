//! Closed-form statistics: the sample-complexity bound of a δ-interior
//! learner, the tolerable interior error, the standard-normal critical
//! value and the normal-approximation binomial upper bound.
//!
//! All quantities are plain `f64`. An infinite sample bound means the
//! bound overflowed and the run is infeasible at this scale.

use statrs::function::erf::erfc_inv;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("epsilon must lie in (0, 1], got {0}")]
    Epsilon(f64),
    #[error("xi must lie in (0, 1), got {0}")]
    Xi(f64),
    #[error("delta must lie in (0, sqrt(d)] = (0, {max}], got {delta}")]
    Delta { delta: f64, max: f64 },
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("proportion must lie in [0, 1], got {0}")]
    Proportion(f64),
    #[error("need 1 <= sample_count and interior_count <= sample_count, got {interior} of {total}")]
    Counts { interior: u64, total: u64 },
}

/// `(ε, ξ, δ, d)` for the sample-complexity bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteeParams {
    pub epsilon: f64,
    pub xi: f64,
    pub delta: f64,
    pub d: usize,
}

impl GuaranteeParams {
    pub fn new(epsilon: f64, xi: f64, delta: f64, d: usize) -> Result<Self, StatsError> {
        check_epsilon(epsilon)?;
        check_xi(xi)?;
        if d == 0 {
            return Err(StatsError::Dimension);
        }
        let max = (d as f64).sqrt();
        if !(delta > 0.0 && delta <= max) {
            return Err(StatsError::Delta { delta, max });
        }
        Ok(Self { epsilon, xi, delta, d })
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), StatsError> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(StatsError::Epsilon(epsilon))
    }
}

fn check_xi(xi: f64) -> Result<(), StatsError> {
    if xi > 0.0 && xi < 1.0 {
        Ok(())
    } else {
        Err(StatsError::Xi(xi))
    }
}

fn check_counts(interior: u64, total: u64) -> Result<(), StatsError> {
    if total == 0 || interior > total {
        Err(StatsError::Counts { interior, total })
    } else {
        Ok(())
    }
}

/// `z_{ξ/2}`: the `(1 − ξ/2)` quantile of the standard normal.
///
/// Evaluated as `√2 · erfc⁻¹(ξ)`, which works on the tail probability
/// directly and so keeps full precision for small ξ.
pub fn z_critical(xi: f64) -> Result<f64, StatsError> {
    check_xi(xi)?;
    Ok(std::f64::consts::SQRT_2 * erfc_inv(xi))
}

/// Number of labelled δ-interior samples after which a hard-margin SVM on
/// the grid features has loss `≤ ε` with confidence `1 − ξ`:
///
/// `(1/ε²) · [ (9^{9/4}/4) · (√d/δ)^{9d/4} + 8 ln(2/ξ) ]`
///
/// The power term is formed in the log domain. Returns `f64::INFINITY`
/// when the value does not fit in an `f64`.
pub fn sample_complexity_bound(params: &GuaranteeParams) -> f64 {
    let d = params.d as f64;
    let log_margin_term =
        2.25 * 9f64.ln() - 4f64.ln() + 2.25 * d * (d.sqrt().ln() - params.delta.ln());
    let margin_term = log_margin_term.exp();
    let conf_term = 8.0 * (2.0 / params.xi).ln();
    (margin_term + conf_term) / (params.epsilon * params.epsilon)
}

/// Ceiling of a sample bound, `None` when it is infinite or beyond `u64`.
pub fn required_samples(bound: f64) -> Option<u64> {
    let c = bound.ceil();
    (c.is_finite() && c < u64::MAX as f64).then_some(c as u64)
}

/// Tolerable 0-1 loss on the δ-interior:
///
/// `(ε − (1 − p̂) − z·s) / (p̂ + z·s)`, `s = √(p̂(1 − p̂)/|S|)`.
///
/// With no interior samples the denominator vanishes; the result is
/// `f64::NEG_INFINITY`, which callers treat like any non-positive value.
pub fn interior_error(
    epsilon: f64,
    xi: f64,
    interior_count: u64,
    sample_count: u64,
) -> Result<f64, StatsError> {
    check_epsilon(epsilon)?;
    check_counts(interior_count, sample_count)?;
    let z = z_critical(xi)?;
    Ok(interior_error_with_z(epsilon, z, interior_count, sample_count))
}

pub(crate) fn interior_error_with_z(epsilon: f64, z: f64, interior: u64, total: u64) -> f64 {
    if interior == 0 {
        return f64::NEG_INFINITY;
    }
    let p = interior as f64 / total as f64;
    let zs = z * (p * (1.0 - p) / total as f64).sqrt();
    (epsilon - (1.0 - p) - zs) / (p + zs)
}

/// Interior-sampling summary of one training draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorEstimate {
    pub sample_count: u64,
    pub interior_count: u64,
    pub p_hat: f64,
    pub z: f64,
    /// `|S| · min(p̂, 1 − p̂) ≥ 5`, with p̂ standing in for the unknown p.
    pub normal_approx_valid: bool,
}

impl InteriorEstimate {
    pub fn new(interior_count: u64, sample_count: u64, xi: f64) -> Result<Self, StatsError> {
        check_counts(interior_count, sample_count)?;
        let p_hat = interior_count as f64 / sample_count as f64;
        Ok(Self {
            sample_count,
            interior_count,
            p_hat,
            z: z_critical(xi)?,
            normal_approx_valid: normal_approx_valid(p_hat, sample_count),
        })
    }

    pub fn interior_error(&self, epsilon: f64) -> Result<f64, StatsError> {
        check_epsilon(epsilon)?;
        Ok(interior_error_with_z(
            epsilon,
            self.z,
            self.interior_count,
            self.sample_count,
        ))
    }
}

fn normal_approx_valid(p_hat: f64, m: u64) -> bool {
    m as f64 * p_hat.min(1.0 - p_hat) >= 5.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialBound {
    pub upper: f64,
    pub normal_approx_valid: bool,
}

/// Upper end of the normal-approximation interval `p̂ + z·√(p̂(1−p̂)/m)`.
pub fn binomial_upper_bound(p_hat: f64, m: u64, xi: f64) -> Result<BinomialBound, StatsError> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(StatsError::Proportion(p_hat));
    }
    if m == 0 {
        return Err(StatsError::Counts { interior: 0, total: 0 });
    }
    let z = z_critical(xi)?;
    Ok(BinomialBound {
        upper: p_hat + z * (p_hat * (1.0 - p_hat) / m as f64).sqrt(),
        normal_approx_valid: normal_approx_valid(p_hat, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn z_examples() {
        assert!((z_critical(0.05).unwrap() - 1.959964).abs() < 1e-6);
        assert!((z_critical(0.3173).unwrap() - 1.0).abs() < 1e-4);
        let small = z_critical(0.9999).unwrap();
        assert!(small > 0.0 && small < 2e-4);
        assert!(z_critical(0.0).is_err());
        assert!(z_critical(1.0).is_err());
        assert!(z_critical(f64::NAN).is_err());
    }

    #[test]
    fn complexity_examples() {
        let p = GuaranteeParams::new(0.5, 0.5, 2f64.sqrt() / 2.0, 2).unwrap();
        let b = sample_complexity_bound(&p);
        let direct = 4.0 * (9f64.powf(2.25) / 4.0 * 2f64.powf(4.5) + 8.0 * 4f64.ln());
        assert!((b - direct).abs() < 1e-9 * direct);
        assert!((b - 3218.9).abs() < 0.01);

        let p = GuaranteeParams::new(1.0, 0.5, 1.0, 1).unwrap();
        assert!((sample_complexity_bound(&p) - 46.16).abs() < 0.01);

        let p = GuaranteeParams::new(0.5, 0.05, 0.028, 2).unwrap();
        assert!(sample_complexity_bound(&p) > 1e9);

        let p = GuaranteeParams::new(0.1, 0.05, 1e-300, 4).unwrap();
        assert_eq!(sample_complexity_bound(&p), f64::INFINITY);
        assert_eq!(required_samples(f64::INFINITY), None);
        assert_eq!(required_samples(46.16), Some(47));
    }

    #[test]
    fn params_validation() {
        assert!(GuaranteeParams::new(0.0, 0.5, 0.1, 2).is_err());
        assert!(GuaranteeParams::new(0.5, 1.0, 0.1, 2).is_err());
        assert!(GuaranteeParams::new(0.5, 0.5, 1.5, 2).is_err());
        assert!(GuaranteeParams::new(0.5, 0.5, 0.1, 0).is_err());
    }

    #[test]
    fn interior_error_examples() {
        assert!((interior_error(0.3, 0.05, 50, 50).unwrap() - 0.3).abs() < 1e-15);
        let e = interior_error(0.1, 0.05, 9500, 10000).unwrap();
        assert!((e - 0.04792).abs() < 5e-6);
        assert!(interior_error(0.05, 0.05, 9000, 10000).unwrap() < 0.0);
        assert_eq!(interior_error(0.5, 0.05, 0, 10).unwrap(), f64::NEG_INFINITY);
        assert!(interior_error(0.5, 0.05, 11, 10).is_err());
        assert!(interior_error(0.5, 0.05, 0, 0).is_err());
    }

    #[test]
    fn estimate_flags() {
        let e = InteriorEstimate::new(9500, 10000, 0.05).unwrap();
        assert!(e.normal_approx_valid);
        assert_eq!(e.p_hat, 0.95);
        assert_eq!(
            e.interior_error(0.1).unwrap(),
            interior_error(0.1, 0.05, 9500, 10000).unwrap()
        );
        assert!(!InteriorEstimate::new(998, 1000, 0.05).unwrap().normal_approx_valid);
    }

    #[test]
    fn binomial_examples() {
        let b = binomial_upper_bound(0.5, 100, 0.05).unwrap();
        assert!((b.upper - 0.59800).abs() < 5e-6);
        assert!(b.normal_approx_valid);
        for p in [0.0, 1.0] {
            let b = binomial_upper_bound(p, 1000, 0.05).unwrap();
            assert_eq!(b.upper, p);
            assert!(!b.normal_approx_valid);
        }
        let w1 = binomial_upper_bound(0.3, 50, 0.1).unwrap().upper - 0.3;
        let w4 = binomial_upper_bound(0.3, 200, 0.1).unwrap().upper - 0.3;
        assert!((w1 - 2.0 * w4).abs() < 1e-15);
        assert!(binomial_upper_bound(1.5, 10, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn interior_error_increases_with_interior_count(
            eps in 0.01f64..1.0,
            xi in 0.001f64..0.999,
            total in 2u64..1_000_000,
            frac in 0.0f64..1.0,
        ) {
            let k = 1 + ((total - 1) as f64 * frac) as u64;
            prop_assume!(k < total);
            let lo = interior_error(eps, xi, k, total).unwrap();
            let hi = interior_error(eps, xi, k + 1, total).unwrap();
            prop_assert!(hi > lo, "{lo} !< {hi}");
            prop_assert!(hi <= eps + 1e-15);
        }

        #[test]
        fn complexity_decreases_with_delta(
            eps in 0.01f64..1.0,
            xi in 0.001f64..0.999,
            d in 1usize..6,
            a in 0.001f64..1.0,
            b in 0.001f64..1.0,
        ) {
            prop_assume!((a - b).abs() > 1e-9);
            let root = (d as f64).sqrt();
            let (lo, hi) = if a < b { (a * root, b * root) } else { (b * root, a * root) };
            let m_lo = sample_complexity_bound(&GuaranteeParams::new(eps, xi, lo, d).unwrap());
            let m_hi = sample_complexity_bound(&GuaranteeParams::new(eps, xi, hi, d).unwrap());
            prop_assert!(m_lo > m_hi);
        }

        #[test]
        fn halving_delta_scales_margin_term(
            eps in 0.05f64..1.0,
            d in 1usize..4,
            delta_frac in 0.01f64..1.0,
        ) {
            // the confidence term vanishes as ξ → 1 only in the limit, so
            // compare differences against the confidence-free part
            let xi = 0.5;
            let delta = delta_frac * (d as f64).sqrt();
            let full = |dl: f64| sample_complexity_bound(&GuaranteeParams::new(eps, xi, dl, d).unwrap());
            let conf = 8.0 * (2.0f64 / xi).ln() / (eps * eps);
            let ratio = (full(delta / 2.0) - conf) / (full(delta) - conf);
            let expected = 2f64.powf(2.25 * d as f64);
            prop_assert!((ratio - expected).abs() < 1e-9 * expected);
        }

        // With p no larger than the binomial upper bound and Δ* = p − (1 − ε) > 0,
        // the chain that lower-bounds the numerator of the interior error holds
        // step by step once m ≥ (2z/Δ*)².
        #[test]
        fn numerator_chain_holds(
            eps in 0.01f64..0.9,
            xi in 0.001f64..0.5,
            gap in 0.001f64..0.2,
            phat_shift in 0.0f64..1.0,
        ) {
            let p = (1.0 - eps + gap).min(1.0);
            let delta_star = p - (1.0 - eps);
            prop_assume!(delta_star > 0.0);
            let z = z_critical(xi).unwrap();
            let m = (2.0 * z / delta_star).powi(2).ceil().max(1.0) as u64;
            let mf = m as f64;
            // p̂ such that p ≤ p̂ + z√(p̂(1−p̂)/m): start at p and shift upward
            let p_hat = p + (1.0 - p) * phat_shift;
            let ub = binomial_upper_bound(p_hat, m, xi).unwrap().upper;
            prop_assume!(p <= ub);
            let s = (p_hat * (1.0 - p_hat) / mf).sqrt();
            let numer = eps - (1.0 - p_hat) - z * s;
            let step1 = p - (1.0 - eps) - 2.0 * z * s;
            let step2 = p - (1.0 - eps) - 2.0 * z * (0.25 / mf).sqrt();
            let step4 = delta_star - 2.0 * z * (0.25 / mf).sqrt();
            let tol = 1e-12;
            prop_assert!(numer >= step1 - tol);
            prop_assert!(step1 >= step2 - tol);
            prop_assert!((step2 - step4).abs() <= tol);
            prop_assert!(step4 >= delta_star / 2.0 - tol);
            prop_assert!(delta_star / 2.0 > 0.0);
        }
    }
}
