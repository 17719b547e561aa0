//! The two sufficient conditions on `(q, n)` and the threshold indices
//! `n_q` and `n_{q,beta}` they define.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{pq_lower_bound, validate_q};

/// One inequality `lhs <= rhs`, compared exactly in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ConditionCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub n: u64,
    pub spectral: ConditionCheck,
    pub positivity: ConditionCheck,
}

impl ThresholdVerdict {
    pub fn holds(&self) -> bool {
        self.spectral.holds && self.positivity.holds
    }
}

fn check_args(q: f64, n: u64) -> Result<()> {
    validate_q(q)?;
    if n < 2 {
        return Err(Error::Domain(format!("condition requires n >= 2, got {n}")));
    }
    Ok(())
}

/// `q^n / (1 - q^{2n}) <= min(2 q^{sqrt n} / (15 n^2),
/// (8 / (3 n^2)) ((2n - 1) / (7 (n-1)^2) - pi^2 / (8 n^2)))`.
pub fn check_spectral_condition(q: f64, n: u64) -> Result<ConditionCheck> {
    check_args(q, n)?;
    let nf = n as f64;
    let qn = q.powf(nf);
    let lhs = qn / (1.0 - qn * qn);
    let first = 2.0 * q.powf(nf.sqrt()) / (15.0 * nf * nf);
    let second = 8.0 / (3.0 * nf * nf)
        * ((2.0 * nf - 1.0) / (7.0 * (nf - 1.0).powi(2)) - PI * PI / (8.0 * nf * nf));
    Ok(ConditionCheck::new(lhs, first.min(second)))
}

/// Left side of the positivity condition; it also bounds the sum of the
/// five error terms of the midpoint-derivative expansion.
pub fn gamma_sum_bound(q: f64, n: u64) -> f64 {
    let nf = n as f64;
    let r = nf.sqrt();
    24.0 / (5.0 * (1.0 - q)) * q.powf(r)
        + 160.0 / 63.0 * (2.0 * r - 1.0) / (nf * (r - 1.0)) * q / (1.0 - q).powi(2)
}

/// `gamma_sum_bound(q, n) <= pq_lower_bound(q)`.
pub fn check_positivity_condition(q: f64, n: u64) -> Result<ConditionCheck> {
    check_args(q, n)?;
    Ok(ConditionCheck::new(gamma_sum_bound(q, n), pq_lower_bound(q)))
}

pub fn evaluate(q: f64, n: u64) -> Result<ThresholdVerdict> {
    Ok(ThresholdVerdict {
        n,
        spectral: check_spectral_condition(q, n)?,
        positivity: check_positivity_condition(q, n)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NqResult {
    pub n: u64,
    /// First index above `n` (and below `min(cap, 4n)`) where a condition fails again.
    pub later_failure: Option<u64>,
}

/// Smallest `n` in `[2, cap]` satisfying both conditions, by linear scan.
pub fn compute_nq(q: f64, cap: u64) -> Result<NqResult> {
    validate_q(q)?;
    let found = (2..=cap)
        .find(|&n| evaluate(q, n).map(|v| v.holds()).unwrap_or(false))
        .ok_or(Error::NotFound { cap })?;
    let limit = cap.min(found.saturating_mul(4));
    let later_failure = ((found + 1)..limit).find(|&n| !evaluate(q, n).map(|v| v.holds()).unwrap_or(false));
    Ok(NqResult {
        n: found,
        later_failure,
    })
}

/// Integer-beta test on the raw value: `2.0000000001` is not an integer.
pub fn beta_is_integer(beta: f64) -> bool {
    beta.rem_euclid(1.0) == 0.0
}

/// Largest `q` for which `n_{q,beta} = 1` at non-integer beta.
pub const Q_SMALL_NONINTEGER: f64 = 0.193864;
/// Largest `q` for which `n_{q,beta} = 1` at integer beta.
pub const Q_SMALL_INTEGER: f64 = 0.2;

/// `n_{q,beta}`: 1 for small `q`, otherwise `n_q`.
pub fn compute_nq_beta(q: f64, beta: f64, cap: u64) -> Result<u64> {
    validate_q(q)?;
    if !beta.is_finite() {
        return Err(Error::InvalidParams(format!("beta must be finite, got {beta}")));
    }
    let small = if beta_is_integer(beta) {
        q <= Q_SMALL_INTEGER
    } else {
        q <= Q_SMALL_NONINTEGER
    };
    if small {
        Ok(1)
    } else {
        compute_nq(q, cap).map(|r| r.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_condition_examples() {
        let c = check_spectral_condition(0.2, 25).unwrap();
        assert!(c.holds);
        assert!((c.lhs - 3.355_443_2e-18).abs() < 1e-24);
        let c = check_spectral_condition(0.2, 2).unwrap();
        assert!(c.rhs > 0.0);
        assert!(!check_spectral_condition(0.999, 2).unwrap().holds);
    }

    #[test]
    fn positivity_crossovers() {
        assert!(!check_positivity_condition(0.2, 12).unwrap().holds);
        assert!(check_positivity_condition(0.2, 13).unwrap().holds);
        assert!(!check_positivity_condition(0.5, 1700).unwrap().holds);
        assert!(check_positivity_condition(0.5, 1750).unwrap().holds);
    }

    #[test]
    fn n_below_two_is_a_domain_error() {
        assert!(matches!(check_positivity_condition(0.2, 1), Err(Error::Domain(_))));
        assert!(matches!(check_spectral_condition(0.2, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn nq_values() {
        assert_eq!(compute_nq(0.2, 1000).unwrap().n, 13);
        assert_eq!(compute_nq(0.05, 1000).unwrap().n, 4);
        assert!(matches!(compute_nq(0.95, 1000), Err(Error::NotFound { cap: 1000 })));
    }

    #[test]
    fn nq_beta_case_split() {
        assert_eq!(compute_nq_beta(0.15, 2.0, 100).unwrap(), 1);
        assert_eq!(compute_nq_beta(0.15, 0.5, 100).unwrap(), 1);
        assert_eq!(compute_nq_beta(0.2, 3.0, 100).unwrap(), 1);
        assert_eq!(
            compute_nq_beta(0.197, 0.5, 10_000).unwrap(),
            compute_nq(0.197, 10_000).unwrap().n
        );
        assert!(!beta_is_integer(2.000_000_000_1));
        assert!(beta_is_integer(-3.0));
    }
}
