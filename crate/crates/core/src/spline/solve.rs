//! Direct solve of the fundamental SK-spline interpolation system.
//!
//! The unknowns are `alpha_0, ..., alpha_{2n}` in
//! `S(t) = alpha_0 + sum_{m=1}^{2n} alpha_m Psi_{beta,1}(t - x_m)`, with
//! `S(y + x_k) = delta_{0k}` for `k = 0..2n-1` and `sum alpha_m = 0`.
//! The matrix has condition numbers near `q^{-n}`, so the system is built and
//! solved in double-double arithmetic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::kernel::{eval_psi_beta1, neumann_type_dd, EvalPolicy, KernelSpec};
use crate::linalg::{solve_refined, Matrix};

/// Pivot-ratio estimate above which the system is treated as singular.
const MAX_CONDITION: f64 = 1e26;
const DD_SERIES_TOL: f64 = 1e-34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SKSplineSolution {
    pub n: u32,
    pub y: f64,
    /// `alpha_0, ..., alpha_{2n}`.
    pub alpha: Vec<f64>,
    /// Derivative of the spline on `((k-1) pi / n, k pi / n)`, k = 1..2n.
    pub midpoint_derivs: Vec<f64>,
    /// `max_k |S(y_k) - delta_{0k}|`.
    pub residual: f64,
    /// `sum_{m=1}^{2n} alpha_m` after the solve.
    pub alpha_sum: f64,
    /// Pivot-ratio condition estimate.
    pub condition: f64,
    #[serde(skip)]
    alpha_dd: Vec<Dd>,
}

/// `B_1(num pi / den)` in double-double.
fn bernoulli_dd(num: i64, den: i64) -> Dd {
    let r = num.rem_euclid(2 * den);
    if r == 0 {
        Dd::ZERO
    } else {
        Dd::PI.mul_f64((den - r) as f64).div_f64((2 * den) as f64)
    }
}

fn bernoulli_dd_at(t: Dd) -> Dd {
    let k = (t.hi / (2.0 * PI)).floor();
    let mut r = t - Dd::TAU.mul_f64(k);
    if r.hi < 0.0 {
        r += Dd::TAU;
    }
    if r.hi >= 2.0 * PI {
        r -= Dd::TAU;
    }
    if r.hi == 0.0 && r.lo == 0.0 {
        Dd::ZERO
    } else {
        (Dd::PI - r).mul_f64(0.5)
    }
}

impl SKSplineSolution {
    /// Derivative `sum alpha_m B_1(t - x_m)` at an arbitrary point.
    pub fn derivative_at(&self, t: f64) -> f64 {
        let n = self.n as f64;
        let mut acc = Dd::ZERO;
        for (m, a) in self.alpha_dd.iter().enumerate().skip(1) {
            let arg = Dd::from_f64(t) - Dd::PI.mul_f64(m as f64).div_f64(n);
            acc += *a * bernoulli_dd_at(arg);
        }
        acc.to_f64()
    }
}

/// Solves for the spline with `S(y + k pi / n) = delta_{0k}`.
pub fn solve_fundamental_spline(spec: &KernelSpec, n: u32, y: f64) -> Result<SKSplineSolution> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be a positive integer".into()));
    }
    if !y.is_finite() {
        return Err(Error::InvalidParams(format!("shift must be finite, got {y}")));
    }
    let two_n = 2 * n as usize;
    let dim = two_n + 1;

    // Psi_{beta,1}(y + d pi / n) for d = 0..2n-1
    let mut values = Vec::with_capacity(two_n);
    for d in 0..two_n {
        let v = match spec.as_neumann() {
            Some(p) => {
                let t = Dd::from_f64(y) + Dd::PI.mul_f64(d as f64).div_f64(n as f64);
                neumann_type_dd(p.q, 2, p.beta + 1.0, t, DD_SERIES_TOL)?
            }
            None => {
                let t = y + d as f64 * PI / n as f64;
                Dd::from_f64(eval_psi_beta1(spec, t, &EvalPolicy::with_tol(1e-17))?)
            }
        };
        values.push(v);
    }

    let a = Matrix::from_fn(dim, |k, c| {
        if k == two_n {
            if c == 0 {
                Dd::ZERO
            } else {
                Dd::ONE
            }
        } else if c == 0 {
            Dd::ONE
        } else {
            let d = (k as i64 - c as i64).rem_euclid(two_n as i64) as usize;
            values[d]
        }
    });
    let mut rhs = vec![Dd::ZERO; dim];
    rhs[0] = Dd::ONE;
    let (alpha_dd, condition) = solve_refined(&a, &rhs).ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
    })?;
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }

    let ax = a.mul_vec(&alpha_dd);
    let residual = ax
        .iter()
        .zip(&rhs)
        .take(two_n)
        .map(|(l, r)| (*l - *r).abs().to_f64())
        .fold(0.0, f64::max);
    let alpha_sum = alpha_dd[1..]
        .iter()
        .fold(Dd::ZERO, |s, a| s + *a)
        .to_f64();

    let den = 2 * n as i64;
    let midpoint_derivs = (1..=two_n as i64)
        .map(|k| {
            let mut acc = Dd::ZERO;
            for m in 1..=two_n as i64 {
                acc += alpha_dd[m as usize] * bernoulli_dd(2 * k - 1 - 2 * m, den);
            }
            acc.to_f64()
        })
        .collect();

    Ok(SKSplineSolution {
        n,
        y,
        alpha: alpha_dd.iter().map(|a| a.to_f64()).collect(),
        midpoint_derivs,
        residual,
        alpha_sum,
        condition,
        alpha_dd,
    })
}
