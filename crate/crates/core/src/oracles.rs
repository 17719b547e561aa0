//! Slow, independent reference computations. Nothing here calls the
//! evaluators, root finders or threshold checks of the rest of the crate,
//! so agreement with them is a genuine cross-check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::NeumannParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Grid points per period of `|Phi|`.
    pub grid_points: usize,
    /// Golden-section stopping width in `t`.
    pub golden_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_points: 4096,
            golden_tol: 1e-13,
        }
    }
}

/// `Phi_n(t) = (4/pi) sum_nu q^{(2nu+1)n} / (n (2nu+1)^2) sin((2nu+1) n t - beta pi / 2)`,
/// summed naively until the terms drop below `1e-22`.
pub fn phi_plain(params: NeumannParams, n: u32, t: f64) -> f64 {
    let nf = n as f64;
    let mut acc = 0.0;
    let mut k = 1.0;
    loop {
        let c = params.q.powf(k * nf) / (nf * k * k);
        acc += c * (k * nf * t - params.beta * PI / 2.0).sin();
        if c < 1e-22 {
            break;
        }
        k += 2.0;
    }
    4.0 / PI * acc
}

/// `Phi_n(a) - Phi_n(b)` summed through `sin x - sin y = 2 cos((x+y)/2) sin((x-y)/2)`,
/// so that nearby points are compared without cancellation.
fn phi_diff_plain(params: NeumannParams, n: u32, a: f64, b: f64) -> f64 {
    let nf = n as f64;
    let mut acc = 0.0;
    let mut k = 1.0;
    loop {
        let c = params.q.powf(k * nf) / (nf * k * k);
        let mid = k * nf * 0.5 * (a + b) - params.beta * PI / 2.0;
        acc += 2.0 * c * mid.cos() * (k * nf * 0.5 * (a - b)).sin();
        if c < 1e-22 {
            break;
        }
        k += 2.0;
    }
    4.0 / PI * acc
}

/// Whether `|Phi_n(a)| > |Phi_n(b)|`.
fn larger_abs(params: NeumannParams, n: u32, a: f64, b: f64) -> bool {
    let (fa, fb) = (phi_plain(params, n, a), phi_plain(params, n, b));
    if fa.signum() == fb.signum() {
        fa.signum() * phi_diff_plain(params, n, a, b) > 0.0
    } else {
        fa.abs() > fb.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    pub value: f64,
    /// Maximiser of `|Phi_n|`, reduced to `[0, pi/n)`.
    pub argmax: f64,
}

/// `||Phi_n||_C` by a uniform grid over one period of `|Phi_n|` followed by
/// golden-section refinement of the best cell.
pub fn supnorm_phi(params: NeumannParams, n: u32, cfg: &OracleConfig) -> Result<SupNorm> {
    params.validate()?;
    if n == 0 || cfg.grid_points < 3 {
        return Err(Error::InvalidParams("need n >= 1 and at least 3 grid points".into()));
    }
    let period = PI / n as f64;
    let h = period / cfg.grid_points as f64;
    let f = |t: f64| phi_plain(params, n, t).abs();
    let best = (0..cfg.grid_points)
        .map(|i| (i, f(i as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best.0 as f64 - 1.0) * h, (best.0 as f64 + 1.0) * h);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    while b - a > cfg.golden_tol {
        if larger_abs(params, n, c, d) {
            b = d;
            d = c;
            c = b - inv_phi * (b - a);
        } else {
            a = c;
            c = d;
            d = a + inv_phi * (b - a);
        }
    }
    let t = 0.5 * (a + b);
    let value = f(t).max(best.1);
    let argmax = if f(t) >= best.1 { t } else { best.0 as f64 * h };
    Ok(SupNorm {
        value,
        argmax: argmax.rem_euclid(period),
    })
}

/// Distance between `a` and `b` modulo `period`.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// `sum_nu u^nu / (2nu+1) cos((2nu+1) theta pi - beta pi / 2)` with `u = q^{2n}`.
pub fn theta_function_plain(params: NeumannParams, n: u32, theta: f64) -> f64 {
    let u = params.q.powf(2.0 * n as f64);
    let mut acc = 0.0;
    let mut un = 1.0;
    let mut nu = 0.0;
    while un > 1e-24 {
        acc += un / (2.0 * nu + 1.0) * ((2.0 * nu + 1.0) * theta * PI - params.beta * PI / 2.0).cos();
        un *= u;
        nu += 1.0;
    }
    acc
}

/// An interval of the scan grid containing a zero; `lo == hi` marks a grid
/// point where the function is numerically zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Zeros of the theta function on `[0, 1)` located on a grid of `points` cells.
pub fn theta_sign_scan(params: NeumannParams, n: u32, points: usize) -> Vec<SignInterval> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    let mut zero_since_last = false;
    for i in 0..points {
        let th = i as f64 / points as f64;
        let v = theta_function_plain(params, n, th);
        if v.abs() <= 1e-15 {
            out.push(SignInterval { lo: th, hi: th });
            zero_since_last = true;
            continue;
        }
        if let Some((pt, pv)) = last {
            if pv.signum() != v.signum() && !zero_since_last {
                out.push(SignInterval { lo: pt, hi: th });
            }
        }
        last = Some((th, v));
        zero_since_last = false;
    }
    out
}

/// `N_{q,beta}(t)` summed term by term up to `k = terms`.
pub fn neumann_slow(params: NeumannParams, t: f64, terms: u32) -> f64 {
    (1..=terms)
        .map(|k| {
            let k = k as f64;
            params.q.powf(k) / k * (k * t - params.beta * PI / 2.0).cos()
        })
        .sum()
}

/// `Psi_{beta,1}(t)` for the Neumann coefficients, up to `k = terms`.
pub fn psi_beta1_slow(params: NeumannParams, t: f64, terms: u32) -> f64 {
    (1..=terms)
        .map(|k| {
            let k = k as f64;
            params.q.powf(k) / (k * k) * (k * t - (params.beta + 1.0) * PI / 2.0).cos()
        })
        .sum()
}

/// `P_q(t) = 1/2 + 2 sum_j cos(j t) q^j / (1 + q^{2j})` up to `j = terms`.
pub fn pq_slow(q: f64, t: f64, terms: u32) -> f64 {
    0.5 + 2.0
        * (1..=terms)
            .map(|j| {
                let j = j as f64;
                (j * t).cos() * q.powf(j) / (1.0 + q.powf(2.0 * j))
            })
            .sum::<f64>()
}

/// `G_q(n, x) = sum_nu q^{(2nu+1)n} cos((2nu+1)x) / (2nu+1)` up to `nu = terms`.
pub fn gq_series(q: f64, n: u32, x: f64, terms: u32) -> f64 {
    (0..=terms)
        .map(|nu| {
            let m = (2 * nu + 1) as f64;
            q.powf(m * n as f64) * (m * x).cos() / m
        })
        .sum()
}

/// `H_q(n, x) = sum_nu q^{(2nu+1)n} sin((2nu+1)x) / (2nu+1)` up to `nu = terms`.
pub fn hq_series(q: f64, n: u32, x: f64, terms: u32) -> f64 {
    (0..=terms)
        .map(|nu| {
            let m = (2 * nu + 1) as f64;
            q.powf(m * n as f64) * (m * x).sin() / m
        })
        .sum()
}

/// Partial sum `sum_{k<=terms} sin(k t) / k` of the sawtooth.
pub fn bernoulli_partial(t: f64, terms: u32) -> f64 {
    (1..=terms).map(|k| (k as f64 * t).sin() / k as f64).sum()
}

/// Both threshold conditions at `(q, n)`, with every inequality cross-multiplied
/// so that no side is divided by a small quantity.
pub fn threshold_conditions_direct(q: f64, n: u64) -> (bool, bool) {
    let nf = n as f64;
    let r = nf.sqrt();
    let qn = q.powf(nf);
    let denom = 1.0 - qn * qn;
    let n2 = nf * nf;
    let m2 = (nf - 1.0) * (nf - 1.0);
    let first = 15.0 * n2 * qn <= 2.0 * q.powf(r) * denom;
    let second = 168.0 * n2 * n2 * m2 * qn <= 8.0 * denom * (8.0 * n2 * (2.0 * nf - 1.0) - 7.0 * PI * PI * m2);

    let lower = (0.5 + 2.0 * q / ((1.0 + q * q) * (1.0 - q)))
        * (4.0 / (1.0 - q * q) * ((1.0 - q) / (1.0 + q)).ln()).exp();
    let omq = 1.0 - q;
    let gamma_num = 1512.0 * nf * (r - 1.0) * omq * q.powf(r) + 800.0 * (2.0 * r - 1.0) * q;
    let gamma_den = 315.0 * nf * (r - 1.0) * omq * omq;
    (first && second, gamma_num <= lower * gamma_den)
}

/// Smallest `n` in `[2, cap]` meeting both conditions of [`threshold_conditions_direct`].
pub fn nq_direct(q: f64, cap: u64) -> Option<u64> {
    (2..=cap).find(|&n| {
        let (a, b) = threshold_conditions_direct(q, n);
        a && b
    })
}
