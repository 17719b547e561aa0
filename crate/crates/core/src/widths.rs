//! The extremal function `Phi_{q,beta,n} = N_{q,beta} * sign sin(n .)`, the
//! root `theta_n` fixing its maximum point, and the resulting width values.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{phase_cos_sin, EvalPolicy, NeumannParams};
use crate::summation::NeumaierSum;

/// Location of `n y_0` relative to `pi / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `n y_0` in `[pi/2, pi)`, for reduced beta in `[0,1) U [2,3)`.
    HalfClass,
    /// `n y_0` in `[0, pi/2)`, for reduced beta in `[1,2) U [3,4)`.
    ZeroClass,
}

impl Branch {
    pub fn of_beta(beta_reduced: f64) -> Branch {
        if beta_reduced < 1.0 || (2.0..3.0).contains(&beta_reduced) {
            Branch::HalfClass
        } else {
            Branch::ZeroClass
        }
    }

    pub fn bracket(self) -> (f64, f64) {
        match self {
            Branch::HalfClass => (0.5, 1.0),
            Branch::ZeroClass => (0.0, 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaRoot {
    pub q: f64,
    pub beta: f64,
    pub n: u32,
    pub theta: f64,
    pub residual: f64,
    pub branch: Branch,
    pub bracket: (f64, f64),
    pub iterations: u32,
    /// The root is known in closed form (integer beta).
    pub exact: bool,
}

impl ThetaRoot {
    pub fn y0(&self) -> f64 {
        self.theta * PI / self.n as f64
    }
}

/// `(sin(pi x), cos(pi x))`, exact when `2x` is an integer.
pub(crate) fn sin_cos_pi(x: f64) -> (f64, f64) {
    let r = x.rem_euclid(2.0);
    let h = 2.0 * r;
    if h.fract() == 0.0 {
        match h as i64 {
            0 | 4 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        (r * PI).sin_cos()
    }
}

/// `u^nu` cutoff for the theta series.
const THETA_SERIES_EPS: f64 = 1e-19;
const THETA_SERIES_CAP: usize = 1_000_000;

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParams("n must be a positive integer".into()))
    } else {
        Ok(())
    }
}

/// Left side of the theta equation,
/// `F(theta) = sum_{nu >= 0} u^nu / (2 nu + 1) cos((2 nu + 1) theta pi - beta pi / 2)`
/// with `u = q^{2n}`.
pub fn theta_equation(params: NeumannParams, n: u32, theta: f64) -> f64 {
    let u = params.q.powi(2 * n as i32);
    let b = params.beta_reduced();
    let mut acc = NeumaierSum::new();
    let mut un = 1.0;
    for nu in 0..THETA_SERIES_CAP {
        let m = (2 * nu + 1) as f64;
        let (_, c) = sin_cos_pi(m * theta - b / 2.0);
        acc += un / m * c;
        un *= u;
        if un < THETA_SERIES_EPS {
            break;
        }
    }
    acc.sum()
}

pub fn solve_theta(params: NeumannParams, n: u32) -> Result<ThetaRoot> {
    params.validate()?;
    check_n(n)?;
    let b = params.beta_reduced();
    let branch = Branch::of_beta(b);
    let bracket = branch.bracket();
    let exact_theta = if b == 0.0 || b == 2.0 {
        Some(0.5)
    } else if b == 1.0 || b == 3.0 {
        Some(0.0)
    } else {
        None
    };
    let mut root = ThetaRoot {
        q: params.q,
        beta: params.beta,
        n,
        theta: 0.0,
        residual: 0.0,
        branch,
        bracket,
        iterations: 0,
        exact: exact_theta.is_some(),
    };
    if let Some(theta) = exact_theta {
        root.theta = theta;
        root.residual = theta_equation(params, n, theta).abs();
        return Ok(root);
    }

    let f = |t: f64| theta_equation(params, n, t);
    let (mut lo, mut hi) = bracket;
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 || f_hi == 0.0 {
        root.theta = if f_lo == 0.0 { lo } else { hi };
        return Ok(root);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::BracketFailure {
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut iterations = 0;
    while iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = f(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let (r_lo, r_hi) = (f(lo).abs(), f(hi).abs());
    root.theta = if r_lo <= r_hi { lo } else { hi };
    root.residual = r_lo.min(r_hi);
    root.iterations = iterations;
    Ok(root)
}

/// Phase data at the root, derived from the theta equation itself rather than
/// from `cos(theta pi - beta pi / 2)` evaluated in floating point, so that
/// quantities of size `q^{2n}` keep full relative accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPhase {
    pub u: f64,
    /// `cos(theta pi - beta pi / 2) / u`.
    pub c_over_u: f64,
    /// `cos(theta pi - beta pi / 2)`.
    pub cos_phase: f64,
    /// `sign sin(theta pi - beta pi / 2)`.
    pub sign: f64,
    /// `1 - |sin(theta pi - beta pi / 2)|`.
    pub one_minus_abs_sin: f64,
    /// `sum_{nu >= 1} u^{nu-1} / (2 nu + 1)^2 sin((2 nu + 1) theta pi - beta pi / 2)`.
    pub t_over_u: f64,
}

impl RootPhase {
    pub fn at(root: &ThetaRoot) -> RootPhase {
        let u = root.q.powi(2 * root.n as i32);
        let b = crate::kernel::reduce_beta(root.beta);
        let mut c_acc = NeumaierSum::new();
        let mut t_acc = NeumaierSum::new();
        let mut un = 1.0;
        for nu in 1..THETA_SERIES_CAP {
            let m = (2 * nu + 1) as f64;
            let (s, c) = sin_cos_pi(m * root.theta - b / 2.0);
            c_acc += -un / m * c;
            t_acc += un / (m * m) * s;
            un *= u;
            if un < THETA_SERIES_EPS {
                break;
            }
        }
        let c_over_u = c_acc.sum();
        let cos_phase = (u * c_over_u).clamp(-1.0, 1.0);
        let (s_direct, _) = sin_cos_pi(root.theta - b / 2.0);
        let sign = if s_direct < 0.0 { -1.0 } else { 1.0 };
        let root_sin = (1.0 - cos_phase * cos_phase).sqrt();
        RootPhase {
            u,
            c_over_u,
            cos_phase,
            sign,
            one_minus_abs_sin: cos_phase * cos_phase / (1.0 + root_sin),
            t_over_u: t_acc.sum(),
        }
    }

    /// `D` in `(pi/4) width = (q^n / n)(1 + u D)`.
    pub fn deviation(&self) -> f64 {
        let root_sin = (1.0 - self.cos_phase * self.cos_phase).sqrt();
        -self.c_over_u * self.cos_phase / (1.0 + root_sin) + self.sign * self.t_over_u
    }
}

/// `Phi_{q,beta,n}(t) = (4/pi) sum q^{(2nu+1)n} / (n (2nu+1)^2) sin((2nu+1) n t - beta pi / 2)`.
pub fn eval_phi(params: NeumannParams, n: u32, t: f64, policy: &EvalPolicy) -> Result<f64> {
    params.validate()?;
    policy.validate()?;
    check_n(n)?;
    let q = params.q;
    let nf = n as f64;
    let qn = q.powi(n as i32);
    let u = qn * qn;
    let (cb, sb) = phase_cos_sin(params.beta);
    let base = (nf * t).rem_euclid(TAU);
    let scale = 4.0 / (PI * nf);
    let mut acc = NeumaierSum::new();
    let mut coef = qn;
    let mut nu = 0usize;
    loop {
        let m = (2 * nu + 1) as f64;
        if coef == 0.0 || scale * coef / (m * m * (1.0 - u)) <= policy.abs_tol {
            break;
        }
        if nu >= policy.max_terms {
            return Err(Error::TolUnreachable {
                abs_tol: policy.abs_tol,
                max_terms: policy.max_terms,
            });
        }
        let (s, c) = (m * base).sin_cos();
        acc += coef / (m * m) * (s * cb - c * sb);
        coef *= u;
        nu += 1;
    }
    Ok(scale * acc.sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub q: f64,
    pub beta: f64,
    pub n: u32,
    pub theta: f64,
    pub y0: f64,
    /// Common value of `d_{2n}`, `d_{2n-1}` and `E_n` (for `n >= n_{q,beta}`).
    pub width: f64,
    pub gamma_n: f64,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
    pub sandwich_holds: bool,
    pub branch: Branch,
    pub theta_residual: f64,
}

/// Width `|Phi(y_0)|` together with its decomposition
/// `width = (q^n / n)(4/pi + gamma_n q^{2n} / (1 - q^{2n}))`.
pub fn exact_width(params: NeumannParams, n: u32) -> Result<WidthReport> {
    let root = solve_theta(params, n)?;
    Ok(width_from_root(&root))
}

pub fn width_from_root(root: &ThetaRoot) -> WidthReport {
    let phase = RootPhase::at(root);
    let u = phase.u;
    let d = phase.deviation();
    let qn_over_n = root.q.powi(root.n as i32) / root.n as f64;
    let width = 4.0 / PI * qn_over_n * (1.0 + u * d);
    let gamma_n = 4.0 / PI * (1.0 - u) * d;
    let margin = 4.0 / 9.0 * u / (1.0 - u);
    let sandwich_lo = qn_over_n * (1.0 - margin);
    let sandwich_hi = qn_over_n * (1.0 + margin);
    let scaled = PI / 4.0 * width;
    let slack = 8.0 * f64::EPSILON;
    let precise = d.abs() * (1.0 - u) <= 4.0 / 9.0;
    let direct = scaled >= sandwich_lo * (1.0 - slack) && scaled <= sandwich_hi * (1.0 + slack);
    WidthReport {
        q: root.q,
        beta: root.beta,
        n: root.n,
        theta: root.theta,
        y0: root.y0(),
        width,
        gamma_n,
        sandwich_lo,
        sandwich_hi,
        sandwich_holds: precise && direct,
        branch: root.branch,
        theta_residual: root.residual,
    }
}

/// `|cos(theta_n pi - beta pi / 2)|` and its bound `q^{2n} / (3 (1 - q^{2n}))`.
pub fn theta_cos_bound(params: NeumannParams, n: u32) -> Result<(f64, f64)> {
    let root = solve_theta(params, n)?;
    let phase = RootPhase::at(&root);
    Ok((phase.cos_phase.abs(), phase.u / (3.0 * (1.0 - phase.u))))
}

/// Memo of theta roots keyed by the bit patterns of `(q, beta, n)`, safe for
/// concurrent readers and writers.
#[derive(Debug, Default)]
pub struct ThetaCache {
    map: RwLock<HashMap<(u64, u64, u32), ThetaRoot>>,
}

impl ThetaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_solve(&self, params: NeumannParams, n: u32) -> Result<ThetaRoot> {
        let key = (params.q.to_bits(), params.beta.to_bits(), n);
        if let Some(r) = self.map.read().expect("theta cache poisoned").get(&key) {
            return Ok(*r);
        }
        let root = solve_theta(params, n)?;
        self.map
            .write()
            .expect("theta cache poisoned")
            .insert(key, root);
        Ok(root)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("theta cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
