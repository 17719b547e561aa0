//! Kernel evaluators: the Neumann kernel, general `Psi_beta` / `Psi_{beta,1}`
//! sums, the Bernoulli sawtooth, `P_q`, and the closed forms `G_q`, `H_q`.
//!
//! Every series is truncated at the first index whose geometric tail bound is
//! below `EvalPolicy::abs_tol`, and summed with Neumaier compensation.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPolicy {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy {
            abs_tol: 1e-14,
            max_terms: 1_000_000,
        }
    }
}

impl EvalPolicy {
    pub fn with_tol(abs_tol: f64) -> Self {
        EvalPolicy {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidParams(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParams("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reduces a phase to `[0, 4)`.
pub fn reduce_beta(beta: f64) -> f64 {
    let r = beta.rem_euclid(4.0);
    if r >= 4.0 {
        0.0
    } else {
        r
    }
}

/// `(cos, sin)` of `beta * pi / 2`, exact when `beta` is an integer.
pub fn phase_cos_sin(beta: f64) -> (f64, f64) {
    let b = reduce_beta(beta);
    if b == 0.0 {
        (1.0, 0.0)
    } else if b == 1.0 {
        (0.0, 1.0)
    } else if b == 2.0 {
        (-1.0, 0.0)
    } else if b == 3.0 {
        (0.0, -1.0)
    } else {
        let (s, c) = (b * FRAC_PI_2).sin_cos();
        (c, s)
    }
}

pub fn validate_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams("q out of (0,1)".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannParams {
    pub q: f64,
    pub beta: f64,
}

impl NeumannParams {
    pub fn new(q: f64, beta: f64) -> Result<Self> {
        validate_q(q)?;
        if !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must be finite, got {beta}")));
        }
        Ok(NeumannParams { q, beta })
    }

    pub fn validate(&self) -> Result<()> {
        NeumannParams::new(self.q, self.beta).map(|_| ())
    }

    pub fn beta_reduced(&self) -> f64 {
        reduce_beta(self.beta)
    }

    pub fn beta_is_integer(&self) -> bool {
        self.beta.rem_euclid(1.0) == 0.0
    }
}

type CoeffFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// A positive summable coefficient sequence `psi(k)` with a phase `beta` and a
/// certified tail bound `tail_bound(K) >= sum_{k > K} psi(k)`.
#[derive(Clone)]
pub struct KernelSpec {
    psi: CoeffFn,
    tail_bound: CoeffFn,
    pub beta: f64,
    neumann_q: Option<f64>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("beta", &self.beta)
            .field("neumann_q", &self.neumann_q)
            .finish_non_exhaustive()
    }
}

impl KernelSpec {
    pub fn new(
        psi: impl Fn(u64) -> f64 + Send + Sync + 'static,
        tail_bound: impl Fn(u64) -> f64 + Send + Sync + 'static,
        beta: f64,
    ) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must be finite, got {beta}")));
        }
        Ok(KernelSpec {
            psi: Arc::new(psi),
            tail_bound: Arc::new(tail_bound),
            beta,
            neumann_q: None,
        })
    }

    /// `psi(k) = q^k / k`.
    pub fn neumann(params: NeumannParams) -> Result<Self> {
        params.validate()?;
        let q = params.q;
        Ok(KernelSpec {
            psi: Arc::new(move |k| q.powi(k as i32) / k as f64),
            tail_bound: Arc::new(move |k| q.powi(k as i32 + 1) / ((k + 1) as f64 * (1.0 - q))),
            beta: params.beta,
            neumann_q: Some(q),
        })
    }

    pub fn psi(&self, k: u64) -> f64 {
        (self.psi)(k)
    }

    pub fn tail_bound(&self, k: u64) -> f64 {
        (self.tail_bound)(k)
    }

    /// Neumann parameters when the spec was built by [`KernelSpec::neumann`].
    pub fn as_neumann(&self) -> Option<NeumannParams> {
        self.neumann_q.map(|q| NeumannParams { q, beta: self.beta })
    }
}

/// Smallest `K` with `bound(K) <= tol`, using doubling and bisection on a
/// nonincreasing bound.
fn truncation_index(bound: impl Fn(u64) -> f64, policy: &EvalPolicy) -> Result<usize> {
    policy.validate()?;
    let cap = policy.max_terms as u64;
    let unreachable = Error::TolUnreachable {
        abs_tol: policy.abs_tol,
        max_terms: policy.max_terms,
    };
    if bound(0) <= policy.abs_tol {
        return Ok(0);
    }
    let mut hi = 1u64;
    while bound(hi) > policy.abs_tol {
        if hi >= cap {
            return Err(unreachable);
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = hi / 2;
    // bound(lo) > tol, bound(hi) <= tol
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound(mid) <= policy.abs_tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi as usize)
}

/// Truncation index for `sum q^k / k^p` so that the geometric tail
/// `q^{K+1} / ((K+1)^p (1-q))` is at most `policy.abs_tol`.
pub fn geometric_terms(q: f64, p: i32, policy: &EvalPolicy) -> Result<usize> {
    let lq = q.ln();
    let l1q = (1.0 - q).ln();
    truncation_index(
        |k| {
            let k1 = (k + 1) as f64;
            (k1 * lq - p as f64 * k1.ln() - l1q).exp()
        },
        policy,
    )
}

/// `sum_{k=1}^{K} c_k cos(k t - beta pi / 2)` with `c_k = q^k / k^p`.
fn neumann_type(q: f64, p: i32, beta: f64, t: f64, k_max: usize) -> f64 {
    let (cb, sb) = phase_cos_sin(beta);
    let t = t.rem_euclid(TAU);
    let mut acc = NeumaierSum::new();
    let mut qk = 1.0;
    for k in 1..=k_max {
        qk *= q;
        if qk == 0.0 {
            break;
        }
        let (s, c) = (k as f64 * t).sin_cos();
        let coeff = qk / (k as f64).powi(p);
        acc += coeff * (c * cb + s * sb);
    }
    acc.sum()
}

pub fn eval_neumann(params: NeumannParams, t: f64, policy: &EvalPolicy) -> Result<f64> {
    params.validate()?;
    let k = geometric_terms(params.q, 1, policy)?;
    Ok(neumann_type(params.q, 1, params.beta, t, k))
}

/// `Psi_beta(t) = sum psi(k) cos(k t - beta pi / 2)`.
pub fn eval_psi_beta(spec: &KernelSpec, t: f64, policy: &EvalPolicy) -> Result<f64> {
    if let Some(p) = spec.as_neumann() {
        return eval_neumann(p, t, policy);
    }
    let k_max = truncation_index(|k| spec.tail_bound(k), policy)?;
    Ok(general_series(spec, spec.beta, 0, t, k_max))
}

/// `Psi_{beta,1}(t) = sum psi(k) / k cos(k t - (beta + 1) pi / 2)`, the
/// convolution of `Psi_beta` with `B_1`.
pub fn eval_psi_beta1(spec: &KernelSpec, t: f64, policy: &EvalPolicy) -> Result<f64> {
    if let Some(p) = spec.as_neumann() {
        let k = geometric_terms(p.q, 2, policy)?;
        return Ok(neumann_type(p.q, 2, p.beta + 1.0, t, k));
    }
    let k_max = truncation_index(|k| spec.tail_bound(k) / (k + 1) as f64, policy)?;
    Ok(general_series(spec, spec.beta + 1.0, 1, t, k_max))
}

fn general_series(spec: &KernelSpec, beta: f64, p: i32, t: f64, k_max: usize) -> f64 {
    let (cb, sb) = phase_cos_sin(beta);
    let t = t.rem_euclid(TAU);
    let mut acc = NeumaierSum::new();
    for k in 1..=k_max as u64 {
        let (s, c) = (k as f64 * t).sin_cos();
        acc += spec.psi(k) / (k as f64).powi(p) * (c * cb + s * sb);
    }
    acc.sum()
}

/// Bernoulli sawtooth `B_1(t) = sum sin(k t) / k`, in closed form.
pub fn eval_bernoulli(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r == 0.0 || r >= TAU {
        0.0
    } else {
        (PI - r) / 2.0
    }
}

/// `B_1(num * pi / den)` with the residue taken exactly in integers.
pub fn bernoulli_pi_fraction(num: i64, den: i64) -> f64 {
    debug_assert!(den > 0);
    let r = num.rem_euclid(2 * den);
    if r == 0 {
        0.0
    } else {
        PI * (den - r) as f64 / (2 * den) as f64
    }
}

/// `P_q(t) = 1/2 + 2 sum cos(j t) / (q^j + q^{-j})`, evaluated through the
/// theta-quotient product
/// `P_q(t) = (1/2) prod_m (1 - q^{2m})^2 (1 - a_m^2)^2
/// ((1 - a_m)^2 + 4 a_m cos^2(t/2)) / ((1 - a_m)^2 + 4 a_m sin^2(t/2))`
/// with `a_m = q^{2m-1}`. Every factor is a sum of nonnegative terms, so the
/// result keeps full relative accuracy even where `P_q` is far below one ulp
/// of its Fourier terms (near `t = pi` for `q` close to 1).
pub fn eval_pq(q: f64, t: f64, policy: &EvalPolicy) -> Result<f64> {
    validate_q(q)?;
    let peak = 0.5 + 2.0 * q / (1.0 - q);
    // log-size of the omitted factors m > M is at most 8 a_{M+1} / ((1 - q^2)(1 - a_{M+1}))
    let m_max = truncation_index(
        |m| {
            let a = q.powf((2 * m + 1) as f64);
            peak * (8.0 * a / ((1.0 - q * q) * (1.0 - a))).exp_m1()
        },
        policy,
    )?;
    let half = 0.5 * t.rem_euclid(TAU);
    let (s, c) = half.sin_cos();
    let (s2, c2) = (s * s, c * c);
    let mut acc = 0.5;
    for m in 1..=m_max.max(1) {
        let a = q.powi(2 * m as i32 - 1);
        let even = 1.0 - q.powi(2 * m as i32);
        let odd = (1.0 - a) * (1.0 + a);
        let base = (1.0 - a) * (1.0 - a);
        acc *= even * even * odd * odd * (base + 4.0 * a * c2) / (base + 4.0 * a * s2);
    }
    Ok(acc)
}

/// Lower bound of `P_q` on the whole circle.
pub fn pq_lower_bound(q: f64) -> f64 {
    (0.5 + 2.0 * q / ((1.0 + q * q) * (1.0 - q))) * ((1.0 - q) / (1.0 + q)).powf(4.0 / (1.0 - q * q))
}

/// `G_q(x) = (1/4) ln((1 + 2 q^n cos x + q^{2n}) / (1 - 2 q^n cos x + q^{2n}))`.
pub fn eval_gq(q: f64, n: u32, x: f64) -> f64 {
    let a = q.powi(n as i32);
    let c = x.cos();
    0.25 * ((2.0 * a * c + a * a).ln_1p() - (-2.0 * a * c + a * a).ln_1p())
}

/// `H_q(x) = (1/2) atan(2 q^n sin x / (1 - q^{2n}))`.
pub fn eval_hq(q: f64, n: u32, x: f64) -> f64 {
    let a = q.powi(n as i32);
    0.5 * (2.0 * a * x.sin() / (1.0 - a * a)).atan()
}

/// Neumann-type series `sum q^k / k^p cos(k t - beta pi / 2)` in double-double,
/// truncated so that the tail is below `abs_tol`.
pub fn neumann_type_dd(q: f64, p: i32, beta: f64, t: Dd, abs_tol: f64) -> Result<Dd> {
    validate_q(q)?;
    let policy = EvalPolicy {
        abs_tol,
        max_terms: 1_000_000,
    };
    let k_max = geometric_terms(q, p, &policy)?;
    let b = reduce_beta(beta);
    let (cb, sb) = if b.fract() == 0.0 {
        let (c, s) = phase_cos_sin(b);
        (Dd::from_f64(c), Dd::from_f64(s))
    } else {
        let (s, c) = Dd::FRAC_PI_2.mul_f64(b).sin_cos();
        (c, s)
    };
    let t = reduce_dd(t);
    let (st, ct) = t.sin_cos();
    // z^k = e^{ikt}, re-anchored every 32 steps to bound drift
    let (mut zr, mut zi) = (Dd::ONE, Dd::ZERO);
    let qd = Dd::from_f64(q);
    let mut qk = Dd::ONE;
    let mut acc = Dd::ZERO;
    for k in 1..=k_max {
        if k % 32 == 0 {
            let (s, c) = t.mul_f64(k as f64).sin_cos();
            zr = c;
            zi = s;
        } else {
            let nr = zr * ct - zi * st;
            zi = zr * st + zi * ct;
            zr = nr;
        }
        qk *= qd;
        let denom = (k as f64).powi(p);
        acc += (qk * (zr * cb + zi * sb)).div_f64(denom);
    }
    Ok(acc)
}

fn reduce_dd(t: Dd) -> Dd {
    let k = (t.hi / std::f64::consts::TAU).floor();
    if k == 0.0 {
        t
    } else {
        t - Dd::TAU.mul_f64(k)
    }
}
