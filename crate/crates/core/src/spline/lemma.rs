//! Closed-form expansions of the fundamental spline's midpoint derivatives in
//! terms of the eigenvalues, the five error terms `gamma_1..gamma_5`, and the
//! alternating-sign test built on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{isqrt, solve_fundamental_spline, EigenModes, ShiftPoint};
use crate::error::{Error, Result};
use crate::kernel::{eval_pq, EvalPolicy, KernelSpec, NeumannParams};
use crate::thresholds::gamma_sum_bound;

/// `cos(j (t_k - y))` for `t_k = (2k - 1) pi / (2n)`, with the rational part
/// reduced exactly.
fn cos_shifted(j: u32, k: u32, n: u32, y: f64) -> f64 {
    let num = (j as u64 * (2 * k as u64 - 1)) % (4 * n as u64);
    (PI * num as f64 / (2 * n) as f64 - j as f64 * y).cos()
}

fn half_angle_cos(j: u32, n: u32) -> f64 {
    (j as f64 * PI / (2 * n) as f64).cos()
}

fn check_k(n: u32, k: u32) -> Result<()> {
    if k == 0 || k > 2 * n {
        return Err(Error::InvalidParams(format!(
            "midpoint index must satisfy 1 <= k <= 2n, got k = {k}, n = {n}"
        )));
    }
    Ok(())
}

fn prefactor(params: NeumannParams, n: u32, k: u32) -> f64 {
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * PI / (4.0 * params.q.powi(n as i32))
}

struct Lemma1Parts {
    main: f64,
    gamma1: f64,
    gamma2: f64,
    z: Vec<f64>,
}

fn lemma1_parts(modes: &EigenModes, k: u32) -> Lemma1Parts {
    let n = modes.n;
    let s = modes.sign;
    let y = modes.shift.y;
    let mut main = 0.5;
    let mut gamma1 = 0.0;
    let mut z = Vec::with_capacity(n as usize);
    for m in &modes.modes {
        let j = m.j;
        let cj = cos_shifted(j, k, n, y);
        let abs_rho = m.rho.norm();
        let mut zr = -m.rr * cj * s;
        if abs_rho > 1e-300 {
            let arg = m.rho.im.atan2(m.rho.re);
            let jt = PI * ((j as u64 * (2 * k as u64 - 1)) % (4 * n as u64)) as f64 / (2 * n) as f64
                - j as f64 * y;
            zr += abs_rho * (jt + arg).cos();
        }
        z.push(zr * m.scale);
        if j == 0 {
            gamma1 += m.weight * zr / (m.mod_ratio * m.mod_ratio);
        } else {
            let h = half_angle_cos(j, n);
            main += 2.0 * m.weight * cj / (m.mod_ratio * h);
            gamma1 += 2.0 * m.weight * zr / (m.mod_ratio * m.mod_ratio * h);
        }
    }
    let rr0 = modes.modes[0].rr;
    Lemma1Parts {
        main: main * s,
        gamma1,
        gamma2: -(2.0 * rr0) / (2.0 * (2.0 + 2.0 * rr0)) * s,
        z,
    }
}

/// Derivative of the fundamental spline on `((k-1) pi / n, k pi / n)` from the
/// eigenvalue representation with the error terms `gamma_1`, `gamma_2`.
pub fn derivative_lemma1(params: NeumannParams, n: u32, shift: &ShiftPoint, k: u32) -> Result<f64> {
    check_k(n, k)?;
    let modes = EigenModes::new(params, n, shift)?;
    let p = lemma1_parts(&modes, k);
    Ok(prefactor(params, n, k) * (p.main + p.gamma1 + p.gamma2))
}

/// All `2n` midpoint derivatives by the eigenvalue representation.
pub fn derivatives_lemma1(params: NeumannParams, n: u32, shift: &ShiftPoint) -> Result<Vec<f64>> {
    let modes = EigenModes::new(params, n, shift)?;
    Ok((1..=2 * n)
        .map(|k| {
            let p = lemma1_parts(&modes, k);
            prefactor(params, n, k) * (p.main + p.gamma1 + p.gamma2)
        })
        .collect())
}

/// Error terms of the `P_q` representation at one midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaLedger {
    pub k: u32,
    pub sign: f64,
    /// `gamma_1, ..., gamma_5`.
    pub gamma: [f64; 5],
    /// `P_q(t_k - y)`.
    pub pq: f64,
    /// `r_j^{(1)}, r_j^{(2)}, r_j^{(3)}` for j = 0..n-1.
    pub r_terms: Vec<[Complex64; 3]>,
    /// `|r_j|`.
    pub r_abs: Vec<f64>,
    /// `R_j = |lambda_{n-j}| - (A_j + B_j)`.
    pub big_r: Vec<f64>,
    /// `z_j` at this midpoint.
    pub z: Vec<f64>,
    /// `delta_j` for j = 1..[sqrt n].
    pub delta: Vec<f64>,
    pub lemma3_lhs: f64,
    pub lemma3_rhs: f64,
}

fn lemma2_ledger(modes: &EigenModes, k: u32, policy: &EvalPolicy) -> Result<(f64, GammaLedger)> {
    let params = modes.params;
    let n = modes.n;
    if n < 2 {
        return Err(Error::Domain(format!("the P_q representation needs n >= 2, got {n}")));
    }
    let q = params.q;
    let s = modes.sign;
    let y = modes.shift.y;
    let root = isqrt(n);
    let l1 = lemma1_parts(modes, k);

    let tau = (2 * k - 1) as f64 * PI / (2 * n) as f64 - y;
    let pq = eval_pq(q, tau, policy)?;

    let mut gamma3 = 0.0;
    let mut gamma4 = 0.0;
    let mut delta = Vec::with_capacity(root as usize);
    for m in modes.modes.iter().skip(1) {
        let j = m.j;
        let cj = cos_shifted(j, k, n, y);
        let h = half_angle_cos(j, n);
        let term = m.weight * cj / (m.mod_ratio * h);
        if j <= root {
            let jf = j as f64;
            let nf = n as f64;
            let q2j = q.powi(2 * j as i32);
            let d = m.mod_ratio * h * ((nf / (nf - jf)).powi(2) + (nf / (nf + jf)).powi(2) * q2j)
                / (1.0 + q2j)
                - 1.0;
            delta.push(d);
            gamma4 -= 2.0 * d * term;
        } else {
            gamma3 += 2.0 * term;
        }
    }
    gamma3 *= s;
    gamma4 *= s;

    let mut gamma5 = 0.0;
    let mut j = root as i32 + 1;
    loop {
        let qj = q.powi(j);
        if qj / (1.0 - q) < 1e-19 {
            break;
        }
        gamma5 -= 2.0 * (j as f64 * tau).cos() * qj / (1.0 + qj * qj);
        j += 1;
    }
    gamma5 *= s;

    let gamma = [l1.gamma1, l1.gamma2, gamma3, gamma4, gamma5];
    let value = prefactor(params, n, k) * (pq * s + gamma.iter().sum::<f64>());
    let ledger = GammaLedger {
        k,
        sign: s,
        gamma,
        pq,
        r_terms: modes
            .modes
            .iter()
            .map(|m| [m.rho1 * m.scale, m.rho2 * m.scale, m.rho3 * m.scale])
            .collect(),
        r_abs: modes.modes.iter().map(|m| m.r().norm()).collect(),
        big_r: modes.modes.iter().map(|m| m.big_r()).collect(),
        z: l1.z,
        delta,
        lemma3_lhs: gamma.iter().map(|g| g.abs()).sum(),
        lemma3_rhs: gamma_sum_bound(q, n as u64),
    };
    Ok((value, ledger))
}

/// Derivative at midpoint `k` from the `P_q` representation, with its ledger.
pub fn derivative_lemma2(
    params: NeumannParams,
    n: u32,
    shift: &ShiftPoint,
    k: u32,
) -> Result<(f64, GammaLedger)> {
    check_k(n, k)?;
    let modes = EigenModes::new(params, n, shift)?;
    lemma2_ledger(&modes, k, &EvalPolicy::with_tol(1e-16))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub n: u32,
    /// `max_k sum_l |gamma_l|`.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub worst_k: u32,
    /// `min_k (P_q(t_k - y) s + sum gamma_l) s`, nonnegative when the sign pattern is clean.
    pub min_bracket: f64,
    /// Smallest `|lambda_{n-j}| / A_j`.
    pub lambda_margin: f64,
}

/// Worst case over the midpoints of `sum |gamma_l|` against its bound.
pub fn lemma3_check(params: NeumannParams, n: u32, shift: &ShiftPoint) -> Result<Lemma3Report> {
    let modes = EigenModes::new(params, n, shift)?;
    let policy = EvalPolicy::with_tol(1e-16);
    let mut lhs = 0.0;
    let mut worst_k = 1;
    let mut rhs = 0.0;
    let mut min_bracket = f64::INFINITY;
    for k in 1..=2 * n {
        let (_, ledger) = lemma2_ledger(&modes, k, &policy)?;
        if ledger.lemma3_lhs > lhs {
            lhs = ledger.lemma3_lhs;
            worst_k = k;
        }
        rhs = ledger.lemma3_rhs;
        let bracket = ledger.pq + ledger.sign * ledger.gamma.iter().sum::<f64>();
        min_bracket = min_bracket.min(bracket);
    }
    Ok(Lemma3Report {
        n,
        lhs,
        rhs,
        holds: lhs <= rhs,
        worst_k,
        min_bracket,
        lambda_margin: modes.nonvanishing_margin(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativePath {
    /// Double-double linear solve; practical up to a few dozen nodes.
    Direct,
    Lemma1,
    Lemma2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cy2nReport {
    pub holds: bool,
    /// The `epsilon` realising the pattern, when it holds.
    pub epsilon: Option<i8>,
    /// Sign of the derivative at `t_1, ..., t_{2n}` (0 when below `zero_tol`).
    pub pattern: Vec<i8>,
    pub values: Vec<f64>,
    pub zero_tol: f64,
    pub path: DerivativePath,
}

/// Checks that the midpoint derivatives have signs `(-1)^i epsilon e_i`,
/// `i = 0..2n-1`, with each `e_i` in `{0, 1}` and a common `epsilon`.
pub fn verify_cy2n(
    params: NeumannParams,
    n: u32,
    shift: &ShiftPoint,
    path: DerivativePath,
) -> Result<Cy2nReport> {
    params.validate()?;
    let values = match path {
        DerivativePath::Direct => {
            let spec = KernelSpec::neumann(params)?;
            solve_fundamental_spline(&spec, n, shift.y)?.midpoint_derivs
        }
        DerivativePath::Lemma1 => derivatives_lemma1(params, n, shift)?,
        DerivativePath::Lemma2 => {
            let modes = EigenModes::new(params, n, shift)?;
            let policy = EvalPolicy::with_tol(1e-16);
            (1..=2 * n)
                .map(|k| lemma2_ledger(&modes, k, &policy).map(|(v, _)| v))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let zero_tol = 1e-9 * PI / (4.0 * params.q.powi(n as i32)) * eval_pq(params.q, 0.0, &EvalPolicy::default())?;
    let pattern: Vec<i8> = values
        .iter()
        .map(|v| {
            if v.abs() <= zero_tol {
                0
            } else if *v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let fits = |eps: i8| {
        pattern
            .iter()
            .enumerate()
            .all(|(i, &p)| p == 0 || p == if i % 2 == 0 { eps } else { -eps })
    };
    let epsilon = [1i8, -1].into_iter().find(|&e| fits(e));
    Ok(Cy2nReport {
        holds: epsilon.is_some(),
        epsilon,
        pattern,
        values,
        zero_tol,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(q: f64, beta: f64) -> NeumannParams {
        NeumannParams::new(q, beta).unwrap()
    }

    #[test]
    fn lemma1_matches_direct_solve() {
        let params = p(0.3, 0.0);
        let shift = ShiftPoint::new(params, 3, 0.2);
        let spec = KernelSpec::neumann(params).unwrap();
        let direct = solve_fundamental_spline(&spec, 3, 0.2).unwrap();
        let lem = derivatives_lemma1(params, 3, &shift).unwrap();
        assert!((direct.midpoint_derivs[0] - 34.1748).abs() < 1e-3);
        for (a, b) in direct.midpoint_derivs.iter().zip(&lem) {
            assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn lemma2_is_a_rearrangement_of_lemma1() {
        let params = p(0.4, 0.3);
        let shift = ShiftPoint::extremal(params, 9).unwrap();
        for k in 1..=18 {
            let a = derivative_lemma1(params, 9, &shift, k).unwrap();
            let (b, ledger) = derivative_lemma2(params, 9, &shift, k).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs(), "k={k} {a} {b}");
            assert_eq!(ledger.delta.len(), 3);
        }
    }

    #[test]
    fn lemma2_needs_two_nodes() {
        let params = p(0.4, 0.3);
        let shift = ShiftPoint::extremal(params, 1).unwrap();
        assert!(matches!(
            derivative_lemma2(params, 1, &shift, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sign_pattern_at_first_admissible_n() {
        let params = p(0.2, 0.0);
        let shift = ShiftPoint::extremal(params, 13).unwrap();
        for path in [DerivativePath::Direct, DerivativePath::Lemma1, DerivativePath::Lemma2] {
            let r = verify_cy2n(params, 13, &shift, path).unwrap();
            assert!(r.holds, "{path:?}");
            assert_eq!(r.pattern.len(), 26);
        }
    }

    #[test]
    fn lemma3_bound_at_threshold() {
        let params = p(0.2, 0.5);
        let shift = ShiftPoint::extremal(params, 13).unwrap();
        let r = lemma3_check(params, 13, &shift).unwrap();
        assert!(r.holds, "{} > {}", r.lhs, r.rhs);
        assert!(r.min_bracket >= 0.0);
        assert!(r.lambda_margin >= 0.9);
    }
}
