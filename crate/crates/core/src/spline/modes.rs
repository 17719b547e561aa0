//! Eigenvalues `lambda_l(y) = (1/n) sum_{nu=1}^{2n} e^{i l nu pi / n} Psi_{beta,1}(y - nu pi / n)`
//! of the shifted interpolation problem, by the finite sum and by their
//! Fourier expansion around the dominant pair of coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ShiftPoint;
use crate::error::{Error, Result};
use crate::kernel::{eval_psi_beta1, phase_cos_sin, EvalPolicy, KernelSpec, NeumannParams};

/// Cutoff on `q^{2mn}` (relative to the unit-size leading term) for the
/// Fourier tails.
const TAIL_EPS: f64 = 1e-20;
/// Absolute coefficient cutoff for the undecomposed series.
const RAW_EPS: f64 = 1e-24;

fn check_index(n: u32, l: u32) -> Result<()> {
    if n == 0 || l == 0 || l > n {
        return Err(Error::InvalidParams(format!(
            "eigenvalue index must satisfy 1 <= l <= n, got l = {l}, n = {n}"
        )));
    }
    Ok(())
}

/// The defining 2n-term sum. Each kernel value is certified to `abs_tol / (2n)`.
pub fn lambda_finite_sum(
    spec: &KernelSpec,
    n: u32,
    l: u32,
    y: f64,
    policy: &EvalPolicy,
) -> Result<Complex64> {
    check_index(n, l)?;
    let pol = EvalPolicy {
        abs_tol: policy.abs_tol / (2 * n) as f64,
        ..*policy
    };
    let two_n = 2 * n as u64;
    let mut re = crate::summation::NeumaierSum::new();
    let mut im = crate::summation::NeumaierSum::new();
    for nu in 1..=two_n {
        let v = eval_psi_beta1(spec, y - nu as f64 * PI / n as f64, &pol)?;
        let r = (l as u64 * nu) % two_n;
        let (s, c) = crate::widths::sin_cos_pi(r as f64 / n as f64);
        re += c * v;
        im += s * v;
    }
    Ok(Complex64::new(re.sum(), im.sum()) / n as f64)
}

/// Undecomposed Fourier form: `lambda_l(y)` equals the sum of `c_k e^{i(k y - (beta+1) pi/2)}`
/// over `k = l (mod 2n)` plus `c_k e^{-i(k y - (beta+1) pi/2)}` over `k = -l (mod 2n)`,
/// with `c_k = q^k / k^2`. Valid at every `y`.
pub fn lambda_fourier_raw(params: NeumannParams, n: u32, l: u32, y: f64) -> Result<Complex64> {
    params.validate()?;
    check_index(n, l)?;
    let q = params.q;
    let (cb, sb) = phase_cos_sin(params.beta + 1.0);
    let phase = Complex64::new(cb, -sb);
    let two_n = 2 * n as u64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut add = |k: u64, conj: bool| -> bool {
        let c = q.powf(k as f64) / (k as f64 * k as f64);
        let (s, co) = (k as f64 * y).sin_cos();
        let z = Complex64::new(co, s) * phase;
        acc += c * if conj { z.conj() } else { z };
        c > RAW_EPS
    };
    let mut k = l as u64;
    while add(k, false) {
        k += two_n;
    }
    let mut k = two_n - l as u64;
    if k == 0 {
        k = two_n;
    }
    while add(k, true) {
        k += two_n;
    }
    Ok(acc)
}

/// One eigenvalue `lambda_{n-j}(y) = e^{-ijy} (A_j + B_j)(s + rho_j)` with
/// `A_j = q^{n-j} / (n-j)^2`, `B_j = q^{n+j} / (n+j)^2` and `s = sign sin(n y - beta pi / 2)`.
/// All `rho` parts are relative to `A_j + B_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub j: u32,
    /// `A_j + B_j`.
    pub scale: f64,
    /// `B_j / A_j`.
    pub b_over_a: f64,
    /// `(q^n / n^2) / (A_j + B_j)`.
    pub weight: f64,
    /// Tail over the frequencies `(2m+1) n -+ j`, `m >= 1`.
    pub rho1: Complex64,
    /// Imbalance between `A_j` and `B_j` times `cos p`; zero at `j = 0`.
    pub rho2: Complex64,
    /// `-(1 - |sin p|) s`.
    pub rho3: Complex64,
    pub rho: Complex64,
    /// `|s + rho| = |lambda_{n-j}| / (A_j + B_j)`.
    pub mod_ratio: f64,
    /// `mod_ratio - 1`, computed without cancellation.
    pub rr: f64,
}

impl EigenMode {
    /// `r_j = (A_j + B_j) rho_j`.
    pub fn r(&self) -> Complex64 {
        self.rho * self.scale
    }

    /// `R_j = |lambda_{n-j}| - (A_j + B_j)`.
    pub fn big_r(&self) -> f64 {
        self.rr * self.scale
    }

    /// `|lambda_{n-j}| / A_j`, at least 0.9 under the spectral condition.
    pub fn modulus_over_leading(&self) -> f64 {
        self.mod_ratio * (1.0 + self.b_over_a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenModes {
    pub params: NeumannParams,
    pub n: u32,
    pub shift: ShiftPoint,
    pub sign: f64,
    pub modes: Vec<EigenMode>,
}

impl EigenModes {
    pub fn new(params: NeumannParams, n: u32, shift: &ShiftPoint) -> Result<Self> {
        params.validate()?;
        if n == 0 {
            return Err(Error::InvalidParams("n must be a positive integer".into()));
        }
        shift.check_nondegenerate()?;
        let q = params.q;
        let s = shift.sign();
        let nf = n as f64;
        let u = q.powi(2 * n as i32);
        let z = Complex64::new(shift.cos_phase, shift.sin_phase);
        let z2 = z * z;
        let (cbp, sbp) = phase_cos_sin(2.0 * params.beta);
        let w = Complex64::new(cbp, sbp);
        let minus_i = Complex64::new(0.0, -1.0);
        let one_minus_u = 1.0 - u;

        // e^{i a_m} for m >= 1, a_m = (2m+1) p + m beta pi - pi/2
        let mut phases = Vec::new();
        let mut um = u;
        let mut zp = z * z2;
        let mut wp = w;
        while um != 0.0 && um / one_minus_u >= TAIL_EPS {
            phases.push((um, zp * wp * minus_i));
            um *= u;
            zp *= z2;
            wp *= w;
        }

        let modes = (0..n)
            .map(|j| {
                let jf = j as f64;
                let nj = nf - jf;
                let npj = nf + jf;
                let q2j = q.powi(2 * j as i32);
                let b_over_a = q2j * (nj / npj).powi(2);
                let a = q.powi((n - j) as i32) / (nj * nj);
                let scale = a * (1.0 + b_over_a);
                let inv_w = (nf / nj).powi(2) * q.powi(-(j as i32)) + (nf / npj).powi(2) * q.powi(j as i32);
                let weight = if inv_w.is_finite() { 1.0 / inv_w } else { 0.0 };

                let mut rho1 = Complex64::new(0.0, 0.0);
                for (m, &(um, e)) in phases.iter().enumerate() {
                    let mf = (2 * (m + 1) + 1) as f64;
                    let lo = um * (nj / (mf * nf - jf)).powi(2);
                    let hi = um * q2j * (nj / (mf * nf + jf)).powi(2);
                    rho1 += e * lo + e.conj() * hi;
                }
                rho1 /= 1.0 + b_over_a;
                let rho2 = if j == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, (b_over_a - 1.0) / (1.0 + b_over_a) * shift.cos_phase)
                };
                let rho3 = Complex64::new(-shift.one_minus_abs_sin * s, 0.0);
                let rho = rho1 + rho2 + rho3;
                let mod_ratio = (Complex64::new(s, 0.0) + rho).norm();
                let rr = (2.0 * s * rho.re + rho.norm_sqr()) / (mod_ratio + 1.0);
                EigenMode {
                    j,
                    scale,
                    b_over_a,
                    weight,
                    rho1,
                    rho2,
                    rho3,
                    rho,
                    mod_ratio,
                    rr,
                }
            })
            .collect();
        Ok(EigenModes {
            params,
            n,
            shift: *shift,
            sign: s,
            modes,
        })
    }

    /// `lambda_{n-j}(y)`.
    pub fn lambda(&self, j: u32) -> Complex64 {
        let m = &self.modes[j as usize];
        let (s, c) = (j as f64 * self.shift.y).sin_cos();
        Complex64::new(c, -s) * (Complex64::new(self.sign, 0.0) + m.rho) * m.scale
    }

    /// Smallest `|lambda_{n-j}| / A_j` over all modes.
    pub fn nonvanishing_margin(&self) -> f64 {
        self.modes
            .iter()
            .map(EigenMode::modulus_over_leading)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `lambda_{n-j}(y)` from the decomposition into the dominant pair plus `r_j(y)`.
pub fn lambda_fourier(params: NeumannParams, n: u32, j: u32, y: f64) -> Result<Complex64> {
    if j >= n {
        return Err(Error::InvalidParams(format!(
            "mode index must satisfy 0 <= j < n, got j = {j}, n = {n}"
        )));
    }
    let shift = ShiftPoint::new(params, n, y);
    let modes = EigenModes::new(params, n, &shift)?;
    Ok(modes.lambda(j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(q: f64, beta: f64) -> NeumannParams {
        NeumannParams::new(q, beta).unwrap()
    }

    #[test]
    fn three_paths_agree() {
        let params = p(0.3, 0.7);
        let spec = KernelSpec::neumann(params).unwrap();
        let pol = EvalPolicy::with_tol(1e-16);
        let n = 5;
        for j in 0..n {
            let a = lambda_finite_sum(&spec, n, n - j, 0.1, &pol).unwrap();
            let b = lambda_fourier(params, n, j, 0.1).unwrap();
            let c = lambda_fourier_raw(params, n, n - j, 0.1).unwrap();
            assert!((a - b).norm() <= 1e-12, "j={j} {a} {b}");
            assert!((a - c).norm() <= 1e-12, "j={j} {a} {c}");
        }
    }

    #[test]
    fn middle_eigenvalue_is_real() {
        let params = p(0.4, 0.3);
        let spec = KernelSpec::neumann(params).unwrap();
        for &y in &[0.0, 0.05, 0.3] {
            let l = lambda_finite_sum(&spec, 4, 4, y, &EvalPolicy::default()).unwrap();
            assert!(l.im.abs() <= 1e-12);
            assert_eq!(lambda_fourier(params, 4, 0, y).unwrap().im, 0.0);
        }
    }

    #[test]
    fn degenerate_phase_is_reported() {
        assert!(matches!(
            lambda_fourier(p(0.4, 0.0), 3, 1, 0.0),
            Err(Error::SignDegenerate { .. })
        ));
        assert!(lambda_fourier_raw(p(0.4, 0.0), 3, 2, 0.0).is_ok());
    }

    #[test]
    fn rho2_vanishes_at_j_zero() {
        let params = p(0.5, 0.3);
        let shift = ShiftPoint::extremal(params, 4).unwrap();
        let m = EigenModes::new(params, 4, &shift).unwrap();
        assert_eq!(m.modes[0].rho2, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn bad_indices() {
        let spec = KernelSpec::neumann(p(0.4, 0.3)).unwrap();
        assert!(lambda_finite_sum(&spec, 3, 0, 0.1, &EvalPolicy::default()).is_err());
        assert!(lambda_finite_sum(&spec, 3, 4, 0.1, &EvalPolicy::default()).is_err());
        assert!(lambda_fourier(p(0.4, 0.3), 3, 3, 0.1).is_err());
    }
}
