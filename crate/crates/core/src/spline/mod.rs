//! Fundamental SK-splines on the uniform partition of `[0, 2pi]` into `2n`
//! pieces: the eigenvalues of the shifted interpolation problem, the
//! direct linear solve, and the two closed-form expansions of the spline's
//! midpoint derivatives.

mod lemma;
mod modes;
mod solve;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::NeumannParams;
use crate::widths::{solve_theta, RootPhase, ThetaRoot};

pub use lemma::{
    derivative_lemma1, derivative_lemma2, derivatives_lemma1, lemma3_check, verify_cy2n,
    Cy2nReport, DerivativePath, GammaLedger, Lemma3Report,
};
pub use modes::{lambda_finite_sum, lambda_fourier, lambda_fourier_raw, EigenMode, EigenModes};
pub use solve::{solve_fundamental_spline, SKSplineSolution};

/// Nodes `x_k = k pi / n` (k = 0..2n) and midpoints `t_k = k pi / n - pi / (2n)` (k = 1..2n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition2n {
    pub n: u32,
}

impl Partition2n {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be a positive integer".into()));
        }
        Ok(Partition2n { n })
    }

    pub fn node(&self, k: u32) -> f64 {
        if k == 2 * self.n {
            2.0 * PI
        } else {
            k as f64 * PI / self.n as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=2 * self.n).map(|k| self.node(k)).collect()
    }

    pub fn midpoint(&self, k: u32) -> f64 {
        (2 * k - 1) as f64 * PI / (2 * self.n) as f64
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (1..=2 * self.n).map(|k| self.midpoint(k)).collect()
    }
}

/// A shift `y` together with the phase `p = n y - beta pi / 2` and its sine
/// and cosine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftPoint {
    pub y: f64,
    pub phase: f64,
    pub sin_phase: f64,
    pub cos_phase: f64,
    /// `1 - |sin p|`, kept separately because it can be far below machine epsilon.
    pub one_minus_abs_sin: f64,
}

impl ShiftPoint {
    pub fn new(params: NeumannParams, n: u32, y: f64) -> Self {
        let b = params.beta_reduced();
        let phase = n as f64 * y - b * PI / 2.0;
        let (sin_phase, cos_phase) = if y == 0.0 {
            let (c, s) = crate::kernel::phase_cos_sin(b);
            (-s, c)
        } else {
            phase.sin_cos()
        };
        ShiftPoint {
            y,
            phase,
            sin_phase,
            cos_phase,
            one_minus_abs_sin: cos_phase * cos_phase / (1.0 + sin_phase.abs()),
        }
    }

    /// The maximum point `y_0 = theta_n pi / n`, with the phase cosine taken
    /// from the theta equation so that it keeps full relative accuracy.
    pub fn extremal(params: NeumannParams, n: u32) -> Result<Self> {
        let root = solve_theta(params, n)?;
        Ok(Self::from_root(&root))
    }

    pub fn from_root(root: &ThetaRoot) -> Self {
        let ph = RootPhase::at(root);
        let b = crate::kernel::reduce_beta(root.beta);
        ShiftPoint {
            y: root.y0(),
            phase: root.theta * PI - b * PI / 2.0,
            sin_phase: ph.sign * (1.0 - ph.cos_phase * ph.cos_phase).sqrt(),
            cos_phase: ph.cos_phase,
            one_minus_abs_sin: ph.one_minus_abs_sin,
        }
    }

    pub fn sign(&self) -> f64 {
        if self.sin_phase < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    pub(crate) fn check_nondegenerate(&self) -> Result<()> {
        if self.sin_phase.abs() < 1e-14 {
            Err(Error::SignDegenerate {
                value: self.sin_phase,
            })
        } else {
            Ok(())
        }
    }
}

/// `[sqrt(n)]`.
pub(crate) fn isqrt(n: u32) -> u32 {
    let mut r = (n as f64).sqrt() as u32;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}
