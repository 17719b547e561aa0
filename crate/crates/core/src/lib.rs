//! Exact Kolmogorov widths of convolution classes generated by the Neumann
//! kernel `N_{q,beta}(t) = sum q^k / k cos(k t - beta pi / 2)`, together with
//! numerical checks of the machinery behind them: SK-spline eigenvalue
//! expansions, the alternating-sign condition on the fundamental spline,
//! threshold indices, and determinant tests for the CVD property.

pub mod cvd;
pub mod dd;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod oracles;
pub mod spline;
pub mod summation;
pub mod thresholds;
pub mod widths;

pub use error::{Error, Result};
