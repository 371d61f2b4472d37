//! Quantum noise spectra of a below-threshold synchronously pumped optical
//! parametric oscillator (SPOPO) whose cavity carries uncompensated
//! group-velocity dispersion.
//!
//! The crate is organised bottom-up:
//!
//! * [`modes`]: Hermite-Gaussian supermodes, the dispersion overlap matrix and
//!   the resulting inter-mode coupling and per-mode detunings.
//! * [`spdc`]: the discretised down-conversion kernel and its Takagi
//!   factorisation into supermodes and gains.
//! * [`pert`]: perturbative Bogoliubov coefficients of the coupled oscillators.
//! * [`exact`]: the exact linear-system solution used as an oracle.
//! * [`homodyne`]: balanced-homodyne photocurrent spectra, optimal local
//!   oscillator phase and per-mode squeezing reports.
//!
//! Internally everything is dimensionless: rates are measured in units of the
//! loss rate of mode 0 and times in units of the supermode duration `tau_s`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod homodyne;
pub mod modes;
pub mod pert;
pub mod spdc;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
