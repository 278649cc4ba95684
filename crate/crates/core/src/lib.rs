#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Numerical core for random N-soliton ensembles of the focusing cubic
//! nonlinear Schrödinger equation
//!
//! ```text
//! i ψ_t + ½ ψ_xx + |ψ|² ψ = 0
//! ```
//!
//! Eigenvalues are drawn uniformly from a planar domain in the upper
//! half-plane and norming constants are interpolated by an entire function
//! `r`, `c_k = r(λ_k)/N`. The crate provides
//!
//! - exact N-soliton evaluation by two independent algebraic routes
//!   (recursive Darboux dressing and the residue linear system),
//! - a spectrally accurate Cauchy-operator discretization on a pair of
//!   Schwarz-symmetric circles,
//! - a collocation solver for the random and averaged Riemann–Hilbert
//!   problems (and their x-derivatives), which yields the soliton-gas field
//!   `ψ∞`,
//! - the fluctuation kernels `G1`, `G2`, their variance and correlation
//!   quadratures, linear statistics and the small-norm diagnostics.
//!
//! Everything here is pure computation on `alloc`; IO, configuration and
//! parallel ensembles live in the companion `soliton-gas-lab` crate.

extern crate alloc;

pub mod contour;
pub mod error;
pub mod fft;
pub mod fluctuations;
pub mod linalg;
pub mod quadrature;
pub mod rh;
pub mod soliton;
pub mod spectral;

pub use num_complex::Complex64;

pub use crate::contour::{ContourDensity, ContourGrid};
pub use crate::error::{Error, Result};
pub use crate::linalg::Mat2;
pub use crate::rh::{JumpField, RhSolution, SpacetimePoint};
pub use crate::spectral::{EigenvalueDomain, Interpolant, SpectralSample};

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
