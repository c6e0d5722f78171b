//! Kernels, cocycles and seminorms on nets, and Poincaré constants.
//!
//! A kernel ψ is a nonnegative pair weight whose rows integrate to one
//! against the net measure. It defines the seminorm
//!
//! ```text
//! N_{p,ψ}(f) = ( Σ_{x,x'} |f(x) − f(x')|^p ψ(x,x') m(x) m(x') )^{1/p}
//! ```
//!
//! and the Poincaré constant C_p, the best constant in
//! ‖f − m_f‖_p ≤ C_p·N_{p,ψ}(f).
//!
//! | Estimate | Function | Certifies |
//! |----------|----------|-----------|
//! | generalized eigenproblem at p = 2 | [`poincare_exact_p2`] | exact C₂ |
//! | same with the edge-gradient energy | [`poincare_gradient_p2`] | exact C₂ for ∇ |
//! | mode decomposition of a uniform-column Z_μ net | [`UniformColumns::gradient_c2`] | exact C₂ for ∇, any R |
//! | quotient ascent from deterministic seeds | [`poincare_lower_ascent`] | lower bound, any p |
//! | parity test function on a double cover | [`testfunction_lower_bound`] | lower bound, p > Σμ/μ_n |
//!
//! Every lower bound carries a witness function whose quotient reproduces it.

mod columns;
mod field;
mod kernel;
mod spectral;
mod testfn;

pub use columns::UniformColumns;
pub use field::{
    gradient_seminorm_discrete, lp_mean_deviation, seminorm, seminorm_equivalence_constant, transport_cocycle,
    transport_function, transported_cocycle_constant, Cocycle, FunctionOnNet, PairField,
};
pub use kernel::{ball_cover_kernel, convolve_kernels, make_ball_kernel, Kernel};
pub use spectral::{poincare_exact_p2, poincare_exact_p2_with, poincare_gradient_p2, poincare_lower_ascent, Solver};
pub use testfn::{continuum_grad_integral, continuum_grad_integral_exact, testfunction_lattice, testfunction_lower_bound};

use crate::spaces::SpaceError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoincareError {
    #[error("objects live on different nets")]
    NetMismatch,
    #[error("kernel graph is disconnected ({components} components): the Poincaré constant is infinite")]
    Disconnected { components: usize },
    #[error("exponent p = {0} must be at least 1")]
    InvalidExponent(f64),
    #[error("wrong net: {0}")]
    WrongNet(String),
    #[error("p = {p} is at or below the pole Σμ/μ_n = {pole}")]
    PoleOrBelow { p: f64, pole: f64 },
    #[error("net has no edges")]
    NoEdges,
    #[error("values do not form a cocycle: {0}")]
    NotCocycle(String),
    #[error("kernel normalization did not converge (row error {0:e})")]
    Normalization(f64),
    #[error("eigensolver did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SpectralP2,
    /// Exact p = 2 constant for the edge-gradient energy instead of a kernel seminorm.
    SpectralGradient,
    Ascent,
    TestFunction,
}

/// Bounds on a Poincaré constant C_p.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareEstimate {
    pub p: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub method: Method,
    /// Width of the kernel the constant refers to; `None` for gradient energies.
    pub kernel_width: Option<f64>,
    /// Function realizing `lower`.
    #[serde(skip)]
    pub witness: Option<FunctionOnNet>,
}

fn check_p(p: f64) -> Result<(), PoincareError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(PoincareError::InvalidExponent(p))
    }
}

/// Order-independent, reproducible sum: fixed pairwise tree over the slice.
pub(crate) fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 16 => values.iter().sum(),
        n => tree_sum(&values[..n / 2]) + tree_sum(&values[n / 2..]),
    }
}
