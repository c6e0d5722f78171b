use super::field::{gradient_seminorm_discrete, FunctionOnNet};
use super::{check_p, Method, PoincareError, PoincareEstimate};
use crate::spaces::{Net, Point, SpaceKind, ZmuLattice};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

fn pole(mu: &[f64]) -> f64 {
    mu.iter().sum::<f64>() / mu[mu.len() - 1]
}

fn check_pole(mu: &[f64], p: f64) -> Result<(), PoincareError> {
    let pole = pole(mu);
    if p > pole {
        Ok(())
    } else {
        Err(PoincareError::PoleOrBelow { p, pole })
    }
}

/// Closed form π·μ_n/(p − Σμ/μ_n).
pub fn continuum_grad_integral(mu: &[f64], p: f64) -> Result<f64, PoincareError> {
    check_pole(mu, p)?;
    Ok(PI * mu[mu.len() - 1] / (p - pole(mu)))
}

/// ∫|∇u|^p over Tⁿ × [0, R] for u = e^{iπx_n}, by direct integration.
///
/// |∇u| = π·e^{−μ_n t} and the volume element is e^{Σμ·t}, so the integral
/// is torus_volume·π^p·(1 − e^{−aR})/a with a = p·μ_n − Σμ.
pub fn continuum_grad_integral_exact(mu: &[f64], p: f64, radius: f64, torus_volume: f64) -> f64 {
    let a = p * mu[mu.len() - 1] - mu.iter().sum::<f64>();
    let t = if a.abs() < 1e-12 { radius } else { -(-a * radius).exp_m1() / a };
    torus_volume * PI.powf(p) * t
}

/// Lower bound ‖u‖_p / ‖∇u‖_p for C_p of a double-cover net, u = e^{iπx_n}.
///
/// u is odd under the deck transformation x_n ↦ x_n + 1, which preserves the
/// measure, so ‖u − m‖_p ≥ ‖u‖_p for every constant m and no centering is needed.
pub fn testfunction_lower_bound(cover: &Arc<Net>, p: f64) -> Result<PoincareEstimate, PoincareError> {
    check_p(p)?;
    if cover.kind != SpaceKind::ZmuCover {
        return Err(PoincareError::WrongNet(format!("expected a double cover, got {}", cover.kind.label())));
    }
    check_pole(&cover.params.mu, p)?;
    let values = cover
        .points
        .iter()
        .map(|pt| match pt {
            Point::ZCover { x, .. } => Ok(Complex64::from_polar(1.0, PI * x[x.len() - 1])),
            _ => Err(PoincareError::WrongNet("non-cover point".into())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let u = FunctionOnNet::complex(cover.clone(), values)?;
    let grad = gradient_seminorm_discrete(&u, p)?;
    Ok(PoincareEstimate {
        p,
        lower: u.lp_norm(p) / grad,
        upper: None,
        method: Method::TestFunction,
        kernel_width: None,
        witness: Some(u),
    })
}

/// Level sums for the test function on a lattice too large to enumerate.
///
/// Returns (‖u‖_p^p, discrete gradient p-energy); both equal the values the
/// enumerated cover net would give.
pub fn testfunction_lattice(lattice: &ZmuLattice, p: f64) -> Result<(f64, f64), PoincareError> {
    check_p(p)?;
    if !lattice.cover {
        return Err(PoincareError::WrongNet("expected a double cover".into()));
    }
    check_pole(&lattice.params.mu, p)?;
    let n = lattice.params.base_dim;
    let mu_n = lattice.params.mu[n - 1];
    let period = lattice.periods[n - 1];
    let mut mass = 0.0;
    let mut energy = 0.0;
    for level in &lattice.levels {
        let size = level.size();
        mass += size * level.weight;
        let nn = level.counts[n - 1];
        let edges = match nn {
            1 => 0.0,
            2 => size / 2.0,
            _ => size,
        };
        let jump = 2.0 * (PI * period / (2.0 * nn as f64)).sin();
        let len = (mu_n * level.t).exp() * period / nn as f64;
        energy += edges * (jump / len).powf(p) * level.weight;
    }
    Ok((mass, energy))
}
