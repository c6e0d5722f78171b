//! Visual metrics on ideal boundaries and the boundary distortion function K(R).
//!
//! Boundary points are torus coordinates x ∈ [0,1)ⁿ (circle factors). The
//! visual metric of Z_μ seen from the base point is maxᵢ dc(Δxᵢ)^{1/μᵢ}; the
//! shear example instead measures coordinate differences (x, y) by
//! max{|y|, |x − y·log|y||}.
//!
//! | Map | Domain metric | Image metric | K(R) |
//! |-----|---------------|--------------|------|
//! | `Identity` | Z_μ visual | same | 0 |
//! | `ZmuIdentity` | Z_μ visual | Z_μ' visual | R·|maxᵢ μᵢ/μ'ᵢ − 1| |
//! | `Biholder` | Z_μ visual | same, after coordinate powers | ≤ max{1 − α, β − 1}·R |
//! | `Unipotent` | max{|x|, |y|} | max{|y|, |x − y log|y||} | ≈ log R |

use crate::rng;
use crate::spaces::{h2_visual_distance, radial_distance_formula, zmu_visual_distance};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("visual distance undefined for coincident points")]
    CoincidentPoints,
    #[error("the additive constant c must be positive")]
    NonpositiveC,
    #[error("boundary point has dimension {got}, map expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid boundary map: {0}")]
    Invalid(String),
}

/// A homeomorphism between ideal boundaries, with the visual metrics on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryMap {
    Identity { mu: Vec<f64> },
    /// Coordinate powers s ↦ sign(s)·|2s|^γ/2 on s ∈ [−½, ½), with γ = α on even
    /// coordinates and γ = β on odd ones. `c` is the nominal Hölder constant.
    Biholder { alpha: f64, beta: f64, c: f64, mu: Vec<f64> },
    ZmuIdentity { mu: Vec<f64>, mu_prime: Vec<f64> },
    /// Two-dimensional shear boundary; points are (x, y) coordinate pairs.
    Unipotent,
}

/// Signed representative of a circle coordinate difference in [−½, ½).
fn signed_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

fn power_coord(x: f64, gamma: f64) -> f64 {
    let s = signed_gap(x, 0.0);
    let v = s.signum() * (2.0 * s.abs()).powf(gamma) / 2.0;
    v.rem_euclid(1.0)
}

/// max{|y|, |x − y·log|y||}, extended continuously by |x| at y = 0.
pub fn unipotent_visual_distance(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return x.abs();
    }
    y.abs().max((x - y * y.abs().ln()).abs())
}

impl BoundaryMap {
    pub fn dim(&self) -> usize {
        match self {
            BoundaryMap::Identity { mu } | BoundaryMap::Biholder { mu, .. } | BoundaryMap::ZmuIdentity { mu, .. } => mu.len(),
            BoundaryMap::Unipotent => 2,
        }
    }

    pub fn validate(&self) -> Result<(), BoundaryError> {
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|m| m.is_finite() && *m > 0.0);
        match self {
            BoundaryMap::Identity { mu } if !positive(mu) => Err(BoundaryError::Invalid("mu must be positive".into())),
            BoundaryMap::Biholder { alpha, beta, c, mu } => {
                if !(positive(mu) && *alpha > 0.0 && *alpha <= 1.0 && *beta >= 1.0 && *c > 0.0) {
                    Err(BoundaryError::Invalid("need 0 < alpha <= 1 <= beta, c > 0, positive mu".into()))
                } else {
                    Ok(())
                }
            }
            BoundaryMap::ZmuIdentity { mu, mu_prime } => {
                if positive(mu) && positive(mu_prime) && mu.len() == mu_prime.len() {
                    Ok(())
                } else {
                    Err(BoundaryError::Invalid("mu and mu_prime must be positive and of equal length".into()))
                }
            }
            _ => Ok(()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), BoundaryError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(BoundaryError::Dimension { expected: self.dim(), got: x.len() })
        }
    }

    fn gammas(&self) -> Option<(f64, f64)> {
        match self {
            BoundaryMap::Biholder { alpha, beta, .. } => Some((*alpha, *beta)),
            _ => None,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, BoundaryError> {
        self.check_dim(x)?;
        Ok(match self.gammas() {
            Some((a, b)) => x.iter().enumerate().map(|(i, &v)| power_coord(v, if i % 2 == 0 { a } else { b })).collect(),
            None => x.to_vec(),
        })
    }

    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>, BoundaryError> {
        self.check_dim(x)?;
        Ok(match self.gammas() {
            Some((a, b)) => x.iter().enumerate().map(|(i, &v)| power_coord(v, 1.0 / if i % 2 == 0 { a } else { b })).collect(),
            None => x.to_vec(),
        })
    }

    /// Visual distance between two domain boundary points.
    pub fn domain_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            BoundaryMap::Identity { mu } | BoundaryMap::Biholder { mu, .. } | BoundaryMap::ZmuIdentity { mu, .. } => {
                zmu_visual_distance(a, b, mu)
            }
            BoundaryMap::Unipotent => signed_gap(a[0], b[0]).abs().max(signed_gap(a[1], b[1]).abs()),
        }
    }

    /// Visual distance between two image boundary points.
    pub fn image_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            BoundaryMap::Identity { mu } | BoundaryMap::Biholder { mu, .. } => zmu_visual_distance(a, b, mu),
            BoundaryMap::ZmuIdentity { mu_prime, .. } => zmu_visual_distance(a, b, mu_prime),
            BoundaryMap::Unipotent => unipotent_visual_distance(signed_gap(a[0], b[0]), signed_gap(a[1], b[1])),
        }
    }

    /// Largest exponent on either side; sets how deep the structured grid goes.
    fn exponent_max(&self) -> f64 {
        match self {
            BoundaryMap::Identity { mu } => mu.iter().copied().fold(1.0, f64::max),
            BoundaryMap::Biholder { mu, beta, .. } => mu.iter().copied().fold(1.0, f64::max) * beta,
            BoundaryMap::ZmuIdentity { mu, mu_prime } => mu.iter().chain(mu_prime).copied().fold(1.0, f64::max),
            BoundaryMap::Unipotent => 1.0,
        }
    }

    fn domain_exponents(&self) -> Vec<f64> {
        match self {
            BoundaryMap::Identity { mu } | BoundaryMap::Biholder { mu, .. } | BoundaryMap::ZmuIdentity { mu, .. } => mu.clone(),
            BoundaryMap::Unipotent => vec![1.0, 1.0],
        }
    }

    fn translation_invariant(&self) -> bool {
        !matches!(self, BoundaryMap::Biholder { .. })
    }
}

/// |log(d'(θξ₁, θξ₂)/d(ξ₁, ξ₂))|.
pub fn visual_log_ratio(theta: &BoundaryMap, xi1: &[f64], xi2: &[f64]) -> Result<f64, BoundaryError> {
    let (r, _, _) = log_ratio_parts(theta, xi1, xi2)?;
    Ok(r.abs())
}

/// Signed log ratio with the domain and image distances.
fn log_ratio_parts(theta: &BoundaryMap, xi1: &[f64], xi2: &[f64]) -> Result<(f64, f64, f64), BoundaryError> {
    let d = theta.domain_distance(xi1, xi2);
    let i1 = theta.forward(xi1)?;
    let i2 = theta.forward(xi2)?;
    let d2 = theta.image_distance(&i1, &i2);
    if d == 0.0 || d2 == 0.0 {
        return Err(BoundaryError::CoincidentPoints);
    }
    Ok(((d2 / d).ln(), d, d2))
}

/// Result of a K(R) estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    pub k: f64,
    /// Spacing of the structured grid in the exponent j of the separations e^{−j}.
    pub resolution: f64,
    pub pairs: usize,
    /// A pair attaining the estimate.
    pub argmax: Option<(Vec<f64>, Vec<f64>)>,
}

/// Lower estimate of K(R) by structured dyadic grids plus seeded random pairs.
pub fn estimate_k(theta: &BoundaryMap, radius: f64, grid_n: usize, seed: u64) -> f64 {
    estimate_k_detailed(theta, radius, grid_n, seed).k
}

/// Like [`estimate_k`], with resolution and witness.
///
/// The structured part places pairs (b, b + Δ) with Δᵢ = ±e^{−μᵢj} on every
/// non-empty subset of axes, for j on the dyadic grid of step 2^{−⌊log₂ grid_n⌋}
/// up to depth μ_max·R + log(1 + R) + 1. Grids for larger `grid_n` or `R`
/// contain those for smaller ones, and the random pairs form a seeded prefix
/// whose length grows with `grid_n`, so the estimate is monotone in both.
pub fn estimate_k_detailed(theta: &BoundaryMap, radius: f64, grid_n: usize, seed: u64) -> KEstimate {
    let n = theta.dim();
    let floor = (-radius).exp() * (1.0 - 1e-12);
    let step = 0.5f64.powi((grid_n.max(2) as f64).log2().floor() as i32);
    let depth = theta.exponent_max() * radius + (1.0 + radius).ln() + 1.0;
    let levels = (depth / step).floor() as usize;
    let exps = theta.domain_exponents();
    let bases: Vec<Vec<f64>> = if theta.translation_invariant() {
        vec![vec![0.0; n]]
    } else {
        let ticks = [0.0, 0.25, 0.5, 0.75];
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|b: Vec<f64>| ticks.iter().map(move |&t| {
                    let mut c = b.clone();
                    c.push(t);
                    c
                }))
                .collect();
        }
        out
    };
    let patterns: Vec<Vec<f64>> = (1u32..3u32.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let s = [0.0, 1.0, -1.0][(code % 3) as usize];
                    code /= 3;
                    s
                })
                .collect()
        })
        .collect();
    let eval = |a: &[f64], b: &[f64]| -> Option<f64> {
        let (r, d, d2) = log_ratio_parts(theta, a, b).ok()?;
        (d >= floor || d2 >= floor).then_some(r.abs())
    };
    let best = |x: Option<(f64, Vec<f64>, Vec<f64>)>, y: Option<(f64, Vec<f64>, Vec<f64>)>| match (x, y) {
        (Some(a), Some(b)) => Some(if b.0 > a.0 { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    };
    let structured = (0..=levels)
        .into_par_iter()
        .map(|l| {
            let j = l as f64 * step;
            let mut local: Option<(f64, Vec<f64>, Vec<f64>)> = None;
            let mut count = 0usize;
            for base in &bases {
                for pat in &patterns {
                    let other: Vec<f64> = base
                        .iter()
                        .zip(pat)
                        .zip(&exps)
                        .map(|((b, s), m)| (b + s * (-m * j).exp()).rem_euclid(1.0))
                        .collect();
                    count += 1;
                    if let Some(v) = eval(base, &other) {
                        local = best(local, Some((v, base.clone(), other)));
                    }
                }
                if matches!(theta, BoundaryMap::Unipotent) {
                    // The image metric degenerates along x = y·log|y|.
                    for s in [1.0, -1.0] {
                        let y = s * (-j).exp();
                        let other = vec![(y * y.abs().ln()).rem_euclid(1.0), y.rem_euclid(1.0)];
                        count += 1;
                        if let Some(v) = eval(base, &other) {
                            local = best(local, Some((v, base.clone(), other)));
                        }
                    }
                }
            }
            (local, count)
        })
        .reduce(|| (None, 0), |a, b| (best(a.0, b.0), a.1 + b.1));
    let random_count = 4 * grid_n;
    let mut rng = rng::stream(seed, "estimate-k");
    let mut random = (None, 0usize);
    for _ in 0..random_count {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = a
            .iter()
            .zip(&exps)
            .map(|(x, m)| {
                let u: f64 = rng.gen_range(0.0..1.0);
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (x + s * (-m * u * 64.0).exp()).rem_euclid(1.0)
            })
            .collect();
        random.1 += 1;
        if let Some(v) = eval(&a, &b) {
            random.0 = best(random.0, Some((v, a, b)));
        }
    }
    let top = best(structured.0, random.0);
    KEstimate {
        k: top.as_ref().map_or(0.0, |t| t.0),
        resolution: step,
        pairs: structured.1 + random.1,
        argmax: top.map(|t| (t.1, t.2)),
    }
}

/// Known closed form (or upper bound) for K(R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticK {
    pub value: f64,
    /// True when `value` is only an upper bound.
    pub upper_bound_only: bool,
}

pub fn analytic_k(theta: &BoundaryMap, radius: f64) -> Option<AnalyticK> {
    match theta {
        BoundaryMap::Identity { .. } => Some(AnalyticK { value: 0.0, upper_bound_only: false }),
        BoundaryMap::ZmuIdentity { mu, mu_prime } => {
            let m = mu.iter().zip(mu_prime).map(|(a, b)| a / b).fold(f64::NEG_INFINITY, f64::max);
            Some(AnalyticK { value: (m - 1.0).abs() * radius, upper_bound_only: false })
        }
        BoundaryMap::Biholder { alpha, beta, .. } => {
            Some(AnalyticK { value: (1.0 - alpha).max(beta - 1.0) * radius, upper_bound_only: true })
        }
        BoundaryMap::Unipotent => None,
    }
}

/// λ = 1 + 2K/c and C_q = 2K + c.
pub fn theta_constants(k: f64, c: f64) -> Result<(f64, f64), BoundaryError> {
    if !(c > 0.0) {
        return Err(BoundaryError::NonpositiveC);
    }
    Ok((1.0 + 2.0 * k / c, 2.0 * k + c))
}

/// Radial-formula approximation of the ℍ² distance between polar points,
/// with t_∞ = −log sin(|Δθ|/2).
pub fn h2_radial_approximation(r1: f64, theta1: f64, r2: f64, theta2: f64) -> f64 {
    let vis = h2_visual_distance(theta1, theta2);
    let t_inf = if vis > 0.0 { -vis.ln() } else { f64::INFINITY };
    radial_distance_formula(r1, r2, t_inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn zid() -> BoundaryMap {
        BoundaryMap::ZmuIdentity { mu: vec![1.0, 2.0], mu_prime: vec![1.0, 1.0] }
    }

    #[test]
    fn unipotent_examples() {
        assert_eq!(unipotent_visual_distance(0.3, 0.0), 0.3);
        assert!((unipotent_visual_distance(0.0, 1.0 / E) - 1.0 / E).abs() < 1e-15);
        assert_eq!(unipotent_visual_distance(1.0, 1.0), 1.0);
    }

    #[test]
    fn log_ratio_examples() {
        let id = BoundaryMap::Identity { mu: vec![1.0, 2.0] };
        assert_eq!(visual_log_ratio(&id, &[0.1, 0.2], &[0.3, 0.5]).unwrap(), 0.0);
        let s: f64 = 0.01;
        let r = visual_log_ratio(&zid(), &[0.0, 0.0], &[0.0, s]).unwrap();
        assert!((r - 0.5 * s.ln().abs()).abs() < 1e-12);
        let u = visual_log_ratio(&BoundaryMap::Unipotent, &[0.0, 0.0], &[0.0, 1.0 / E]).unwrap();
        assert!(u.abs() < 1e-12);
        assert_eq!(visual_log_ratio(&id, &[0.1, 0.1], &[0.1, 0.1]), Err(BoundaryError::CoincidentPoints));
    }

    #[test]
    fn analytic_examples() {
        let same = BoundaryMap::ZmuIdentity { mu: vec![1.0, 2.0], mu_prime: vec![1.0, 2.0] };
        assert_eq!(analytic_k(&same, 10.0).unwrap().value, 0.0);
        assert_eq!(analytic_k(&zid(), 10.0).unwrap().value, 10.0);
        let bh = BoundaryMap::Biholder { alpha: 0.8, beta: 1.5, c: 1.0, mu: vec![1.0, 1.0] };
        let a = analytic_k(&bh, 10.0).unwrap();
        assert!((a.value - 5.0).abs() < 1e-12 && a.upper_bound_only);
        assert!(analytic_k(&BoundaryMap::Unipotent, 10.0).is_none());
    }

    #[test]
    fn theta_constant_examples() {
        assert_eq!(theta_constants(0.0, 1.0).unwrap(), (1.0, 1.0));
        assert_eq!(theta_constants(10.0, 2.0).unwrap(), (11.0, 22.0));
        assert_eq!(theta_constants(1.0, 0.0), Err(BoundaryError::NonpositiveC));
    }

    #[test]
    fn biholder_round_trip() {
        let bh = BoundaryMap::Biholder { alpha: 0.7, beta: 1.6, c: 1.0, mu: vec![1.0, 1.0] };
        let mut rng = rng::stream(3, "bh");
        for _ in 0..200 {
            let x = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let back = bh.inverse(&bh.forward(&x).unwrap()).unwrap();
            for (a, b) in x.iter().zip(&back) {
                assert!(signed_gap(*a, *b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_k_is_zero() {
        let id = BoundaryMap::Identity { mu: vec![1.0, 2.0] };
        assert_eq!(estimate_k(&id, 10.0, 64, 1), 0.0);
    }

    #[test]
    fn zmu_identity_k_matches_formula() {
        let k = estimate_k(&zid(), 10.0, 256, 5);
        assert!(k <= 10.0 * (1.0 + 1e-9) && k >= 0.85 * 10.0, "K = {k}");
    }

    #[test]
    fn estimate_is_monotone() {
        let u = BoundaryMap::Unipotent;
        let a = estimate_k(&u, 5.0, 64, 2);
        let b = estimate_k(&u, 10.0, 64, 2);
        let c = estimate_k(&u, 10.0, 256, 2);
        assert!(a <= b && b <= c, "{a} {b} {c}");
    }

    #[test]
    fn radial_approximation_on_a_ray() {
        assert_eq!(h2_radial_approximation(3.0, 1.0, 7.0, 1.0), 4.0);
    }
}
