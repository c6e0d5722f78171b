//! Coarse volume, separation, and the volume/connectivity obstructions.
//!
//! | Quantity | Function | Kind |
//! |----------|----------|------|
//! | Vol_a(X) | [`vol_a`] | greedy covering and packing counts |
//! | sep_a(X) upper | [`sep_upper`] | one explicit balanced partition |
//! | sep_a(X) lower | [`sep_lower_poincare`] | certified through the spectral C₂ |
//! | tree obstruction | [`tree_bound_check`] | 2λa + c ≥ log_d(S/V_c) |
//! | polynomial volume | [`volume_growth_lower_bound`] | least c with (c/λ)^α e^{R−2c} ≤ (2λR+c)^α |
//! | connectivity | [`connectivity_bound_check`] | R ≤ 12λ₂c₁ + 4c₂ |
//!
//! Separation is counted with a fixed family F: a greedy maximal set of points
//! pairwise more than 2a apart, so the a-balls around F are disjoint. A ball of F
//! crosses a partition when its thickening B(z, ρ), ρ = 2a + ℓ/2 with ℓ the
//! longest edge, meets both sides. The thickening makes a cut between adjacent
//! net points visible to some ball of F.
//!
//! The lower bound comes from the indicator of one side. With ψ the balanced
//! ball-cover kernel of F and C₂ its exact constant,
//!
//! ```text
//! min(m(U₁), m(U₂)) ≤ 2C₂²·N₁(1_U) ≤ 2C₂²·k·s(a),   s(a) = max_z (Σ_{x∈B(z,ρ)} d_x m_x)²
//! ```
//!
//! where k counts crossing balls and d is the balancing scaling. Balanced sides
//! have m(U_i) ≥ m_min·Vol_a(X)/3, so every balanced partition crosses at least
//! m_min·Vol_a(X)/(6C₂²·s(a)) balls.

use crate::poincare::{ball_cover_kernel, poincare_exact_p2, PoincareError};
use crate::spaces::Net;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

/// Nets up to this size are partitioned exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Error)]
pub enum SepError {
    #[error("net is disconnected")]
    Disconnected,
    #[error("no balanced partition found")]
    Unbalanced,
    #[error("no Poincaré estimate available: {0}")]
    NoC1Estimate(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Poincare(#[from] PoincareError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverReport {
    pub a: f64,
    /// Greedy cover by closed a-balls, first uncovered point first.
    pub covering_count: usize,
    /// Greedy maximal set with pairwise distances > a.
    pub packing_count: usize,
    /// Same with separation 2a; bounded above by `covering_count`.
    pub packing_count_2a: usize,
}

/// Greedy covering and packing counts in index order.
pub fn vol_a(net: &Net, a: f64) -> CoverReport {
    let balls: Vec<Vec<usize>> = (0..net.len()).into_par_iter().map(|i| net.neighbors_within(i, a)).collect();
    let all = vec![true; net.len()];
    CoverReport {
        a,
        covering_count: cover_count(&balls, &all),
        packing_count: greedy_packing(net, a).len(),
        packing_count_2a: greedy_packing(net, 2.0 * a).len(),
    }
}

/// Greedy maximal set with pairwise distances strictly greater than `sep`.
pub fn greedy_packing(net: &Net, sep: f64) -> Vec<usize> {
    let mut chosen = vec![false; net.len()];
    let mut out = Vec::new();
    for i in 0..net.len() {
        if net.neighbors_within(i, sep).iter().all(|&j| !chosen[j]) {
            chosen[i] = true;
            out.push(i);
        }
    }
    out
}

/// Greedy cover count of the members, with centers among the members.
fn cover_count(balls: &[Vec<usize>], members: &[bool]) -> usize {
    let mut covered = vec![false; members.len()];
    let mut count = 0;
    for i in 0..members.len() {
        if members[i] && !covered[i] {
            count += 1;
            for &j in &balls[i] {
                covered[j] = true;
            }
        }
    }
    count
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationUpper {
    pub a: f64,
    pub count: usize,
    /// `true` for points of U₁.
    pub side: Vec<bool>,
    /// Centers of F whose thickened balls meet both sides.
    pub crossing: Vec<usize>,
    pub vol_sides: (usize, usize),
    pub vol_total: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub a: f64,
    pub upper: SeparationUpper,
    pub lower: f64,
    pub family_size: usize,
    pub crossing_radius: f64,
    pub c2: f64,
    pub support_factor: f64,
    pub notes: String,
}

/// Shared data for counting crossings and checking balance.
struct Setup {
    a: f64,
    family: Vec<usize>,
    rho: f64,
    /// Thickened ball of each family member.
    family_balls: Vec<Vec<usize>>,
    /// a-ball of every point, restricted per subset when counting Vol_a.
    balls: Vec<Vec<usize>>,
    vol_total: usize,
}

impl Setup {
    fn new(net: &Net, a: f64) -> Result<Self, SepError> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(SepError::InvalidParams(format!("radius must be finite and nonnegative, got {a}")));
        }
        if !net.is_connected() {
            return Err(SepError::Disconnected);
        }
        let family = greedy_packing(net, 2.0 * a);
        let rho = crossing_radius(net, a);
        let family_balls = family.par_iter().map(|&z| net.neighbors_within(z, rho)).collect();
        let balls: Vec<Vec<usize>> = (0..net.len()).into_par_iter().map(|i| net.neighbors_within(i, a)).collect();
        let vol_total = cover_count(&balls, &vec![true; net.len()]);
        Ok(Self { a, family, rho, family_balls, balls, vol_total })
    }

    fn crossing(&self, side: &[bool]) -> Vec<usize> {
        self.family
            .iter()
            .zip(&self.family_balls)
            .filter(|(_, ball)| ball.iter().any(|&x| side[x]) && ball.iter().any(|&x| !side[x]))
            .map(|(&z, _)| z)
            .collect()
    }

    fn sides(&self, side: &[bool]) -> (usize, usize) {
        let other: Vec<bool> = side.iter().map(|s| !s).collect();
        (cover_count(&self.balls, side), cover_count(&self.balls, &other))
    }

    fn balanced(&self, vols: (usize, usize)) -> bool {
        3 * vols.0 >= self.vol_total && 3 * vols.1 >= self.vol_total
    }

    fn report(&self, side: Vec<bool>, vols: (usize, usize), exhaustive: bool) -> SeparationUpper {
        let crossing = self.crossing(&side);
        SeparationUpper { a: self.a, count: crossing.len(), side, crossing, vol_sides: vols, vol_total: self.vol_total, exhaustive }
    }
}

/// ρ = 2a + ℓ/2 with ℓ the longest edge of the net.
pub fn crossing_radius(net: &Net, a: f64) -> f64 {
    let longest = net.edges.iter().map(|e| e.len).fold(0.0, f64::max);
    2.0 * a + 0.5 * longest
}

/// Balanced partition with few crossing balls.
///
/// Exhaustive over all partitions for nets of at most [`EXHAUSTIVE_LIMIT`]
/// points, so the count is the exact minimum there; otherwise a sweep cut.
pub fn sep_upper(net: &Arc<Net>, a: f64) -> Result<SeparationUpper, SepError> {
    let setup = Setup::new(net, a)?;
    if net.len() <= EXHAUSTIVE_LIMIT {
        exhaustive(net, &setup)
    } else {
        sweep(net, &setup)
    }
}

/// Sweep cut regardless of size.
pub fn sep_upper_sweep(net: &Arc<Net>, a: f64) -> Result<SeparationUpper, SepError> {
    let setup = Setup::new(net, a)?;
    sweep(net, &setup)
}

fn exhaustive(net: &Net, setup: &Setup) -> Result<SeparationUpper, SepError> {
    let n = net.len();
    if n < 2 {
        return Err(SepError::Unbalanced);
    }
    let best = (1u32..1 << (n - 1))
        .into_par_iter()
        .filter_map(|mask| {
            let side: Vec<bool> = (0..n).map(|i| i == 0 || mask >> (i - 1) & 1 == 0).collect();
            let vols = setup.sides(&side);
            setup.balanced(vols).then(|| (setup.crossing(&side).len(), mask))
        })
        .min()
        .ok_or(SepError::Unbalanced)?;
    let side: Vec<bool> = (0..n).map(|i| i == 0 || best.1 >> (i - 1) & 1 == 0).collect();
    let vols = setup.sides(&side);
    Ok(setup.report(side, vols, true))
}

fn sweep(net: &Arc<Net>, setup: &Setup) -> Result<SeparationUpper, SepError> {
    let n = net.len();
    if n < 2 {
        return Err(SepError::Unbalanced);
    }
    let kernel = ball_cover_kernel(net, &setup.family, setup.rho)?;
    let witness = poincare_exact_p2(&kernel)?.witness.expect("spectral estimate carries its eigenfunction");
    let f = witness.real_parts();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| f[i].total_cmp(&f[j]).then(i.cmp(&j)));
    const STEPS: usize = 256;
    let thresholds: Vec<usize> = if n - 1 <= STEPS {
        (1..n).collect()
    } else {
        (0..STEPS).map(|k| 1 + k * (n - 2) / (STEPS - 1)).collect()
    };
    let best = thresholds
        .par_iter()
        .filter_map(|&s| {
            let mut side = vec![false; n];
            for &i in &order[..s] {
                side[i] = true;
            }
            let vols = setup.sides(&side);
            setup.balanced(vols).then(|| (setup.crossing(&side).len(), s))
        })
        .min()
        .ok_or(SepError::Unbalanced)?;
    let mut side = vec![false; n];
    for &i in &order[..best.1] {
        side[i] = true;
    }
    let vols = setup.sides(&side);
    Ok(setup.report(side, vols, false))
}

/// Certified lower bound on the crossing count of every balanced partition.
///
/// Returns 0 when the ball-cover kernel is disconnected, since the spectral
/// route then gives no information.
pub fn sep_lower_poincare(net: &Arc<Net>, a: f64) -> Result<f64, SepError> {
    let setup = Setup::new(net, a)?;
    Ok(lower_from(net, &setup)?.0)
}

/// (lower bound, C₂, s(a)).
fn lower_from(net: &Arc<Net>, setup: &Setup) -> Result<(f64, f64, f64), SepError> {
    let kernel = ball_cover_kernel(net, &setup.family, setup.rho)?;
    let c2 = match poincare_exact_p2(&kernel) {
        Ok(est) => est.lower,
        Err(PoincareError::Disconnected { .. }) => return Ok((0.0, f64::INFINITY, f64::NAN)),
        Err(PoincareError::NoConvergence(r)) => return Err(SepError::NoC1Estimate(format!("eigensolver residual {r:e}"))),
        Err(e) => return Err(e.into()),
    };
    let support = setup
        .family_balls
        .iter()
        .map(|ball| ball.iter().map(|&x| kernel.scaling[x] * net.measure[x]).sum::<f64>().powi(2))
        .fold(0.0, f64::max);
    let m_min = net.measure.iter().copied().fold(f64::INFINITY, f64::min);
    let c1_upper = 2.0 * c2 * c2;
    Ok((m_min * setup.vol_total as f64 / (3.0 * c1_upper * support), c2, support))
}

/// Upper and lower separation bounds together.
pub fn separation(net: &Arc<Net>, a: f64) -> Result<SeparationReport, SepError> {
    let setup = Setup::new(net, a)?;
    let upper = if net.len() <= EXHAUSTIVE_LIMIT { exhaustive(net, &setup)? } else { sweep(net, &setup)? };
    let (lower, c2, support) = lower_from(net, &setup)?;
    let notes = if upper.exhaustive { "exact minimum over balanced partitions" } else { "spectral sweep cut" };
    Ok(SeparationReport {
        a,
        upper,
        lower,
        family_size: setup.family.len(),
        crossing_radius: setup.rho,
        c2,
        support_factor: support,
        notes: notes.to_string(),
    })
}

/// Whether 2λa + c ≥ log_d(S/V_c), and lhs − rhs.
pub fn tree_bound_check(s: f64, v_c: f64, d: u32, a: f64, lambda: f64, c: f64) -> (bool, f64) {
    let lhs = 2.0 * lambda * a + c;
    let rhs = (s / v_c).ln() / f64::from(d).ln();
    let slack = lhs - rhs;
    (slack >= 0.0, slack)
}

/// Least c ≥ 0 with max(1, c/λ)^α e^{R−2c} ≤ (2λR + c)^α.
///
/// Works with the logarithm of both sides. A grid scan brackets the first
/// crossing and bisection refines it. Inputs outside α > 0, λ ≥ 1, R > 0 give NaN.
pub fn volume_growth_lower_bound(alpha: f64, lambda: f64, radius: f64) -> f64 {
    if !(alpha > 0.0 && lambda >= 1.0 && radius > 0.0) {
        return f64::NAN;
    }
    let g = |c: f64| alpha * (c / lambda).max(1.0).ln() + radius - 2.0 * c - alpha * (2.0 * lambda * radius + c).ln();
    if g(0.0) <= 0.0 {
        return 0.0;
    }
    const STEPS: usize = 4096;
    let step = radius / STEPS as f64;
    let mut lo = 0.0;
    let mut hi = radius;
    for k in 1..=STEPS {
        let c = k as f64 * step;
        if g(c) <= 0.0 {
            hi = c;
            break;
        }
        lo = c;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Whether R ≤ 12λ₂c₁ + 4c₂; false rules out such a map on a ball of radius R.
pub fn connectivity_bound_check(radius: f64, lambda2: f64, c1: f64, c2: f64) -> bool {
    radius <= 12.0 * lambda2 * c1 + 4.0 * c2
}
