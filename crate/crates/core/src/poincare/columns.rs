use super::{Method, PoincareError, PoincareEstimate};
use crate::spaces::{Edge, Net, Oracle, Point, SpaceError, SpaceKind, SpaceParams, ZmuLattice};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Z_μ net whose levels all carry the top-level grid.
///
/// Every level t_k = k·h has Nᵢ = 2^⌈log₂(e^{μᵢR}/h)⌉ points in coordinate
/// i, so the grid spacing e^{μᵢt}/Nᵢ is at most h at every height and the
/// whole net is invariant under the translations of the grid. Level weights
/// are the continuum slab volumes, as in [`ZmuLattice`].
///
/// Invariance makes the edge-gradient eigenproblem split over characters
/// e^{2πi m·x}. Mode m reduces to a weighted path with potential
///
/// ```text
/// V_k(m) = Σᵢ cᵢ·(2Nᵢ sin(π mᵢ/Nᵢ))²·e^{−2μᵢ t_k}
/// ```
///
/// where cᵢ is 1, or ½ when Nᵢ = 2 (a single edge per pair). The potential
/// grows with every |mᵢ|, so the spectral gap is the smaller of the second
/// eigenvalue of mode 0 and the first eigenvalues of the unit modes.
#[derive(Debug, Clone)]
pub struct UniformColumns {
    pub params: SpaceParams,
    pub counts: Vec<u64>,
    pub heights: Vec<f64>,
    /// Measure of each point, per level.
    pub weights: Vec<f64>,
}

impl UniformColumns {
    pub fn new(params: SpaceParams) -> Result<Self, SpaceError> {
        let lattice = ZmuLattice::new(params.clone(), false)?;
        let h = params.mesh;
        let mut counts = Vec::with_capacity(params.base_dim);
        for &m in &params.mu {
            let e = ((m * params.radius - h.ln()) / std::f64::consts::LN_2 - 1e-9).ceil().max(0.0);
            if e > 60.0 {
                return Err(SpaceError::SizeCap { requested: 2f64.powf(e), cap: 1 << 60 });
            }
            counts.push(1u64 << e as u32);
        }
        let size: f64 = counts.iter().map(|&c| c as f64).product();
        let heights = lattice.levels.iter().map(|l| l.t).collect();
        let weights = lattice.levels.iter().map(|l| l.weight * l.size() / size).collect();
        Ok(Self { params, counts, heights, weights })
    }

    pub fn level_size(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).product()
    }

    pub fn total_points(&self) -> f64 {
        self.level_size() * self.heights.len() as f64
    }

    /// Explicit net with cyclic horizontal edges and vertical columns.
    pub fn to_net(&self, cap: usize) -> Result<Net, SpaceError> {
        let requested = self.total_points();
        if requested > cap as f64 {
            return Err(SpaceError::SizeCap { requested, cap });
        }
        let size = self.level_size() as usize;
        let n = self.counts.len();
        let index = |flat: usize, i: usize| (flat / self.stride(i)) % self.counts[i] as usize;
        let mut points = Vec::with_capacity(requested as usize);
        let mut measure = Vec::with_capacity(requested as usize);
        let mut edges = Vec::new();
        for (k, &t) in self.heights.iter().enumerate() {
            for flat in 0..size {
                let x = (0..n).map(|i| index(flat, i) as f64 / self.counts[i] as f64).collect();
                points.push(Point::Z { t, x });
                measure.push(self.weights[k]);
                let src = k * size + flat;
                for i in 0..n {
                    let ni = self.counts[i] as usize;
                    let ji = index(flat, i);
                    if ni < 2 || (ni == 2 && ji == 1) {
                        continue;
                    }
                    let next = flat - ji * self.stride(i) + ((ji + 1) % ni) * self.stride(i);
                    let len = (self.params.mu[i] * t).exp() / ni as f64;
                    edges.push(Edge { src, dst: k * size + next, len });
                }
                if k + 1 < self.heights.len() {
                    edges.push(Edge { src, dst: (k + 1) * size + flat, len: self.heights[k + 1] - t });
                }
            }
        }
        let mut net = Net::assemble(SpaceKind::Zmu, self.params.clone(), points, measure, edges, Oracle::RadialFormula);
        net.ray_constant = Some(0.0);
        Ok(net)
    }

    fn stride(&self, i: usize) -> usize {
        self.counts[..i].iter().map(|&c| c as usize).product()
    }

    fn potential(&self, mode: &[u64]) -> Vec<f64> {
        self.heights
            .iter()
            .map(|&t| {
                mode.iter()
                    .zip(&self.counts)
                    .zip(&self.params.mu)
                    .map(|((&m, &n), &mu)| {
                        if m == 0 || n < 2 {
                            return 0.0;
                        }
                        let c = if n == 2 { 0.5 } else { 1.0 };
                        let nf = n as f64;
                        c * (2.0 * nf * (PI * m as f64 / nf).sin()).powi(2) * (-2.0 * mu * t).exp()
                    })
                    .sum()
            })
            .collect()
    }

    fn couplings(&self) -> Vec<f64> {
        (0..self.heights.len().saturating_sub(1))
            .map(|k| {
                let dt = self.heights[k + 1] - self.heights[k];
                0.5 * (self.weights[k] + self.weights[k + 1]) / (dt * dt)
            })
            .collect()
    }

    /// Smallest eigenvalue of a mode with nonzero potential.
    ///
    /// Inverse iteration on a Stieltjes tridiagonal matrix: the elimination
    /// pivots, the solves and the iterates stay positive, so there is no
    /// cancellation and tiny eigenvalues keep full relative accuracy. The
    /// Collatz–Wielandt ratios bracket the eigenvalue at every step.
    fn positive_mode(&self, mode: &[u64]) -> Result<f64, PoincareError> {
        let v = self.potential(mode);
        let s: Vec<f64> = v.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        let e = self.couplings();
        let l = s.len();
        let mut d = vec![0.0; l];
        let mut sigma = s[0];
        for k in 0..l {
            let ek = if k + 1 < l { e[k] } else { 0.0 };
            d[k] = sigma + ek;
            if k + 1 < l {
                sigma = s[k + 1] + ek * sigma / d[k];
            }
        }
        if !(d.iter().all(|&x| x > 0.0)) {
            return Err(PoincareError::NoConvergence(0.0));
        }
        let solve = |b: &[f64]| -> Vec<f64> {
            let mut bp = b.to_vec();
            for k in 1..l {
                bp[k] += e[k - 1] * bp[k - 1] / d[k - 1];
            }
            let mut x = vec![0.0; l];
            x[l - 1] = bp[l - 1] / d[l - 1];
            for k in (0..l - 1).rev() {
                x[k] = (bp[k] + e[k] * x[k + 1]) / d[k];
            }
            x
        };
        let mut y = vec![1.0; l];
        let mut bracket = (0.0, f64::INFINITY);
        for _ in 0..100_000 {
            let b: Vec<f64> = y.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
            let x = solve(&b);
            let (lo, hi) = x.iter().zip(&y).fold((f64::INFINITY, 0.0f64), |(lo, hi), (a, b)| (lo.min(a / b), hi.max(a / b)));
            bracket = (1.0 / hi, 1.0 / lo);
            let top = x.iter().fold(0.0f64, |a, &b| a.max(b));
            y = x.iter().map(|a| a / top).collect();
            if hi / lo - 1.0 < 1e-13 {
                break;
            }
        }
        if bracket.1 / bracket.0 - 1.0 > 1e-8 {
            return Err(PoincareError::NoConvergence(bracket.1 / bracket.0 - 1.0));
        }
        Ok(0.5 * (bracket.0 + bracket.1))
    }

    /// Second eigenvalue of the constant mode (vertical path only).
    fn constant_mode(&self) -> Result<f64, PoincareError> {
        let e = self.couplings();
        let l = self.weights.len();
        if l < 2 {
            return Ok(f64::INFINITY);
        }
        let mut a = DMatrix::<f64>::zeros(l, l);
        for k in 0..l - 1 {
            let (wi, wj) = (self.weights[k], self.weights[k + 1]);
            a[(k, k)] += e[k] / wi;
            a[(k + 1, k + 1)] += e[k] / wj;
            let off = -e[k] / (wi * wj).sqrt();
            a[(k, k + 1)] = off;
            a[(k + 1, k)] = off;
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev[1])
    }

    /// Candidate gaps: mode 0 (second eigenvalue) and each unit mode.
    pub fn mode_spectrum(&self) -> Result<Vec<(Vec<u64>, f64)>, PoincareError> {
        let n = self.counts.len();
        let mut out = vec![(vec![0; n], self.constant_mode()?)];
        for i in 0..n {
            if self.counts[i] >= 2 {
                let mut m = vec![0; n];
                m[i] = 1;
                let lam = self.positive_mode(&m)?;
                out.push((m, lam));
            }
        }
        Ok(out)
    }

    /// Exact C₂ = 1/√λ₂ of the edge-gradient energy, from the mode spectrum.
    pub fn gradient_c2(&self) -> Result<PoincareEstimate, PoincareError> {
        let lambda = self.mode_spectrum()?.into_iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        let c = 1.0 / lambda.sqrt();
        Ok(PoincareEstimate { p: 2.0, lower: c, upper: Some(c), method: Method::SpectralGradient, kernel_width: None, witness: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::{poincare_gradient_p2, Solver};
    use std::sync::Arc;

    #[test]
    fn modes_match_the_explicit_net() {
        for (mu, r, h) in [(vec![1.0, 1.0], 2.0, 1.0), (vec![1.0, 2.0], 2.0, 1.0), (vec![1.0, 2.0], 1.5, 0.5)] {
            let cols = UniformColumns::new(SpaceParams::new(mu.clone(), r, h).unwrap()).unwrap();
            let net = Arc::new(cols.to_net(200_000).unwrap());
            let explicit = poincare_gradient_p2(&net, Solver::Auto).unwrap().lower;
            let modes = cols.gradient_c2().unwrap().lower;
            assert!((explicit - modes).abs() < 1e-6 * modes, "μ={mu:?} R={r}: {explicit} vs {modes}");
        }
    }

    #[test]
    fn tiny_eigenvalues_stay_accurate() {
        let cols = UniformColumns::new(SpaceParams::new(vec![1.0, 2.0], 12.0, 1.0).unwrap()).unwrap();
        let c = cols.gradient_c2().unwrap().lower;
        assert!(c.is_finite() && c > 1e6);
    }
}
