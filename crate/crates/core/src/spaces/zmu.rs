use super::net::{Edge, Net, Oracle, SpaceKind};
use super::{Point, SpaceError, SpaceParams, DEFAULT_POINT_CAP};
use crate::rng;
use rand::Rng as _;
use std::collections::BTreeSet;

/// t₁ + t₂ − 2·min{t₁, t₂, t_∞}.
pub fn radial_distance_formula(t1: f64, t2: f64, t_inf: f64) -> f64 {
    let m = t1.min(t2).min(t_inf);
    (t1 + t2 - 2.0 * m).max((t1 - t2).abs())
}

fn circle_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(period);
    d.min(period - d)
}

/// maxᵢ dc(aᵢ, bᵢ)^{1/μᵢ} with dc the distance on ℝ/ℤ.
pub fn zmu_visual_distance(a: &[f64], b: &[f64], mu: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mu)
        .map(|((x, y), m)| circle_gap(*x, *y, 1.0).powf(1.0 / m))
        .fold(0.0, f64::max)
}

/// Visual distance with a per-coordinate period (2 on the last axis of the double cover).
pub fn zmu_visual_distance_periodic(a: &[f64], b: &[f64], mu: &[f64], periods: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mu.iter().zip(periods))
        .map(|((x, y), (m, p))| circle_gap(*x, *y, *p).powf(1.0 / m))
        .fold(0.0, f64::max)
}

fn periods_for(n: usize, cover: bool) -> Vec<f64> {
    let mut p = vec![1.0; n];
    if cover {
        p[n - 1] = 2.0;
    }
    p
}

/// Radial quasi-metric between two Z_μ points (or two points of the double cover).
pub fn zmu_distance(p: &Point, q: &Point, mu: &[f64]) -> f64 {
    let (t1, x1, t2, x2, cover) = match (p, q) {
        (Point::Z { t: t1, x: x1 }, Point::Z { t: t2, x: x2 }) => (*t1, x1, *t2, x2, false),
        (Point::ZCover { t: t1, x: x1 }, Point::ZCover { t: t2, x: x2 }) => (*t1, x1, *t2, x2, true),
        _ => return f64::NAN,
    };
    let vis = zmu_visual_distance_periodic(x1, x2, mu, &periods_for(mu.len(), cover));
    let t_inf = if vis > 0.0 { -vis.ln() } else { f64::INFINITY };
    radial_distance_formula(t1, t2, t_inf)
}

/// Radial oracle whose boundary term is the shear visual distance.
pub(crate) fn unipotent_radial_distance(t1: f64, x1: &[f64], t2: f64, x2: &[f64]) -> f64 {
    let gap = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(1.0);
        if d >= 0.5 {
            d - 1.0
        } else {
            d
        }
    };
    let vis = crate::boundary::unipotent_visual_distance(gap(x1[0], x2[0]), gap(x1[1], x2[1]));
    let t_inf = if vis > 0.0 { -vis.ln() } else { f64::INFINITY };
    radial_distance_formula(t1, t2, t_inf)
}

/// One height level of a Z_μ lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ZmuLevel {
    pub t: f64,
    /// Grid size Nᵢ per torus coordinate; always a power of two.
    pub counts: Vec<u64>,
    /// Measure carried by each point of the level.
    pub weight: f64,
}

impl ZmuLevel {
    pub fn size(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).product()
    }
}

/// Z_μ ball Tⁿ × [0, R] described level by level without enumerating points.
///
/// Level k sits at height t_k = k·h and carries the product grid with
/// Nᵢ = 2^⌈log₂(e^{μᵢt}/h)⌉ points in coordinate i, so neighbouring grid
/// points are about h apart in the level metric and every grid is nested in
/// the next one. The double cover doubles N_n and uses period 2 on x_n.
#[derive(Debug, Clone)]
pub struct ZmuLattice {
    pub params: SpaceParams,
    pub cover: bool,
    pub levels: Vec<ZmuLevel>,
    pub periods: Vec<f64>,
}

impl ZmuLattice {
    pub fn new(params: SpaceParams, cover: bool) -> Result<Self, SpaceError> {
        params.validate()?;
        let h = params.mesh;
        let top = (params.radius / h + 1e-9).floor() as usize;
        let n = params.base_dim;
        let periods = periods_for(n, cover);
        let s = params.mu_sum();
        let torus: f64 = periods.iter().product();
        let mut levels = Vec::with_capacity(top + 1);
        for k in 0..=top {
            let t = k as f64 * h;
            let mut counts = Vec::with_capacity(n);
            for (i, &m) in params.mu.iter().enumerate() {
                let e = ((m * t - h.ln()) / std::f64::consts::LN_2 - 1e-9).ceil().max(0.0);
                if e > 60.0 {
                    return Err(SpaceError::SizeCap { requested: 2f64.powf(e), cap: 1 << 60 });
                }
                let mut c = 1u64 << e as u32;
                if cover && i == n - 1 {
                    c *= 2;
                }
                counts.push(c);
            }
            let lo = (t - h / 2.0).max(0.0);
            let hi = if k == top { params.radius } else { t + h / 2.0 };
            let slab = if hi > lo { ((s * hi).exp() - (s * lo).exp()) / s } else { h };
            let mut level = ZmuLevel { t, counts, weight: 0.0 };
            level.weight = slab * torus / level.size();
            levels.push(level);
        }
        Ok(Self { params, cover, levels, periods })
    }

    pub fn total_points(&self) -> f64 {
        self.levels.iter().map(ZmuLevel::size).sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.levels.iter().map(|l| l.weight * l.size()).sum()
    }

    pub fn kind(&self) -> SpaceKind {
        if self.cover {
            SpaceKind::ZmuCover
        } else {
            SpaceKind::Zmu
        }
    }

    /// The grid point with indices `j` on level `k`.
    pub fn point(&self, k: usize, j: &[u64]) -> Point {
        let level = &self.levels[k];
        let x = j
            .iter()
            .zip(&level.counts)
            .zip(&self.periods)
            .map(|((&ji, &n), &p)| ji as f64 * p / n as f64)
            .collect();
        if self.cover {
            Point::ZCover { t: level.t, x }
        } else {
            Point::Z { t: level.t, x }
        }
    }

    /// Level closest to height `t`.
    pub fn nearest_level(&self, t: f64) -> usize {
        let k = (t / self.params.mesh).round().max(0.0) as usize;
        k.min(self.levels.len() - 1)
    }

    /// Grid indices on level `k` closest to torus point `x`.
    pub fn nearest_index(&self, k: usize, x: &[f64]) -> Vec<u64> {
        let level = &self.levels[k];
        x.iter()
            .zip(&level.counts)
            .zip(&self.periods)
            .map(|((&xi, &n), &p)| {
                let j = (xi.rem_euclid(p) / p * n as f64).round() as u64;
                j % n
            })
            .collect()
    }

    /// Nearest grid point to (t, x).
    pub fn snap(&self, t: f64, x: &[f64]) -> Point {
        let k = self.nearest_level(t);
        self.point(k, &self.nearest_index(k, x))
    }

    /// Indices (level, grid) of a lattice point.
    pub fn locate(&self, p: &Point) -> Option<(usize, Vec<u64>)> {
        let (t, x) = match (p, self.cover) {
            (Point::Z { t, x }, false) | (Point::ZCover { t, x }, true) => (*t, x),
            _ => return None,
        };
        let k = self.nearest_level(t);
        Some((k, self.nearest_index(k, x)))
    }

    /// Largest oracle distance from a point at a lattice height to its snapped grid point.
    pub fn snap_distance(&self, k: usize) -> f64 {
        let level = &self.levels[k];
        let vis = level
            .counts
            .iter()
            .zip(&self.periods)
            .zip(&self.params.mu)
            .map(|((&n, &p), &m)| (p / (2.0 * n as f64)).min(p / 2.0).powf(1.0 / m))
            .fold(0.0, f64::max);
        let t_inf = -vis.ln();
        2.0 * (level.t - level.t.min(t_inf))
    }

    /// Measured ray constant: the worst snapping distance over all levels.
    pub fn ray_constant(&self) -> f64 {
        (0..self.levels.len()).map(|k| self.snap_distance(k)).fold(0.0, f64::max)
    }

    fn mixed_radix(counts: &[u64], mut flat: u64) -> Vec<u64> {
        counts
            .iter()
            .map(|&n| {
                let j = flat % n;
                flat /= n;
                j
            })
            .collect()
    }

    fn flat_index(counts: &[u64], j: &[u64]) -> u64 {
        let mut stride = 1;
        let mut flat = 0;
        for (&ji, &n) in j.iter().zip(counts) {
            flat += ji * stride;
            stride *= n;
        }
        flat
    }

    /// Enumerates every lattice point with horizontal cyclic edges and vertical edges.
    pub fn to_net(&self, cap: usize) -> Result<Net, SpaceError> {
        let requested = self.total_points();
        if requested > cap as f64 {
            return Err(SpaceError::SizeCap { requested, cap });
        }
        let n = self.params.base_dim;
        let mut offsets = Vec::with_capacity(self.levels.len());
        let mut points = Vec::with_capacity(requested as usize);
        let mut measure = Vec::with_capacity(requested as usize);
        for (k, level) in self.levels.iter().enumerate() {
            offsets.push(points.len());
            let size = level.size() as u64;
            for flat in 0..size {
                points.push(self.point(k, &Self::mixed_radix(&level.counts, flat)));
                measure.push(level.weight);
            }
        }
        let mut edges = Vec::new();
        for (k, level) in self.levels.iter().enumerate() {
            let size = level.size() as u64;
            let next = self.levels.get(k + 1);
            for flat in 0..size {
                let j = Self::mixed_radix(&level.counts, flat);
                let src = offsets[k] + flat as usize;
                for i in 0..n {
                    let ni = level.counts[i];
                    if ni < 2 || (ni == 2 && j[i] == 1) {
                        continue;
                    }
                    let mut jj = j.clone();
                    jj[i] = (j[i] + 1) % ni;
                    let len = (self.params.mu[i] * level.t).exp() * self.periods[i] / ni as f64;
                    edges.push(Edge { src, dst: offsets[k] + Self::flat_index(&level.counts, &jj) as usize, len });
                }
                if let Some(up) = next {
                    let jj: Vec<u64> = j.iter().zip(&up.counts).zip(&level.counts).map(|((&ji, &a), &b)| ji * (a / b)).collect();
                    edges.push(Edge {
                        src,
                        dst: offsets[k + 1] + Self::flat_index(&up.counts, &jj) as usize,
                        len: up.t - level.t,
                    });
                }
            }
        }
        let mut net = Net::assemble(self.kind(), self.params.clone(), points, measure, edges, Oracle::RadialFormula);
        net.ray_constant = Some(self.ray_constant());
        Ok(net)
    }

    /// Random grid indices on level `k`.
    pub fn random_index(&self, k: usize, rng: &mut rng::Rng) -> Vec<u64> {
        self.levels[k].counts.iter().map(|&n| rng.gen_range(0..n)).collect()
    }

    /// A sampled sub-net of the lattice for radii where enumeration is out of reach.
    ///
    /// Mixes uniformly random points, whole vertical columns, and near pairs
    /// (grid neighbours at a random level) so that every distance regime of the
    /// radial oracle is represented. Duplicates are removed; the measure is the
    /// lattice weight of each point. The sampled net carries no edges.
    pub fn sample_net(&self, random: usize, columns: usize, near: usize, seed: u64) -> Net {
        let mut rng = rng::stream(seed, "zmu-sample");
        let top = self.levels.len() - 1;
        let mut keys: BTreeSet<(usize, Vec<u64>)> = BTreeSet::new();
        for _ in 0..random {
            let k = rng.gen_range(0..=top);
            keys.insert((k, self.random_index(k, &mut rng)));
        }
        for _ in 0..columns {
            let x: Vec<f64> = self.periods.iter().map(|&p| rng.gen_range(0.0..p)).collect();
            for k in 0..=top {
                keys.insert((k, self.nearest_index(k, &x)));
            }
        }
        for _ in 0..near {
            let k = rng.gen_range(0..=top);
            let j = self.random_index(k, &mut rng);
            let i = rng.gen_range(0..self.params.base_dim);
            let n = self.levels[k].counts[i];
            let step = rng.gen_range(1..=n.clamp(1, 4));
            let mut jj = j.clone();
            jj[i] = (j[i] + step) % n;
            let kk = (k + rng.gen_range(0..=1usize)).min(top);
            let jj = if kk == k {
                jj
            } else {
                let x = self.point(k, &jj);
                self.locate_coords(kk, &x)
            };
            keys.insert((k, j));
            keys.insert((kk, jj));
        }
        let points: Vec<Point> = keys.iter().map(|(k, j)| self.point(*k, j)).collect();
        let measure = keys.iter().map(|(k, _)| self.levels[*k].weight).collect();
        let mut net = Net::assemble(self.kind(), self.params.clone(), points, measure, Vec::new(), Oracle::RadialFormula);
        net.ray_constant = Some(self.ray_constant());
        net
    }

    fn locate_coords(&self, k: usize, p: &Point) -> Vec<u64> {
        match p {
            Point::Z { x, .. } | Point::ZCover { x, .. } => self.nearest_index(k, x),
            _ => vec![0; self.params.base_dim],
        }
    }
}

/// Enumerated Z_μ net (or its double cover), capped at [`DEFAULT_POINT_CAP`] points.
pub fn build_zmu_net(params: &SpaceParams, cover: bool) -> Result<Net, SpaceError> {
    ZmuLattice::new(params.clone(), cover)?.to_net(DEFAULT_POINT_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        assert_eq!(radial_distance_formula(5.0, 5.0, 5.0), 0.0);
        assert_eq!(radial_distance_formula(3.0, 7.0, 10.0), 4.0);
        assert_eq!(radial_distance_formula(5.0, 5.0, 1.0), 8.0);
        assert_eq!(radial_distance_formula(2.0, 9.0, f64::INFINITY), 7.0);
    }

    #[test]
    fn visual_examples() {
        let mu = [1.0, 2.0];
        assert_eq!(zmu_visual_distance(&[0.3, 0.4], &[0.3, 0.4], &mu), 0.0);
        assert!((zmu_visual_distance(&[0.1, 0.0], &[0.0, 0.0], &mu) - 0.1).abs() < 1e-15);
        assert!((zmu_visual_distance(&[0.0, 0.25], &[0.0, 0.0], &mu) - 0.5).abs() < 1e-15);
        assert!((zmu_visual_distance(&[0.95], &[0.05], &[1.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let mu = [1.0];
        let p = Point::Z { t: 2.0, x: vec![0.3] };
        let q = Point::Z { t: 9.0, x: vec![0.3] };
        assert_eq!(zmu_distance(&p, &p, &mu), 0.0);
        assert_eq!(zmu_distance(&p, &q, &mu), 7.0);
        let r = 6.0;
        let a = Point::Z { t: r, x: vec![0.0] };
        let b = Point::Z { t: r, x: vec![0.5] };
        assert!((zmu_distance(&a, &b, &mu) - (2.0 * r - 2.0 * 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn points_within_one_visual_cell_coincide() {
        let mu = [1.0];
        let p = Point::Z { t: 2.0, x: vec![0.3] };
        let q = Point::Z { t: 2.0, x: vec![0.3 + (-3.0f64).exp()] };
        assert_eq!(zmu_distance(&p, &q, &mu), 0.0);
        let far = Point::Z { t: 2.0, x: vec![0.3 + (-1.0f64).exp()] };
        assert!(zmu_distance(&p, &far, &mu) > 0.0);
    }

    #[test]
    fn level_counts() {
        let l = ZmuLattice::new(SpaceParams::new(vec![1.0], 0.0, 1.0).unwrap(), false).unwrap();
        assert_eq!(l.levels.len(), 1);
        assert_eq!(l.total_points(), 1.0);
        let l = ZmuLattice::new(SpaceParams::new(vec![1.0, 1.0], 5.0, 1.0).unwrap(), false).unwrap();
        for (k, level) in l.levels.iter().enumerate() {
            let ratio = level.size() / (2.0 * k as f64).exp();
            assert!((0.25..=4.0).contains(&ratio), "level {k} ratio {ratio}");
        }
        let c = ZmuLattice::new(SpaceParams::new(vec![1.0, 1.0], 5.0, 1.0).unwrap(), true).unwrap();
        for (a, b) in l.levels.iter().zip(&c.levels) {
            assert_eq!(b.counts[1], 2 * a.counts[1]);
            assert_eq!(b.counts[0], a.counts[0]);
        }
    }

    #[test]
    fn measure_is_ball_volume() {
        let params = SpaceParams::new(vec![1.0, 2.0], 3.5, 0.5).unwrap();
        for cover in [false, true] {
            let l = ZmuLattice::new(params.clone(), cover).unwrap();
            let vol = ((3.0 * 3.5f64).exp() - 1.0) / 3.0 * if cover { 2.0 } else { 1.0 };
            assert!((l.total_measure() - vol).abs() < 1e-9 * vol);
        }
    }

    #[test]
    fn enumerated_net_is_connected_with_positive_edges() {
        let params = SpaceParams::new(vec![1.0, 1.0], 3.0, 1.0).unwrap();
        let net = build_zmu_net(&params, true).unwrap();
        assert_eq!(net.len() as f64, ZmuLattice::new(params, true).unwrap().total_points());
        assert!(net.is_connected());
        assert!(net.edges.iter().all(|e| e.len > 0.0));
        assert_eq!(net.ray_constant, Some(0.0));
    }

    #[test]
    fn sampled_net_is_deterministic() {
        let l = ZmuLattice::new(SpaceParams::new(vec![1.0, 2.0], 12.0, 1.0).unwrap(), false).unwrap();
        let a = l.sample_net(50, 3, 20, 9);
        let b = l.sample_net(50, 3, 20, 9);
        assert_eq!(a.points, b.points);
        assert!(a.len() > 50);
    }
}
