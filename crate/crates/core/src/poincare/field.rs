use super::kernel::{check_same, Kernel};
use super::{check_p, tree_sum, PoincareError};
use crate::embeddings::PointMap;
use crate::spaces::Net;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

/// Real or complex values, one per net point.
#[derive(Debug, Clone)]
pub struct FunctionOnNet {
    pub net: Arc<Net>,
    pub values: Vec<Complex64>,
}

impl FunctionOnNet {
    pub fn complex(net: Arc<Net>, values: Vec<Complex64>) -> Result<Self, PoincareError> {
        if values.len() != net.len() {
            return Err(PoincareError::NetMismatch);
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PoincareError::WrongNet("function values must be finite".into()));
        }
        Ok(Self { net, values })
    }

    pub fn real(net: Arc<Net>, values: Vec<f64>) -> Result<Self, PoincareError> {
        Self::complex(net, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn constant(net: Arc<Net>, c: f64) -> Self {
        let n = net.len();
        Self { net, values: vec![Complex64::new(c, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Σ f·m.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().zip(&self.net.measure).map(|(v, &m)| v * m).sum()
    }

    /// (Σ |f|^p m)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let terms: Vec<f64> = self.values.iter().zip(&self.net.measure).map(|(v, &m)| v.norm().powf(p) * m).collect();
        tree_sum(&terms).powf(1.0 / p)
    }
}

#[derive(Debug, Clone)]
enum CocycleValues {
    Potential(Vec<f64>),
    Dense(Vec<f64>),
}

/// Antisymmetric additive pair function a(y₁, y₂).
///
/// On a finite net every cocycle is a potential difference g(y₁) − g(y₂);
/// the dense form stores arbitrary pair values and is checked, not trusted.
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub net: Arc<Net>,
    values: CocycleValues,
}

impl Cocycle {
    /// a(x, y) = g(x) − g(y).
    pub fn from_potential(net: Arc<Net>, g: Vec<f64>) -> Result<Self, PoincareError> {
        if g.len() != net.len() {
            return Err(PoincareError::NetMismatch);
        }
        Ok(Self { net, values: CocycleValues::Potential(g) })
    }

    /// Row-major n×n pair values; must be antisymmetric.
    pub fn from_matrix(net: Arc<Net>, a: Vec<f64>) -> Result<Self, PoincareError> {
        let n = net.len();
        if a.len() != n * n {
            return Err(PoincareError::NetMismatch);
        }
        for i in 0..n {
            for j in i..n {
                let (x, y) = (a[i * n + j], a[j * n + i]);
                if (x + y).abs() > 1e-9 * (1.0 + x.abs()) {
                    return Err(PoincareError::NotCocycle(format!("a({i},{j}) = {x} but a({j},{i}) = {y}")));
                }
            }
        }
        Ok(Self { net, values: CocycleValues::Dense(a) })
    }

    pub fn zero(net: Arc<Net>) -> Self {
        let n = net.len();
        Self { net, values: CocycleValues::Potential(vec![0.0; n]) }
    }

    /// Potential difference of a uniform random potential in [−1, 1].
    pub fn random(net: Arc<Net>, seed: u64) -> Self {
        let mut rng = crate::rng::stream(seed, "cocycle");
        let g = (0..net.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { net, values: CocycleValues::Potential(g) }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        match &self.values {
            CocycleValues::Potential(g) => g[i] - g[j],
            CocycleValues::Dense(a) => a[i * self.net.len() + j],
        }
    }

    pub fn potential(&self) -> Option<&[f64]> {
        match &self.values {
            CocycleValues::Potential(g) => Some(g),
            CocycleValues::Dense(_) => None,
        }
    }

    /// Dense copy of the pair values.
    pub fn to_matrix(&self) -> Vec<f64> {
        let n = self.net.len();
        (0..n * n).map(|k| self.value(k / n, k % n)).collect()
    }

    /// Largest |a(y₁,y₂) − a(y₁,y₃) − a(y₃,y₂)| over random triples.
    pub fn identity_defect(&self, triples: usize, seed: u64) -> f64 {
        let n = self.net.len();
        let mut rng = crate::rng::stream(seed, "triples");
        (0..triples)
            .map(|_| {
                let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                (self.value(a, b) - self.value(a, c) - self.value(c, b)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Anything with a modulus of pair differences: functions and cocycles.
pub trait PairField {
    fn net(&self) -> &Arc<Net>;
    fn pair_abs(&self, i: usize, j: usize) -> f64;
}

impl PairField for FunctionOnNet {
    fn net(&self) -> &Arc<Net> {
        &self.net
    }
    fn pair_abs(&self, i: usize, j: usize) -> f64 {
        (self.values[i] - self.values[j]).norm()
    }
}

impl PairField for Cocycle {
    fn net(&self) -> &Arc<Net> {
        &self.net
    }
    fn pair_abs(&self, i: usize, j: usize) -> f64 {
        self.value(i, j).abs()
    }
}

/// N_{p,ψ} of a function or cocycle.
pub fn seminorm<T: PairField + Sync>(object: &T, kernel: &Kernel, p: f64) -> Result<f64, PoincareError> {
    check_p(p)?;
    check_same(object.net(), &kernel.net)?;
    let m = &kernel.net.measure;
    let rows: Vec<f64> = kernel
        .rows()
        .par_iter()
        .enumerate()
        .map(|(i, row)| m[i] * row.iter().map(|&(j, w)| object.pair_abs(i, j).powf(p) * w * m[j]).sum::<f64>())
        .collect();
    Ok(tree_sum(&rows).powf(1.0 / p))
}

/// Optimal centering m_f = argmin_m ‖f − m‖_p and the minimal norm.
pub fn lp_mean_deviation(f: &[f64], p: f64, measure: &[f64]) -> (f64, f64) {
    let norm = |m: f64| -> f64 {
        let terms: Vec<f64> = f.iter().zip(measure).map(|(&v, &w)| (v - m).abs().powf(p) * w).collect();
        tree_sum(&terms).powf(1.0 / p)
    };
    if f.is_empty() {
        return (0.0, 0.0);
    }
    let m = if p == 2.0 {
        let total: f64 = measure.iter().sum();
        f.iter().zip(measure).map(|(&v, &w)| v * w).sum::<f64>() / total
    } else if p == 1.0 {
        weighted_median(f, measure)
    } else {
        let (mut lo, mut hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut fa, mut fb) = (norm(a), norm(b));
        for _ in 0..200 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = norm(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = norm(b);
            }
        }
        (lo + hi) / 2.0
    };
    (m, norm(m))
}

fn weighted_median(f: &[f64], measure: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
    let half = measure.iter().sum::<f64>() / 2.0;
    let mut acc = 0.0;
    for &i in &order {
        acc += measure[i];
        if acc >= half {
            return f[i];
        }
    }
    f[order[order.len() - 1]]
}

/// (Σ_edges |f(a) − f(b)|^p/len^p · (m(a) + m(b))/2)^{1/p}.
pub fn gradient_seminorm_discrete(f: &FunctionOnNet, p: f64) -> Result<f64, PoincareError> {
    check_p(p)?;
    let net = &f.net;
    if net.edges.is_empty() {
        return Err(PoincareError::NoEdges);
    }
    let terms: Vec<f64> = net
        .edges
        .par_iter()
        .map(|e| {
            let q = (f.values[e.src] - f.values[e.dst]).norm() / e.len;
            q.powf(p) * 0.5 * (net.measure[e.src] + net.measure[e.dst])
        })
        .collect();
    Ok(tree_sum(&terms).powf(1.0 / p))
}

fn check_map(kernel: &Kernel, map: &PointMap) -> Result<(), PoincareError> {
    check_same(&kernel.net, &map.codomain)
}

/// h(x) = Σ_z g(z)·ψ(f(x), z)·m(z).
pub fn transport_function(g: &FunctionOnNet, psi: &Kernel, map: &PointMap) -> Result<FunctionOnNet, PoincareError> {
    check_same(&g.net, &psi.net)?;
    check_map(psi, map)?;
    let m = &psi.net.measure;
    let values = map
        .assignment
        .par_iter()
        .map(|&y| psi.rows()[y].iter().map(|&(z, w)| g.values[z] * (w * m[z])).sum())
        .collect();
    FunctionOnNet::complex(map.domain.clone(), values)
}

/// (a ∗_t φ)(x, x') = Σ_{y,y'} a(y, y')·φ(f(x), y)·φ(f(x'), y')·m(y)m(y').
pub fn transport_cocycle(a: &Cocycle, phi: &Kernel, map: &PointMap) -> Result<Cocycle, PoincareError> {
    check_same(&a.net, &phi.net)?;
    check_map(phi, map)?;
    let m = &phi.net.measure;
    if let Some(g) = a.potential() {
        let h = map
            .assignment
            .iter()
            .map(|&y| phi.rows()[y].iter().map(|&(z, w)| g[z] * w * m[z]).sum())
            .collect();
        return Cocycle::from_potential(map.domain.clone(), h);
    }
    let nx = map.domain.len();
    let ny = phi.net.len();
    let dense = a.to_matrix();
    // Q = P·A with P(x, y) = φ(f(x), y)m(y); result = Q·Pᵀ.
    let q: Vec<Vec<f64>> = map
        .assignment
        .par_iter()
        .map(|&fx| {
            let mut row = vec![0.0; ny];
            for &(y, w) in &phi.rows()[fx] {
                let s = w * m[y];
                for (r, &v) in row.iter_mut().zip(&dense[y * ny..(y + 1) * ny]) {
                    *r += s * v;
                }
            }
            row
        })
        .collect();
    let mut out = vec![0.0; nx * nx];
    out.par_chunks_mut(nx).enumerate().for_each(|(x, row)| {
        for (xp, &fxp) in map.assignment.iter().enumerate() {
            row[xp] = phi.rows()[fxp].iter().map(|&(y, w)| q[x][y] * w * m[y]).sum();
        }
    });
    // Exact antisymmetry up to rounding.
    for i in 0..nx {
        for j in i + 1..nx {
            let v = 0.5 * (out[i * nx + j] - out[j * nx + i]);
            out[i * nx + j] = v;
            out[j * nx + i] = -v;
        }
        out[i * nx + i] = 0.0;
    }
    Cocycle::from_matrix(map.domain.clone(), out)
}

/// Constant C with N_{p,ψ}(a ∗_t φ) ≤ C·N_{p,ψ̃}(a) for every cocycle a on Y.
///
/// With V = max_y m_X(f⁻¹ B(y, R^φ)) and τ̃ the smallest weight of ψ̃ over
/// pairs at most 2R^φ + λ₁R^ψ + c₁ apart, Jensen's inequality on the two
/// probability rows of φ gives C^p = S^ψ·(S^φ·V)²/τ̃. Infinite when ψ̃
/// vanishes on some such pair.
pub fn transported_cocycle_constant(
    psi: &Kernel,
    phi: &Kernel,
    map: &PointMap,
    psi_tilde: &Kernel,
    lambda1: f64,
    c1: f64,
    p: f64,
) -> Result<f64, PoincareError> {
    check_p(p)?;
    check_same(&psi.net, &map.domain)?;
    check_map(phi, map)?;
    check_same(&psi_tilde.net, &phi.net)?;
    let y = &phi.net;
    let reach = 2.0 * phi.width + lambda1 * psi.width + c1;
    let tau = (0..y.len())
        .into_par_iter()
        .map(|a| {
            y.neighbors_within(a, reach).into_iter().map(|b| psi_tilde.weight(a, b)).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if !(tau > 0.0) {
        return Ok(f64::INFINITY);
    }
    let xm = &map.domain.measure;
    let v = (0..y.len())
        .into_par_iter()
        .map(|b| {
            map.assignment
                .iter()
                .enumerate()
                .filter(|&(_, &fx)| y.distance(fx, b) <= phi.width)
                .map(|(x, _)| xm[x])
                .sum::<f64>()
        })
        .reduce(|| 0.0, f64::max);
    Ok((psi.sup * (phi.sup * v).powi(2) / tau).powf(1.0 / p))
}

/// Constant Ĉ with N_{p,ψ₂}(f) ≤ Ĉ·N_{p,ψ₁}(f) for every f.
///
/// Each pair in the support of ψ₂ is routed along a fewest-hop path of
/// ψ₁-positive pairs; with k hops, |f(x) − f(x')|^p ≤ k^{p−1}Σ|Δf|^p along
/// the path. Ĉ^p is the largest routed load on a ψ₁ edge divided by that
/// edge's own weight in N_{p,ψ₁}^p.
pub fn seminorm_equivalence_constant(from: &Kernel, to: &Kernel, p: f64) -> Result<f64, PoincareError> {
    check_p(p)?;
    check_same(&from.net, &to.net)?;
    let net = &from.net;
    let n = net.len();
    let m = &net.measure;
    let sym = |a: usize, b: usize| 0.5 * (from.weight(a, b) + from.weight(b, a));
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            let mut out: Vec<usize> = from.rows()[a].iter().filter(|e| e.0 != a && e.1 > 0.0).map(|e| e.0).collect();
            for b in 0..n {
                if b != a && from.weight(b, a) > 0.0 && !out.contains(&b) {
                    out.push(b);
                }
            }
            out.sort_unstable();
            out
        })
        .collect();
    let loads: Vec<Result<HashMap<(usize, usize), f64>, PoincareError>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut parent = vec![usize::MAX; n];
            let mut hops = vec![usize::MAX; n];
            hops[x] = 0;
            let mut queue = VecDeque::from([x]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if hops[w] == usize::MAX {
                        hops[w] = hops[v] + 1;
                        parent[w] = v;
                        queue.push_back(w);
                    }
                }
            }
            let mut load = HashMap::new();
            for &(xp, w) in &to.rows()[x] {
                if xp == x || w == 0.0 {
                    continue;
                }
                if hops[xp] == usize::MAX {
                    return Err(PoincareError::Disconnected { components: 2 });
                }
                let share = w * m[x] * m[xp] * (hops[xp] as f64).powf(p - 1.0);
                let mut v = xp;
                while v != x {
                    let u = parent[v];
                    *load.entry((u.min(v), u.max(v))).or_insert(0.0) += share;
                    v = u;
                }
            }
            Ok(load)
        })
        .collect();
    let mut total: HashMap<(usize, usize), f64> = HashMap::new();
    for l in loads {
        for (k, v) in l? {
            *total.entry(k).or_insert(0.0) += v;
        }
    }
    let worst = total.iter().map(|(&(a, b), &l)| l / (2.0 * sym(a, b) * m[a] * m[b])).fold(0.0, f64::max);
    Ok(worst.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::make_ball_kernel;
    use crate::spaces::{build_h2_net, Edge};

    fn two_points() -> Arc<Net> {
        Arc::new(Net::from_graph(2, vec![Edge { src: 0, dst: 1, len: 1.0 }], None).unwrap())
    }

    #[test]
    fn two_point_seminorm() {
        let net = two_points();
        let k = make_ball_kernel(&net, 1.0).unwrap();
        let f = FunctionOnNet::real(net.clone(), vec![0.0, 1.0]).unwrap();
        assert!((seminorm(&f, &k, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(seminorm(&FunctionOnNet::constant(net, 3.0), &k, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_deviation_examples() {
        assert_eq!(lp_mean_deviation(&[2.0, 2.0], 3.0, &[1.0, 1.0]).1, 0.0);
        let (m, v) = lp_mean_deviation(&[0.0, 1.0], 2.0, &[1.0, 1.0]);
        assert!((m - 0.5).abs() < 1e-15 && (v - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(lp_mean_deviation(&[0.0, 0.0, 1.0], 1.0, &[1.0; 3]), (0.0, 1.0));
        let (m3, _) = lp_mean_deviation(&[0.0, 1.0], 3.0, &[1.0, 1.0]);
        assert!((m3 - 0.5).abs() < 1e-4);
    }

    #[test]
    fn gradient_of_linear_function_on_a_path() {
        let n = 50;
        let edges = (0..n - 1).map(|i| Edge { src: i, dst: i + 1, len: 1.0 }).collect();
        let net = Arc::new(Net::from_graph(n, edges, None).unwrap());
        let f = FunctionOnNet::real(net.clone(), (0..n).map(|i| 3.0 * i as f64).collect()).unwrap();
        let g = gradient_seminorm_discrete(&f, 2.0).unwrap();
        assert!((g - 3.0 * ((n - 1) as f64).sqrt()).abs() < 1e-9);
        assert_eq!(gradient_seminorm_discrete(&FunctionOnNet::constant(net, 1.0), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn transport_under_identity() {
        let net = Arc::new(build_h2_net(3.0, 1.0).unwrap());
        let map = PointMap::identity(net.clone());
        let id = Kernel::identity(net.clone());
        let g = FunctionOnNet::real(net.clone(), (0..net.len()).map(|i| (i as f64).sin()).collect()).unwrap();
        let h = transport_function(&g, &id, &map).unwrap();
        for (a, b) in g.values.iter().zip(&h.values) {
            assert!((a - b).norm() < 1e-12);
        }
        let k = make_ball_kernel(&net, 2.0).unwrap();
        let c = transport_function(&FunctionOnNet::constant(net.clone(), 2.5), &k, &map).unwrap();
        assert!(c.values.iter().all(|v| (v.re - 2.5).abs() < 1e-9));
    }

    #[test]
    fn dense_and_potential_transport_agree() {
        let net = Arc::new(build_h2_net(2.0, 1.0).unwrap());
        let k = make_ball_kernel(&net, 1.5).unwrap();
        let map = PointMap::identity(net.clone());
        let a = Cocycle::random(net.clone(), 5);
        let dense = Cocycle::from_matrix(net.clone(), a.to_matrix()).unwrap();
        let b1 = transport_cocycle(&a, &k, &map).unwrap();
        let b2 = transport_cocycle(&dense, &k, &map).unwrap();
        for i in 0..net.len() {
            for j in 0..net.len() {
                assert!((b1.value(i, j) - b2.value(i, j)).abs() < 1e-10);
            }
        }
        assert!(b2.identity_defect(1000, 1) < 1e-9);
        let zero = transport_cocycle(&Cocycle::zero(net.clone()), &k, &map).unwrap();
        assert!((0..net.len()).all(|i| zero.value(i, 0) == 0.0));
    }

    #[test]
    fn non_antisymmetric_matrix_is_rejected() {
        let net = two_points();
        assert!(Cocycle::from_matrix(net, vec![0.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn equivalence_constant_bounds_random_functions() {
        let net = Arc::new(build_h2_net(3.0, 1.0).unwrap());
        let k1 = make_ball_kernel(&net, 1.2).unwrap();
        let k2 = make_ball_kernel(&net, 3.0).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let c = seminorm_equivalence_constant(&k1, &k2, p).unwrap();
            assert!(c.is_finite());
            for seed in 0..10 {
                let mut rng = crate::rng::stream(seed, "f");
                let f = FunctionOnNet::real(net.clone(), (0..net.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
                let (n1, n2) = (seminorm(&f, &k1, p).unwrap(), seminorm(&f, &k2, p).unwrap());
                assert!(n2 <= c * n1 * (1.0 + 1e-9), "p={p}: {n2} > {c}·{n1}");
            }
        }
    }
}
