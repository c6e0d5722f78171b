use super::field::{lp_mean_deviation, FunctionOnNet};
use super::kernel::Kernel;
use super::{check_p, tree_sum, Method, PoincareError, PoincareEstimate};
use crate::spaces::Net;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Eigensolver for the p = 2 problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dense up to [`DENSE_LIMIT`] points, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

const DENSE_LIMIT: usize = 800;

type Rows = Vec<Vec<(usize, f64)>>;

/// Quadratic form Σ_{x,y} |f(x) − f(y)|²W(x,y) as a Laplacian 2(D − W_sym).
fn kernel_laplacian(kernel: &Kernel) -> Rows {
    let m = &kernel.net.measure;
    let n = kernel.len();
    let mut sym: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for (x, row) in kernel.rows().iter().enumerate() {
        for &(y, w) in row {
            if x != y {
                let v = 0.5 * w * m[x] * m[y];
                *sym[x].entry(y).or_insert(0.0) += v;
                *sym[y].entry(x).or_insert(0.0) += v;
            }
        }
    }
    laplacian_from(sym.into_iter().map(|r| r.into_iter().collect()).collect(), 2.0)
}

/// Edge energy Σ_e |Δf|²/len²·(m(a) + m(b))/2 as a Laplacian.
fn edge_laplacian(net: &Net) -> Rows {
    let n = net.len();
    let mut off: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for e in &net.edges {
        let c = 0.5 * (net.measure[e.src] + net.measure[e.dst]) / (e.len * e.len);
        *off[e.src].entry(e.dst).or_insert(0.0) += c;
        *off[e.dst].entry(e.src).or_insert(0.0) += c;
    }
    laplacian_from(off.into_iter().map(|r| r.into_iter().collect()).collect(), 1.0)
}

fn laplacian_from(off: Rows, scale: f64) -> Rows {
    off.into_iter()
        .enumerate()
        .map(|(i, row)| {
            let deg: f64 = row.iter().map(|e| e.1).sum();
            let mut out: Vec<(usize, f64)> = row.into_iter().map(|(j, w)| (j, -scale * w)).collect();
            out.push((i, scale * deg));
            out.sort_by_key(|e| e.0);
            out
        })
        .collect()
}

fn components(lap: &Rows) -> usize {
    let n = lap.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &(w, x) in &lap[v] {
                if w != v && x != 0.0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

fn quadratic(lap: &Rows, f: &[f64]) -> f64 {
    let terms: Vec<f64> = lap.par_iter().enumerate().map(|(i, row)| f[i] * row.iter().map(|&(j, w)| w * f[j]).sum::<f64>()).collect();
    tree_sum(&terms)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Smallest eigenpair of L f = λ M f on M-mean-zero functions.
fn second_eigen(lap: &Rows, mass: &[f64], solver: Solver, seed: u64) -> Result<(f64, Vec<f64>), PoincareError> {
    let n = lap.len();
    if n < 2 {
        return Err(PoincareError::WrongNet("need at least two points".into()));
    }
    let comps = components(lap);
    if comps > 1 {
        return Err(PoincareError::Disconnected { components: comps });
    }
    let s: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let mut v0 = s.clone();
    normalize(&mut v0);
    // A = M^{-1/2} L M^{-1/2}.
    let a_rows: Rows = lap.iter().enumerate().map(|(i, row)| row.iter().map(|&(j, w)| (j, w / (s[i] * s[j]))).collect()).collect();
    let sigma = a_rows.iter().map(|r| r.iter().map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max);
    let use_dense = match solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => n <= DENSE_LIMIT,
    };
    let v = if use_dense {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, row) in a_rows.iter().enumerate() {
            for &(j, w) in row {
                a[(i, j)] += w;
            }
        }
        let u = DVector::from_column_slice(&v0);
        a += (sigma + 1.0) * &u * u.transpose();
        let eig = SymmetricEigen::new(a);
        let k = (0..n).min_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).expect("n ≥ 2");
        eig.eigenvectors.column(k).iter().copied().collect::<Vec<f64>>()
    } else {
        lanczos_smallest(&a_rows, &v0, sigma, seed)?
    };
    let f: Vec<f64> = v.iter().zip(&s).map(|(x, si)| x / si).collect();
    let mean = dot(&f, mass) / mass.iter().sum::<f64>();
    let f: Vec<f64> = f.iter().map(|x| x - mean).collect();
    let lambda = quadratic(lap, &f) / f.iter().zip(mass).map(|(x, m)| x * x * m).sum::<f64>();
    Ok((lambda, f))
}

/// Restarted Lanczos with full reorthogonalization on σI − A, deflating v0.
fn lanczos_smallest(a: &Rows, v0: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>, PoincareError> {
    let n = a.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            *o = sigma * x[i] - a[i].iter().map(|&(j, w)| w * x[j]).sum::<f64>();
        });
    };
    let mut rng = crate::rng::stream(seed, "lanczos");
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = (n - 1).min(300);
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let mut q = start.clone();
        let c0 = dot(&q, v0);
        axpy(&mut q, -c0, v0);
        normalize(&mut q);
        let mut basis: Vec<Vec<f64>> = vec![q];
        let (mut alphas, mut betas) = (Vec::new(), Vec::new());
        let mut w = vec![0.0; n];
        for j in 0..m {
            apply(&basis[j], &mut w);
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            for _ in 0..2 {
                let c0 = dot(&w, v0);
                axpy(&mut w, -c0, v0);
                for b in &basis {
                    let c = dot(&w, b);
                    axpy(&mut w, -c, b);
                }
            }
            let beta = normalize(&mut w);
            if beta < 1e-13 * sigma.max(1.0) || j + 1 == m {
                break;
            }
            betas.push(beta);
            basis.push(w.clone());
        }
        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let top = (0..k).max_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).expect("k ≥ 1");
        let theta = eig.eigenvalues[top];
        let mut x = vec![0.0; n];
        for (b, &c) in basis.iter().zip(eig.eigenvectors.column(top).iter()) {
            axpy(&mut x, c, b);
        }
        normalize(&mut x);
        apply(&x, &mut w);
        axpy(&mut w, -theta, &x);
        let residual = dot(&w, &w).sqrt();
        last = residual;
        if residual <= 1e-10 * sigma.max(1e-300) {
            return Ok(x);
        }
        start = x;
    }
    Err(PoincareError::NoConvergence(last))
}

/// Exact C₂ for the kernel seminorm (automatic solver choice).
pub fn poincare_exact_p2(kernel: &Kernel) -> Result<PoincareEstimate, PoincareError> {
    poincare_exact_p2_with(kernel, Solver::Auto, 0)
}

/// C₂ = 1/√λ₂ of the kernel Laplacian against the measure.
pub fn poincare_exact_p2_with(kernel: &Kernel, solver: Solver, seed: u64) -> Result<PoincareEstimate, PoincareError> {
    let lap = kernel_laplacian(kernel);
    let (lambda, f) = second_eigen(&lap, &kernel.net.measure, solver, seed)?;
    let c = 1.0 / lambda.sqrt();
    Ok(PoincareEstimate {
        p: 2.0,
        lower: c,
        upper: Some(c),
        method: Method::SpectralP2,
        kernel_width: Some(kernel.width),
        witness: Some(FunctionOnNet::real(kernel.net.clone(), f)?),
    })
}

/// Exact C₂ for the edge-gradient energy of the net.
pub fn poincare_gradient_p2(net: &Arc<Net>, solver: Solver) -> Result<PoincareEstimate, PoincareError> {
    if net.edges.is_empty() {
        return Err(PoincareError::NoEdges);
    }
    let lap = edge_laplacian(net);
    let (lambda, f) = second_eigen(&lap, &net.measure, solver, 0)?;
    let c = 1.0 / lambda.sqrt();
    Ok(PoincareEstimate {
        p: 2.0,
        lower: c,
        upper: Some(c),
        method: Method::SpectralGradient,
        kernel_width: None,
        witness: Some(FunctionOnNet::real(net.clone(), f)?),
    })
}

struct Quotient<'a> {
    w: Rows,
    measure: &'a [f64],
    p: f64,
}

impl Quotient<'_> {
    fn energy(&self, f: &[f64]) -> f64 {
        let terms: Vec<f64> =
            self.w.par_iter().enumerate().map(|(x, row)| row.iter().map(|&(y, w)| (f[x] - f[y]).abs().powf(self.p) * w).sum()).collect();
        tree_sum(&terms)
    }

    fn value(&self, f: &[f64]) -> f64 {
        let e = self.energy(f);
        if e <= 0.0 {
            return 0.0;
        }
        lp_mean_deviation(f, self.p, self.measure).1 / e.powf(1.0 / self.p)
    }

    fn gradient(&self, f: &[f64]) -> Vec<f64> {
        let p = self.p;
        let (c, dev) = lp_mean_deviation(f, p, self.measure);
        let a = dev.powf(p);
        let b = self.energy(f);
        let powsign = |d: f64| if d == 0.0 { 0.0 } else { d.signum() * d.abs().powf(p - 1.0) };
        (0..f.len())
            .into_par_iter()
            .map(|x| {
                let da = p * self.measure[x] * powsign(f[x] - c);
                let db = 2.0 * p * self.w[x].iter().map(|&(y, w)| powsign(f[x] - f[y]) * w).sum::<f64>();
                da / a - db / b
            })
            .collect()
    }
}

/// Lower bound on C_p from normalized ascent on the Poincaré quotient.
///
/// Restart 0 starts from the p = 2 eigenfunction, restart 1 from a
/// two-pole distance function, restart 2 from its sign, and later restarts
/// from bumps at seeded random points. Each step moves along the gradient
/// of log(quotient) and backtracks until the quotient increases.
pub fn poincare_lower_ascent(kernel: &Kernel, p: f64, restarts: usize, iters: usize, seed: u64) -> Result<PoincareEstimate, PoincareError> {
    check_p(p)?;
    let net = &kernel.net;
    let n = net.len();
    let m = &net.measure;
    let mut sym: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for (x, row) in kernel.rows().iter().enumerate() {
        for &(y, w) in row {
            if x != y {
                let v = 0.5 * w * m[x] * m[y];
                *sym[x].entry(y).or_insert(0.0) += v;
                *sym[y].entry(x).or_insert(0.0) += v;
            }
        }
    }
    let q = Quotient { w: sym.into_iter().map(|r| r.into_iter().collect()).collect(), measure: m, p };
    let far = (0..n).max_by(|&a, &b| net.distance(0, a).total_cmp(&net.distance(0, b))).unwrap_or(0);
    let eigen = poincare_exact_p2(kernel).ok().and_then(|e| e.witness).map(|w| w.real_parts());
    let runs: Vec<(f64, Vec<f64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = crate::rng::stream(seed.wrapping_add(r as u64), "ascent");
            let mut f: Vec<f64> = match (r, &eigen) {
                (0, Some(e)) => e.clone(),
                (0 | 1, _) => (0..n).map(|i| net.distance(0, i) - net.distance(far, i)).collect(),
                (2, _) => (0..n).map(|i| (net.distance(0, i) - net.distance(far, i)).signum()).collect(),
                _ => {
                    let c = rng.gen_range(0..n);
                    let radius = 2.0 * kernel.width.max(net.min_edge());
                    (0..n).map(|i| (1.0 - net.distance(c, i) / radius).max(0.0) + 1e-3 * rng.gen_range(-1.0..1.0)).collect()
                }
            };
            let mut best = q.value(&f);
            let mut step = 0.1;
            for _ in 0..iters {
                if step < 1e-10 {
                    break;
                }
                let g = q.gradient(&f);
                let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                let spread = f.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - f.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                if !(gmax > 0.0) || !gmax.is_finite() || !(spread > 0.0) {
                    break;
                }
                let trial: Vec<f64> = f.iter().zip(&g).map(|(x, d)| x + step * spread * d / gmax).collect();
                let v = q.value(&trial);
                if v > best {
                    best = v;
                    f = trial;
                    step *= 1.5;
                } else {
                    step *= 0.5;
                }
            }
            (best, f)
        })
        .collect();
    let (_, witness) = runs
        .into_iter()
        .enumerate()
        .fold(None, |acc: Option<(f64, Vec<f64>)>, (_, (v, f))| match acc {
            Some((bv, bf)) if bv >= v => Some((bv, bf)),
            _ => Some((v, f)),
        })
        .expect("at least one restart");
    let lower = q.value(&witness);
    Ok(PoincareEstimate {
        p,
        lower,
        upper: None,
        method: Method::Ascent,
        kernel_width: Some(kernel.width),
        witness: Some(FunctionOnNet::real(net.clone(), witness)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::{make_ball_kernel, seminorm};
    use crate::spaces::{build_h2_net, Edge};

    fn quotient(kernel: &Kernel, f: &FunctionOnNet, p: f64) -> f64 {
        lp_mean_deviation(&f.real_parts(), p, &kernel.net.measure).1 / seminorm(f, kernel, p).unwrap()
    }

    #[test]
    fn two_point_constant() {
        let net = Arc::new(Net::from_graph(2, vec![Edge { src: 0, dst: 1, len: 1.0 }], None).unwrap());
        let k = make_ball_kernel(&net, 1.0).unwrap();
        let est = poincare_exact_p2(&k).unwrap();
        assert!((est.lower - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(est.upper, Some(est.lower));
    }

    #[test]
    fn disconnected_is_reported() {
        let net = Arc::new(Net::from_graph(4, vec![Edge { src: 0, dst: 1, len: 1.0 }, Edge { src: 2, dst: 3, len: 1.0 }], None).unwrap());
        let k = make_ball_kernel(&net, 1.0).unwrap();
        assert!(matches!(poincare_exact_p2(&k), Err(PoincareError::Disconnected { components: 2 })));
    }

    #[test]
    fn lanczos_matches_dense() {
        let net = Arc::new(build_h2_net(3.5, 1.0).unwrap());
        assert!(net.len() <= 200, "{}", net.len());
        let k = make_ball_kernel(&net, 1.5).unwrap();
        let dense = poincare_exact_p2_with(&k, Solver::Dense, 0).unwrap();
        let lanczos = poincare_exact_p2_with(&k, Solver::Lanczos, 3).unwrap();
        assert!((dense.lower - lanczos.lower).abs() < 1e-6 * dense.lower);
        let w = dense.witness.unwrap();
        assert!((quotient(&k, &w, 2.0) - dense.lower).abs() < 1e-6 * dense.lower);
    }

    #[test]
    fn ascent_at_two_reproduces_the_spectral_constant() {
        let net = Arc::new(build_h2_net(3.0, 1.0).unwrap());
        let k = make_ball_kernel(&net, 1.5).unwrap();
        let exact = poincare_exact_p2(&k).unwrap().lower;
        let asc = poincare_lower_ascent(&k, 2.0, 4, 100, 1).unwrap();
        assert!(asc.lower <= exact * (1.0 + 1e-9));
        assert!(asc.lower >= 0.99 * exact);
        let w = asc.witness.unwrap();
        assert!((quotient(&k, &w, 2.0) - asc.lower).abs() < 1e-6 * asc.lower);
    }

    #[test]
    fn ascent_certifies_its_witness() {
        let net = Arc::new(build_h2_net(3.0, 1.0).unwrap());
        let k = make_ball_kernel(&net, 1.5).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let est = poincare_lower_ascent(&k, p, 3, 50, 2).unwrap();
            let w = est.witness.unwrap();
            assert!(est.lower > 0.0);
            assert!((quotient(&k, &w, p) - est.lower).abs() < 1e-6 * est.lower);
        }
    }

    #[test]
    fn gradient_constant_of_a_path() {
        let n = 30;
        let edges = (0..n - 1).map(|i| Edge { src: i, dst: i + 1, len: 1.0 }).collect();
        let net = Arc::new(Net::from_graph(n, edges, None).unwrap());
        let est = poincare_gradient_p2(&net, Solver::Dense).unwrap();
        // Path Laplacian with half-weight end vertices in the energy.
        let lap_min = 2.0 * (1.0 - (std::f64::consts::PI / n as f64).cos());
        assert!((1.0 / est.lower.powi(2) - lap_min).abs() < 0.05 * lap_min);
    }
}
