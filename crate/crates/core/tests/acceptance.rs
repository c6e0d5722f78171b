//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines show up in `cargo test`
//! output. The process fails only when a criterion outside [`EXPECTED_FAIL`]
//! fails; the expected failures are analysed in the decisions ledger.

use qi_core::boundary::{analytic_k, estimate_k, h2_radial_approximation, BoundaryMap};
use qi_core::embeddings::{measure_distortion, tree_to_h2_radius, Objective, PointMap, SqrtTreeModel, TreeToH2Model};
use qi_core::experiment::{run, Experiment, ExperimentSpec, ThetaKind};
use qi_core::fit::{fit_growth, fit_line, fit_power, Model};
use qi_core::poincare::{
    continuum_grad_integral, continuum_grad_integral_exact, gradient_seminorm_discrete, make_ball_kernel, seminorm,
    seminorm_equivalence_constant, testfunction_lower_bound, transport_cocycle, transported_cocycle_constant, Cocycle,
    FunctionOnNet, UniformColumns,
};
use qi_core::rng::stream;
use qi_core::sepvol::{connectivity_bound_check, crossing_radius, sep_upper, volume_growth_lower_bound};
use qi_core::spaces::{build_h2_net, build_tree_ball, h2_distance_polar, Edge, Net, SpaceParams, ZmuLattice};
use rand::Rng;
use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

/// Criteria whose failure is understood and recorded, not a regression.
const EXPECTED_FAIL: [u8; 2] = [2, 8];

const SEED: u64 = 20_240_611;

/// Every threshold the suite applies.
mod tol {
    pub const SQRT_BETA: (f64, f64) = (0.35, 0.65);
    pub const SQRT_R2: f64 = 0.9;
    pub const RADIUS_RATIO: (f64, f64) = (0.8, 1.2);
    pub const RADIUS_RATIO_FROM_K: usize = 5;
    pub const APPROX_ERROR: f64 = 8.0;
    pub const APPROX_PAIRS: usize = 10_000;
    pub const APPROX_DRIFT: f64 = 1.0;
    pub const K_RATIO: (f64, f64) = (0.85, 1.0);
    pub const K_GRID: usize = 1 << 10;
    pub const LOG_BETA_MAX: f64 = 0.25;
    pub const LOG_RATIO_MAX: f64 = 3.0;
    pub const QIE_SLACK: f64 = 16.0;
    pub const C2_SLOPE: (f64, f64) = (1.05, 2.6);
    pub const C2_R2: f64 = 0.9;
    pub const MEAN_ZERO: f64 = 1e-9;
    pub const UNIT_MODULUS: f64 = 1e-12;
    pub const ENERGY_REL: f64 = 0.10;
    pub const ROW_SUM: f64 = 1e-9;
    pub const COCYCLE: f64 = 1e-9;
    pub const COCYCLE_TRIPLES: usize = 1000;
    pub const INEQ_REL: f64 = 1e-9;
    pub const INSTANCES: usize = 100;
    pub const ORACLE_STEP: f64 = 0.01;
    pub const ORACLE_MAX_POINTS: usize = 6;
    pub const SEP_MAX_NODES: usize = 12;
    pub const GROWTH_RATIO: (f64, f64) = (0.4, 0.5);
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

fn c1_sqrt_tree() -> Outcome {
    let radii = [9.0, 16.0, 25.0, 36.0, 49.0];
    let series: Vec<(f64, f64)> =
        radii.iter().map(|&r| (r, SqrtTreeModel::new(r).expect("valid radius").distortion(Objective::Sum).total)).collect();
    let fit = fit_power(&series).expect("five positive points");
    let beta = fit.coefficients[1];
    let pass = within(beta, tol::SQRT_BETA) && fit.r2 >= tol::SQRT_R2;
    outcome(pass, format!("beta={beta:.4} r2={:.4} totals={:?}", fit.r2, totals(&series)))
}

fn totals(series: &[(f64, f64)]) -> Vec<String> {
    series.iter().map(|(_, y)| format!("{y:.3}")).collect()
}

fn c2_tree_to_h2() -> Outcome {
    let series: Vec<(f64, f64)> = (4..=10u32)
        .map(|r| (f64::from(r), TreeToH2Model::new(3, r).expect("valid depth").distortion(Objective::Sum).total))
        .collect();
    let fit = fit_power(&series).expect("seven positive points");
    let beta = fit.coefficients[1];
    let fit_ok = within(beta, tol::SQRT_BETA) && fit.r2 >= tol::SQRT_R2;
    let ratios: Vec<f64> =
        (tol::RADIUS_RATIO_FROM_K..=10).map(|k| tree_to_h2_radius(3, k) / (k as f64 * 3f64.ln())).collect();
    let ratio_ok = ratios.iter().all(|&q| within(q, tol::RADIUS_RATIO));
    let shown: Vec<String> = ratios.iter().map(|q| format!("{q:.3}")).collect();
    outcome(
        fit_ok && ratio_ok,
        format!("power fit {} (beta={beta:.4} r2={:.4} totals={:?}); R_k/(k ln 3) for k=5..10 = {shown:?} {}", ok(fit_ok), fit.r2, totals(&series), ok(ratio_ok)),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "out of range"
    }
}

fn max_approx_error(radius: f64, label: &str) -> f64 {
    let mut rng = stream(SEED, label);
    (0..tol::APPROX_PAIRS)
        .map(|_| {
            let (r1, r2) = (rng.gen_range(0.0..=radius), rng.gen_range(0.0..=radius));
            let (t1, t2) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            (h2_radial_approximation(r1, t1, r2, t2) - h2_distance_polar(r1, t1, r2, t2)).abs()
        })
        .fold(0.0, f64::max)
}

fn c3_distance_approximation() -> Outcome {
    let e30 = max_approx_error(30.0, "approx-30");
    let e10 = max_approx_error(10.0, "approx-10");
    let pass = e30 <= tol::APPROX_ERROR && e10 <= tol::APPROX_ERROR && e30 - e10 < tol::APPROX_DRIFT;
    outcome(pass, format!("max error R=30 {e30:.4}, R=10 {e10:.4}, drift {:.4}", e30 - e10))
}

fn zmu_identity() -> BoundaryMap {
    BoundaryMap::ZmuIdentity { mu: vec![1.0, 2.0], mu_prime: vec![1.0, 1.0] }
}

fn c4_k_analytic() -> Outcome {
    let theta = zmu_identity();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [10.0, 20.0] {
        let est = estimate_k(&theta, r, tol::K_GRID, SEED);
        let exact = analytic_k(&theta, r).expect("closed form").value;
        let q = est / exact;
        pass &= within(q, tol::K_RATIO);
        parts.push(format!("R={r}: {est:.4}/{exact:.4}={q:.4}"));
    }
    outcome(pass, parts.join(", "))
}

fn c5_log_regime() -> Outcome {
    let radii = [5.0, 10.0, 20.0, 40.0];
    let series: Vec<(f64, f64)> =
        radii.iter().map(|&r| (r, estimate_k(&BoundaryMap::Unipotent, r, tol::K_GRID, SEED))).collect();
    let fit = fit_growth(&series).expect("four positive points");
    let selected = match fit.model {
        Model::Log => true,
        Model::Power { beta } => beta <= tol::LOG_BETA_MAX,
        _ => false,
    };
    let worst = series.iter().map(|&(r, k)| k / r.ln()).fold(0.0, f64::max);
    let pass = selected && worst <= tol::LOG_RATIO_MAX;
    outcome(pass, format!("model={} K={:?} max K/ln R={worst:.4}", fit.model.label(), totals(&series)))
}

fn c6_certificate() -> Outcome {
    let mut spec = ExperimentSpec::new(Experiment::RadialZmu, vec![5.0, 10.0, 15.0]);
    spec.mu = vec![1.0, 2.0];
    spec.mu_prime = vec![1.0, 1.0];
    spec.theta = ThetaKind::ZmuIdentity;
    spec.seed = SEED;
    let table = run(&spec).expect("radial pipeline");
    let col = |name: &str| table.header.iter().position(|h| h == name).expect("column present");
    let (ik, id, ic) = (col("K"), col("ray_constant"), col("certificate_ok"));
    let pass = table.rows.iter().all(|row| row[ic] == "true");
    let parts: Vec<String> =
        table.rows.iter().map(|row| format!("R={}: K={} D={} ok={}", row[0], row[ik], row[id], row[ic])).collect();
    outcome(pass, format!("slack {}; {}", tol::QIE_SLACK, parts.join(", ")))
}

fn c7_poincare_scaling() -> Outcome {
    let series: Vec<(f64, f64)> = (4..=12)
        .map(|r| {
            let r = f64::from(r);
            let cols = UniformColumns::new(SpaceParams::new(vec![1.0, 2.0], r, 1.0).expect("valid params")).expect("columns");
            (r, cols.gradient_c2().expect("spectral solve").lower.ln())
        })
        .collect();
    let (slope, _, r2) = fit_line(&series).expect("nine points");
    let pass = within(slope, tol::C2_SLOPE) && r2 >= tol::C2_R2;
    outcome(pass, format!("slope={slope:.4} r2={r2:.4}"))
}

fn c8_test_function() -> Outcome {
    let mu = vec![1.0, 1.0];
    let (radius, p) = (4.0, 3.0);
    let lattice = ZmuLattice::new(SpaceParams::new(mu.clone(), radius, 0.25).expect("valid params"), true).expect("lattice");
    let cover = Arc::new(lattice.to_net(2_000_000).expect("cover within cap"));
    let est = testfunction_lower_bound(&cover, p).expect("test function");
    let u = est.witness.expect("witness");
    let mean = u.integral().norm() / cover.total_measure();
    let modulus = u.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
    let energy = gradient_seminorm_discrete(&u, p).expect("gradient").powf(p);
    let closed = continuum_grad_integral(&mu, p).expect("above the pole");
    let exact = continuum_grad_integral_exact(&mu, p, radius, 2.0);
    let rel = (energy - closed).abs() / closed;
    let exact_rel = (energy - exact).abs() / exact;
    let pass = mean <= tol::MEAN_ZERO && modulus <= tol::UNIT_MODULUS && rel <= tol::ENERGY_REL;
    outcome(
        pass,
        format!(
            "|mean|={mean:.2e} max||u|-1|={modulus:.2e} energy={energy:.4} vs closed form {closed:.4} (rel {rel:.3}); \
             vs direct integral over the net's height range {exact:.4} (rel {exact_rel:.4})"
        ),
    )
}

/// Connected weighted graph: a random spanning tree plus `chords` extra edges.
fn random_graph(n: usize, chords: usize, lens: (f64, f64), rng: &mut impl Rng) -> Net {
    let mut edges: Vec<Edge> =
        (1..n).map(|i| Edge { src: rng.gen_range(0..i), dst: i, len: rng.gen_range(lens.0..=lens.1) }).collect();
    for _ in 0..chords {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push(Edge { src: a, dst: b, len: rng.gen_range(lens.0..=lens.1) });
        }
    }
    let measure = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    Net::from_graph(n, edges, Some(measure)).expect("valid graph")
}

fn diameter(net: &Net) -> f64 {
    (0..net.len()).flat_map(|i| (0..net.len()).map(move |j| (i, j))).map(|(i, j)| net.distance(i, j)).fold(0.0, f64::max)
}

fn check_row_sums() -> Result<String, String> {
    let mut rng = stream(SEED, "rows");
    let mut nets: Vec<Arc<Net>> = vec![
        Arc::new(build_h2_net(3.0, 1.0).map_err(|e| e.to_string())?),
        Arc::new(build_tree_ball(3, 4).map_err(|e| e.to_string())?),
        Arc::new(
            ZmuLattice::new(SpaceParams::new(vec![1.0, 2.0], 2.0, 1.0).map_err(|e| e.to_string())?, false)
                .and_then(|l| l.to_net(100_000))
                .map_err(|e| e.to_string())?,
        ),
    ];
    nets.extend((0..5).map(|_| Arc::new(random_graph(20, 10, (0.5, 1.5), &mut rng))));
    let mut worst: f64 = 0.0;
    for net in &nets {
        for width in [0.5, 1.0, 2.0, 3.0] {
            worst = worst.max(make_ball_kernel(net, width).map_err(|e| e.to_string())?.max_row_error());
        }
    }
    if worst <= tol::ROW_SUM {
        Ok(format!("rows {worst:.1e}"))
    } else {
        Err(format!("row sum error {worst:.2e}"))
    }
}

fn check_cocycles() -> Result<String, String> {
    let net = Arc::new(build_h2_net(3.0, 1.0).map_err(|e| e.to_string())?);
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let a = Cocycle::random(net.clone(), SEED + seed);
        worst = worst.max(a.identity_defect(tol::COCYCLE_TRIPLES, seed));
        let k = make_ball_kernel(&net, 1.5).map_err(|e| e.to_string())?;
        let b = transport_cocycle(&a, &k, &PointMap::identity(net.clone())).map_err(|e| e.to_string())?;
        worst = worst.max(b.identity_defect(tol::COCYCLE_TRIPLES, seed));
    }
    if worst <= tol::COCYCLE {
        Ok(format!("cocycle {worst:.1e}"))
    } else {
        Err(format!("cocycle defect {worst:.2e}"))
    }
}

fn random_function(net: &Arc<Net>, rng: &mut impl Rng) -> FunctionOnNet {
    FunctionOnNet::real(net.clone(), (0..net.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite values")
}

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + tol::INEQ_REL) + 1e-12
}

fn check_equivalence() -> Result<String, String> {
    let mut rng = stream(SEED, "equivalence");
    for instance in 0..tol::INSTANCES {
        let n = rng.gen_range(5..=14);
        let net = Arc::new(random_graph(n, n / 2, (0.5, 1.5), &mut rng));
        let (w1, w2) = (rng.gen_range(1.5..3.0), rng.gen_range(0.5..5.0));
        let p = rng.gen_range(1.0..3.0);
        let k1 = make_ball_kernel(&net, w1).map_err(|e| e.to_string())?;
        let k2 = make_ball_kernel(&net, w2).map_err(|e| e.to_string())?;
        let c = seminorm_equivalence_constant(&k1, &k2, p).map_err(|e| e.to_string())?;
        if !c.is_finite() {
            return Err(format!("equivalence instance {instance}: infinite constant"));
        }
        for _ in 0..5 {
            let f = random_function(&net, &mut rng);
            let (n1, n2) = (seminorm(&f, &k1, p).unwrap(), seminorm(&f, &k2, p).unwrap());
            if !holds(n2, c * n1) {
                return Err(format!("equivalence instance {instance}: {n2} > {c}·{n1}"));
            }
        }
    }
    Ok(format!("equivalence {}x5", tol::INSTANCES))
}

fn check_transport() -> Result<String, String> {
    let mut rng = stream(SEED, "transport");
    for instance in 0..tol::INSTANCES {
        let (nx, ny) = (rng.gen_range(4..=12), rng.gen_range(4..=12));
        let x = Arc::new(random_graph(nx, nx / 2, (0.5, 1.5), &mut rng));
        let y = Arc::new(random_graph(ny, ny / 2, (0.5, 1.5), &mut rng));
        let assignment = (0..nx).map(|_| rng.gen_range(0..ny)).collect();
        let map = PointMap::new(x.clone(), y.clone(), assignment, "random").map_err(|e| e.to_string())?;
        let dist = measure_distortion(&map, Objective::Sum).map_err(|e| e.to_string())?;
        let p = rng.gen_range(1.0..3.0);
        let psi = make_ball_kernel(&x, rng.gen_range(0.5..3.0)).map_err(|e| e.to_string())?;
        let phi = make_ball_kernel(&y, rng.gen_range(0.5..3.0)).map_err(|e| e.to_string())?;
        let psi_tilde = make_ball_kernel(&y, diameter(&y) + 1.0).map_err(|e| e.to_string())?;
        let c = transported_cocycle_constant(&psi, &phi, &map, &psi_tilde, dist.lambda1, dist.c1, p)
            .map_err(|e| e.to_string())?;
        if !c.is_finite() {
            return Err(format!("transport instance {instance}: infinite constant"));
        }
        for k in 0..5 {
            let a = Cocycle::random(y.clone(), SEED ^ (instance * 8 + k) as u64);
            let b = transport_cocycle(&a, &phi, &map).map_err(|e| e.to_string())?;
            let (lhs, rhs) = (seminorm(&b, &psi, p).unwrap(), seminorm(&a, &psi_tilde, p).unwrap());
            if !holds(lhs, c * rhs) {
                return Err(format!("transport instance {instance}: {lhs} > {c}·{rhs}"));
            }
        }
    }
    Ok(format!("transport {}x5", tol::INSTANCES))
}

/// min over a λ grid of λ + max(0, max(y − λx)); exact c for each grid λ.
fn grid_oracle(points: &[(f64, f64)]) -> f64 {
    let top = points.iter().filter(|p| p.0 > 0.0).map(|p| p.1 / p.0).fold(1.0, f64::max);
    let steps = ((top - 1.0) / tol::ORACLE_STEP).ceil() as usize + 1;
    (0..=steps)
        .map(|s| {
            let lambda = 1.0 + s as f64 * tol::ORACLE_STEP;
            lambda + points.iter().map(|&(x, y)| y - lambda * x).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_distortion_oracle() -> Result<String, String> {
    let mut rng = stream(SEED, "oracle");
    let m = tol::ORACLE_MAX_POINTS;
    let codomain = Arc::new(random_graph(m, 3, (0.5, 1.5), &mut rng));
    let mut maps = 0usize;
    for n in 2..=m {
        let domain = Arc::new(random_graph(n, 2, (0.5, 1.5), &mut rng));
        let dd: Vec<(usize, usize, f64)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (i, j, domain.distance(i, j))).collect();
        let xmax = dd.iter().map(|t| t.2).fold(0.0, f64::max);
        for code in 0..m.pow(n as u32) {
            let assignment: Vec<usize> = (0..n).map(|k| code / m.pow(k as u32) % m).collect();
            let up: Vec<(f64, f64)> =
                dd.iter().map(|&(i, j, d)| (d, codomain.distance(assignment[i], assignment[j]))).collect();
            let ymax = up.iter().map(|p| p.1).fold(0.0, f64::max);
            let lo: Vec<(f64, f64)> = up.iter().map(|&(x, y)| (y, x)).collect();
            let map = PointMap::new(domain.clone(), codomain.clone(), assignment, "enumerated").map_err(|e| e.to_string())?;
            let rep = measure_distortion(&map, Objective::Sum).map_err(|e| e.to_string())?;
            for (name, got, oracle, spread) in [
                ("upper", rep.lambda1 + rep.c1, grid_oracle(&up), xmax),
                ("lower", rep.lambda2 + rep.c2, grid_oracle(&lo), ymax),
            ] {
                if got > oracle + 1e-9 || oracle - got > tol::ORACLE_STEP * (1.0 + spread) + 1e-9 {
                    return Err(format!("{name} side, {n} points, map {code}: measured {got}, oracle {oracle}"));
                }
            }
            maps += 1;
        }
    }
    Ok(format!("oracle {maps} maps"))
}

/// Minimum crossing count over all balanced bipartitions, from first principles.
fn sep_oracle(net: &Net, a: f64) -> Option<usize> {
    let n = net.len();
    let d = |i: usize, j: usize| net.distance(i, j);
    let mut family: Vec<usize> = Vec::new();
    for i in 0..n {
        if family.iter().all(|&z| d(i, z) > 2.0 * a) {
            family.push(i);
        }
    }
    let rho = 2.0 * a + 0.5 * net.edges.iter().map(|e| e.len).fold(0.0, f64::max);
    let cover = |members: &dyn Fn(usize) -> bool| {
        let mut centers: Vec<usize> = Vec::new();
        for i in (0..n).filter(|&i| members(i)) {
            if !centers.iter().any(|&c| d(c, i) <= a) {
                centers.push(i);
            }
        }
        centers.len()
    };
    let total = cover(&|_| true);
    (1u32..(1 << n) - 1)
        .filter_map(|mask| {
            let inside = |i: usize| mask >> i & 1 == 1;
            let (v1, v2) = (cover(&inside), cover(&|i| !inside(i)));
            if 3 * v1 < total || 3 * v2 < total {
                return None;
            }
            let crossing = family
                .iter()
                .filter(|&&z| {
                    let ball: Vec<usize> = (0..n).filter(|&x| d(z, x) <= rho).collect();
                    ball.iter().any(|&x| inside(x)) && ball.iter().any(|&x| !inside(x))
                })
                .count();
            Some(crossing)
        })
        .min()
}

fn check_separation_oracle() -> Result<String, String> {
    let mut rng = stream(SEED, "sep");
    let mut graphs = 0;
    for n in 2..=tol::SEP_MAX_NODES {
        for _ in 0..6 {
            let net = Arc::new(random_graph(n, rng.gen_range(0..n), (0.5, 1.5), &mut rng).with_counting_measure());
            for a in [0.0, 0.5, 1.0, 2.0] {
                let got = sep_upper(&net, a).ok().map(|s| s.count);
                let want = sep_oracle(&net, a);
                if got != want {
                    return Err(format!(
                        "{n} nodes, a={a} (rho {}): sep_upper {got:?}, oracle {want:?}",
                        crossing_radius(&net, a)
                    ));
                }
            }
            graphs += 1;
        }
    }
    Ok(format!("sep {graphs} graphs"))
}

fn c9_properties() -> Outcome {
    let checks: [fn() -> Result<String, String>; 6] = [
        check_row_sums,
        check_cocycles,
        check_equivalence,
        check_transport,
        check_distortion_oracle,
        check_separation_oracle,
    ];
    let results: Vec<Result<String, String>> = checks
        .iter()
        .map(|f| {
            let start = Instant::now();
            f().map(|s| format!("{s} ({:.1}s)", start.elapsed().as_secs_f64()))
        })
        .collect();
    let pass = results.iter().all(Result::is_ok);
    let parts: Vec<String> = results.into_iter().map(|r| r.unwrap_or_else(|e| format!("FAILED: {e}"))).collect();
    outcome(pass, parts.join("; "))
}

fn c10_volume_obstruction() -> Outcome {
    let c = volume_growth_lower_bound(2.0, 2.0, 1000.0);
    let rejects = !connectivity_bound_check(100.0, 1.0, 1.0, 1.0);
    let pass = within(c / 1000.0, tol::GROWTH_RATIO) && rejects;
    outcome(pass, format!("c/R={:.4}; connectivity check rejects (100,1,1,1): {rejects}", c / 1000.0))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome); 10] = [
        (1, "sqrt regime, tree into H2 ball", c1_sqrt_tree),
        (2, "sqrt regime, H2 ball layout of the tree", c2_tree_to_h2),
        (3, "radial distance approximation", c3_distance_approximation),
        (4, "K(R) against the closed form", c4_k_analytic),
        (5, "logarithmic K(R) for the shear map", c5_log_regime),
        (6, "radial extension certificate", c6_certificate),
        (7, "exponential Poincare constant growth", c7_poincare_scaling),
        (8, "parity test function on the double cover", c8_test_function),
        (9, "property suites", c9_properties),
        (10, "volume and connectivity obstructions", c10_volume_obstruction),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let expected = EXPECTED_FAIL.contains(&id);
        let note = match (result.pass, expected) {
            (false, true) => " [expected]",
            (true, true) => " [expected FAIL now passes]",
            _ => "",
        };
        println!(
            "{} criterion {id:>2} ({name}){note}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass && !expected {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
