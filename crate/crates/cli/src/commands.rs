use crate::netio::{self, read_edges, read_map, read_points, write_edges, write_map, write_points, write_table};
use crate::*;
use qi_core::boundary::{analytic_k, estimate_k_detailed, BoundaryMap};
use qi_core::embeddings::{
    build_sqrt_tree_embedding, build_tree_to_h2, measure_distortion, radial_extension, DistortionReport, Objective, PointMap,
};
use qi_core::experiment::{assess, run, Experiment, ExperimentSpec, ThetaKind};
use qi_core::fit::fit_growth;
use qi_core::poincare::{
    continuum_grad_integral, continuum_grad_integral_exact, make_ball_kernel, poincare_exact_p2, poincare_gradient_p2,
    poincare_lower_ascent, testfunction_lattice, PoincareEstimate, Solver, UniformColumns,
};
use qi_core::sepvol::{connectivity_bound_check, separation, tree_bound_check, vol_a, volume_growth_lower_bound};
use qi_core::spaces::{build_h2_net_capped, build_tree_ball_capped, Net, SpaceParams, Visual, ZmuLattice};
use serde_json::{json, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

pub enum Failure {
    Usage(String),
    Compute(String),
    /// A regime check failed under `run --assert`.
    Assert,
}

type Res<T> = Result<T, Failure>;

fn compute(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn emit(value: &Value) -> Res<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{value}").map_err(compute)
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| usage(format!("cannot create {}: {e}", path.display())))
}

fn open(path: &Path) -> Res<Box<dyn io::Read>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin()));
    }
    File::open(path).map(|f| Box::new(io::BufReader::new(f)) as Box<dyn io::Read>).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn to_path_or_stdout(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> netio::CsvResult<()>) -> Res<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).map_err(compute)
        }
        None => f(&mut io::stdout().lock()).map_err(compute),
    }
}

pub fn execute(cli: Cli) -> Res<()> {
    match cli.command {
        Cmd::Space(c) => space(c),
        Cmd::Embed(c) => embed(c),
        Cmd::Distort(c) => distort(c),
        Cmd::Poincare(c) => poincare(c),
        Cmd::Boundary(c) => boundary(c),
        Cmd::Sepvol(c) => sepvol(c),
        Cmd::Fit(c) => fit(c),
        Cmd::Run(c) => run_cmd(c),
    }
}

fn build(space: &SpaceArgs) -> Res<Net> {
    match space.space {
        SpaceChoice::H2 => build_h2_net_capped(space.radius, space.mesh, space.cap).map_err(compute),
        SpaceChoice::Tree => {
            if space.radius.fract() != 0.0 || space.radius < 0.0 {
                return Err(usage("tree radius must be a nonnegative integer"));
            }
            build_tree_ball_capped(space.degree, space.radius as u32, space.cap).map_err(compute)
        }
        SpaceChoice::Zmu => {
            let params = SpaceParams::new(space.mu.clone(), space.radius, space.mesh).map_err(usage)?;
            ZmuLattice::new(params, space.cover).and_then(|l| l.to_net(space.cap)).map_err(compute)
        }
    }
}

fn space(c: SpaceCmd) -> Res<()> {
    let net = build(&c.space)?;
    to_path_or_stdout(c.out.as_deref(), |w| write_points(&net, w))?;
    if let Some(p) = &c.edges {
        let mut w = create(p)?;
        write_edges(&net.edges, &mut w).map_err(compute)?;
    }
    if c.out.is_some() {
        emit(&json!({
            "kind": net.kind.label(),
            "points": net.len(),
            "edges": net.edges.len(),
            "total_measure": net.total_measure(),
            "ray_constant": net.ray_constant,
        }))?;
    }
    Ok(())
}

fn report_json(construction: &str, radius: f64, map: &PointMap, report: &DistortionReport) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    let obj = v.as_object_mut().expect("report is an object");
    obj.insert("construction".into(), json!(construction));
    obj.insert("R".into(), json!(radius));
    obj.insert("domain_points".into(), json!(map.domain.len()));
    obj.insert("codomain_points".into(), json!(map.codomain.len()));
    v
}

fn write_map_outputs(map: &PointMap, outputs: &MapOutputs) -> Res<()> {
    if let Some(p) = &outputs.map_out {
        write_map(&map.assignment, &mut create(p)?).map_err(compute)?;
    }
    if let Some(p) = &outputs.domain_out {
        write_points(&map.domain, &mut create(p)?).map_err(compute)?;
    }
    if let Some(p) = &outputs.codomain_out {
        write_points(&map.codomain, &mut create(p)?).map_err(compute)?;
    }
    Ok(())
}

fn boundary_map(theta: ThetaChoice, mu: &[f64], mu_prime: &[f64], alpha: f64, beta: f64) -> BoundaryMap {
    match theta {
        ThetaChoice::Identity => BoundaryMap::Identity { mu: mu.to_vec() },
        ThetaChoice::ZmuIdentity => BoundaryMap::ZmuIdentity { mu: mu.to_vec(), mu_prime: mu_prime.to_vec() },
        ThetaChoice::Biholder => BoundaryMap::Biholder { alpha, beta, c: 1.0, mu: mu.to_vec() },
        ThetaChoice::Unipotent => BoundaryMap::Unipotent,
    }
}

fn embed(c: EmbedCmd) -> Res<()> {
    let (name, radius, map, outputs) = match c {
        EmbedCmd::SqrtTree { radius, mesh, outputs } => {
            let net = build_h2_net_capped(radius, mesh, qi_core::spaces::DEFAULT_POINT_CAP).map_err(compute)?;
            let (_, map) = build_sqrt_tree_embedding(&net, radius).map_err(compute)?;
            ("sqrt_tree", radius, map, outputs)
        }
        EmbedCmd::TreeToH2 { degree, radius, outputs } => {
            let (map, _) = build_tree_to_h2(degree, radius).map_err(compute)?;
            ("tree_to_h2", f64::from(radius), map, outputs)
        }
        EmbedCmd::Radial { theta, mu, mu_prime, alpha, beta, radius, mesh, samples, seed, outputs } => {
            let map_theta = boundary_map(theta, &mu, &mu_prime, alpha, beta);
            let target = if theta == ThetaChoice::ZmuIdentity { mu_prime.clone() } else { mu.clone() };
            let dom = ZmuLattice::new(SpaceParams::new(mu, radius, mesh).map_err(usage)?, false).map_err(compute)?;
            let cod = ZmuLattice::new(SpaceParams::new(target, radius, mesh).map_err(usage)?, false).map_err(compute)?;
            let net = dom.sample_net(samples, 6, samples / 3, seed);
            let map = radial_extension(&map_theta, &net, &cod).map_err(compute)?;
            ("radial", radius, map, outputs)
        }
    };
    let report = measure_distortion(&map, Objective::Sum).map_err(compute)?;
    write_map_outputs(&map, &outputs)?;
    emit(&report_json(name, radius, &map, &report))
}

fn load_net(points: &Path, edges: Option<&Path>, mu: Option<Vec<f64>>, visual: Visual) -> Res<Net> {
    let (pts, measure) = read_points(open(points)?).map_err(usage)?;
    let edges = match edges {
        Some(p) => read_edges(open(p)?).map_err(usage)?,
        None => Vec::new(),
    };
    Net::from_points(pts, measure, edges, mu, visual).map_err(usage)
}

fn distort(c: DistortCmd) -> Res<()> {
    let DistortCmd::Measure { map, domain, codomain, domain_edges, codomain_edges, domain_mu, codomain_mu, codomain_visual, objective } = c;
    let dom = load_net(&domain, domain_edges.as_deref(), domain_mu, Visual::Standard)?;
    let visual = match codomain_visual {
        VisualChoice::Standard => Visual::Standard,
        VisualChoice::Unipotent => Visual::Unipotent,
    };
    let cod = load_net(&codomain, codomain_edges.as_deref(), codomain_mu, visual)?;
    let assignment = read_map(open(&map)?).map_err(usage)?;
    let map = PointMap::new(Arc::new(dom), Arc::new(cod), assignment, "file").map_err(usage)?;
    let objective = match objective {
        ObjectiveChoice::Sum => Objective::Sum,
        ObjectiveChoice::Max => Objective::Max,
    };
    let report = measure_distortion(&map, objective).map_err(compute)?;
    emit(&report_json("file", map.domain.params.radius, &map, &report))
}

fn estimate_json(est: &PoincareEstimate, radius: f64, mu: &[f64]) -> Value {
    json!({
        "p": est.p,
        "lower": est.lower,
        "upper": est.upper,
        "method": est.method,
        "R": radius,
        "mu": mu,
        "kernel_width": est.kernel_width,
    })
}

fn poincare(c: PoincareCmd) -> Res<()> {
    match c {
        PoincareCmd::P2 { space, energy, width, kernel_out } => {
            let est = match energy {
                EnergyChoice::Columns => {
                    if space.space != SpaceChoice::Zmu {
                        return Err(usage("--energy columns needs --space zmu"));
                    }
                    let params = SpaceParams::new(space.mu.clone(), space.radius, space.mesh).map_err(usage)?;
                    UniformColumns::new(params).map_err(compute)?.gradient_c2().map_err(compute)?
                }
                EnergyChoice::Gradient => poincare_gradient_p2(&Arc::new(build(&space)?), Solver::Auto).map_err(compute)?,
                EnergyChoice::Kernel => {
                    let net = Arc::new(build(&space)?);
                    let kernel = make_ball_kernel(&net, width.unwrap_or(2.0 * space.mesh)).map_err(compute)?;
                    if let Some(p) = &kernel_out {
                        let mut w = csv::Writer::from_writer(create(p)?);
                        w.write_record(["i", "j", "value"]).map_err(compute)?;
                        for (i, j, v) in kernel.triplets() {
                            w.write_record([i.to_string(), j.to_string(), v.to_string()]).map_err(compute)?;
                        }
                        w.flush().map_err(compute)?;
                    }
                    poincare_exact_p2(&kernel).map_err(compute)?
                }
            };
            emit(&estimate_json(&est, space.radius, &space.mu))
        }
        PoincareCmd::Ascent { space, p, width, restarts, iters, seed } => {
            let net = Arc::new(build(&space)?);
            let kernel = make_ball_kernel(&net, width.unwrap_or(2.0 * space.mesh)).map_err(compute)?;
            let est = poincare_lower_ascent(&kernel, p, restarts, iters, seed).map_err(compute)?;
            emit(&estimate_json(&est, space.radius, &space.mu))
        }
        PoincareCmd::Testfn { mu, radius, mesh, p } => {
            let params = SpaceParams::new(mu.clone(), radius, mesh).map_err(usage)?;
            let lattice = ZmuLattice::new(params, true).map_err(compute)?;
            let (mass, energy) = testfunction_lattice(&lattice, p).map_err(compute)?;
            let torus: f64 = lattice.periods.iter().product();
            emit(&json!({
                "p": p,
                "lower": (mass / energy).powf(1.0 / p),
                "upper": null,
                "method": "test_function",
                "R": radius,
                "mu": mu,
                "mass": mass,
                "energy": energy,
                "continuum_closed_form": continuum_grad_integral(&mu, p).ok(),
                "continuum_exact": continuum_grad_integral_exact(&mu, p, radius, torus),
            }))
        }
    }
}

fn boundary(c: BoundaryCmd) -> Res<()> {
    let BoundaryCmd::Kr { theta, r_list, mu, mu_prime, alpha, beta, grid_n, seed, out } = c;
    let map = boundary_map(theta, &mu, &mu_prime, alpha, beta);
    map.validate().map_err(usage)?;
    let header: Vec<String> = ["R", "K", "method", "grid_n", "seed"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for &r in &r_list {
        let est = estimate_k_detailed(&map, r, grid_n, seed);
        rows.push(vec![r.to_string(), est.k.to_string(), "estimate".into(), grid_n.to_string(), seed.to_string()]);
        if let Some(a) = analytic_k(&map, r) {
            let method = if a.upper_bound_only { "analytic_upper" } else { "analytic" };
            rows.push(vec![r.to_string(), a.value.to_string(), method.into(), grid_n.to_string(), seed.to_string()]);
        }
    }
    to_path_or_stdout(out.as_deref(), |w| write_table(&header, &rows, w))
}

fn sepvol(c: SepvolCmd) -> Res<()> {
    match c {
        SepvolCmd::Vol { space, a } => {
            let net = build(&space)?;
            let rep = vol_a(&net, a);
            let mut v = serde_json::to_value(rep).expect("report serializes");
            v["points"] = json!(net.len());
            emit(&v)
        }
        SepvolCmd::Sep { space, a } => {
            let net = Arc::new(build(&space)?);
            let rep = separation(&net, a).map_err(compute)?;
            let side_one = rep.upper.side.iter().filter(|&&s| s).count();
            emit(&json!({
                "a": a,
                "points": net.len(),
                "upper": rep.upper.count,
                "lower": rep.lower,
                "crossing": rep.upper.crossing,
                "side_sizes": [side_one, net.len() - side_one],
                "vol_sides": [rep.upper.vol_sides.0, rep.upper.vol_sides.1],
                "vol_total": rep.upper.vol_total,
                "family_size": rep.family_size,
                "crossing_radius": rep.crossing_radius,
                "c2": rep.c2,
                "support_factor": rep.support_factor,
                "method": rep.notes,
            }))
        }
        SepvolCmd::TreeBound { s, vc, degree, a, lambda, c } => {
            if !(s > 0.0 && vc > 0.0 && degree >= 2 && a >= 0.0 && lambda > 0.0 && c >= 0.0) {
                return Err(usage("need s, vc, lambda > 0, a, c >= 0 and degree >= 2"));
            }
            let (holds, slack) = tree_bound_check(s, vc, degree, a, lambda, c);
            emit(&json!({ "holds": holds, "slack": slack }))
        }
        SepvolCmd::GrowthBound { alpha, lambda, radius } => {
            if !(alpha > 0.0 && lambda >= 1.0 && radius > 0.0) {
                return Err(usage("need alpha > 0, lambda >= 1 and radius > 0"));
            }
            let c = volume_growth_lower_bound(alpha, lambda, radius);
            emit(&json!({ "alpha": alpha, "lambda": lambda, "R": radius, "c_min": c, "c_min_over_R": c / radius }))
        }
        SepvolCmd::Connectivity { radius, lambda2, c1, c2 } => {
            if [radius, lambda2, c1, c2].iter().any(|v| !(*v >= 0.0)) {
                return Err(usage("inputs must be nonnegative"));
            }
            emit(&json!({ "consistent": connectivity_bound_check(radius, lambda2, c1, c2) }))
        }
    }
}

fn fit(c: FitCmd) -> Res<()> {
    let mut r = csv::Reader::from_reader(open(&c.input)?);
    let header = r.headers().map_err(usage)?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| usage(format!("no column {name:?}")));
    let (ix, iy) = (col(&c.x)?, col(&c.y)?);
    let mut series = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(usage)?;
        let x: f64 = rec[ix].parse().map_err(|_| usage(format!("bad number {:?}", &rec[ix])))?;
        let y: f64 = rec[iy].parse().map_err(|_| usage(format!("bad number {:?}", &rec[iy])))?;
        series.push((x, y));
    }
    let fit = fit_growth(&series).map_err(compute)?;
    let candidates: Vec<Value> =
        fit.candidates.iter().map(|c| json!({ "model": c.model.label(), "coefficients": c.coefficients, "r2": c.r2 })).collect();
    emit(&json!({
        "model": fit.model.label(),
        "coefficients": fit.coefficients,
        "r2": fit.r2,
        "residuals": fit.residuals,
        "candidates": candidates,
    }))
}

fn run_cmd(c: RunCmd) -> Res<()> {
    let experiment: Experiment = c.experiment.parse().map_err(usage)?;
    let mut spec = ExperimentSpec::new(experiment, c.r_list);
    spec.mu = c.mu;
    spec.mu_prime = c.mu_prime;
    spec.mesh = c.mesh;
    spec.degree = c.degree;
    spec.seed = c.seed;
    spec.grid_n = c.grid_n;
    spec.theta = match c.theta {
        ThetaChoice::Identity => ThetaKind::Identity,
        ThetaChoice::ZmuIdentity => ThetaKind::ZmuIdentity,
        ThetaChoice::Biholder => ThetaKind::Biholder,
        ThetaChoice::Unipotent => ThetaKind::Unipotent,
    };
    spec.alpha = c.alpha;
    spec.beta = c.beta;
    spec.lambda = c.lambda;
    spec.a = c.a;
    spec.samples = c.samples;
    spec.output = c.out.as_ref().map(|p| p.display().to_string());
    spec.validate().map_err(usage)?;
    let table = run(&spec).map_err(compute)?;
    to_path_or_stdout(c.out.as_deref(), |w| write_table(&table.header, &table.rows, w))?;
    if c.assert_mode {
        let checks = assess(&spec, &table);
        let mut failed = false;
        for a in &checks {
            failed |= !a.pass;
            eprintln!("{}", serde_json::to_string(a).expect("assessment serializes"));
        }
        if failed {
            return Err(Failure::Assert);
        }
    }
    Ok(())
}
