//! R-sweep pipelines with one table row per radius.
//!
//! | Experiment | Pipeline | Main columns |
//! |------------|----------|--------------|
//! | `tree_embed` | √R-tree generations on ℍ² circles vs their tree | distortion constants |
//! | `tree_to_h2` | tree ball of depth R on circles of radius R_k | distortion constants, R_k/(k ln d) |
//! | `radial_identity` | radial extension of the identity on Z_μ | distortion constants |
//! | `radial_zmu` | radial extension of Z_μ → Z_μ' | distortion, K(R), certificate check |
//! | `radial_unipotent` | radial extension of the shear boundary map | distortion constants |
//! | `poincare_scaling` | uniform-column Z_μ net, gradient C₂ | C₂, ln C₂ |
//! | `kr_curve` | boundary distortion estimate | K, grid resolution |
//! | `sep_scaling` | ℍ² net, separation sandwich | upper, lower, Vol_a |
//! | `vol_growth` | ℍ² covering counts and the polynomial-volume bound | counts, c_min/R |
//!
//! Radii run in parallel; rows come back in the order of the radius list.
//! Cells are formatted with Rust's shortest round-trip float printing, so a
//! fixed spec and seed give identical tables.

use crate::boundary::{analytic_k, estimate_k_detailed, theta_constants, BoundaryMap};
use crate::embeddings::{measure_distortion, radial_extension, verify_qie, DistortionReport, Objective, SqrtTreeModel, TreeToH2Model};
use crate::fit::{fit_growth, fit_line};
use crate::poincare::UniformColumns;
use crate::sepvol::{separation, vol_a, volume_growth_lower_bound};
use crate::spaces::{build_h2_net, SpaceError, SpaceParams, ZmuLattice};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    TreeEmbed,
    TreeToH2,
    RadialIdentity,
    RadialZmu,
    RadialUnipotent,
    PoincareScaling,
    KrCurve,
    SepScaling,
    VolGrowth,
}

pub const EXPERIMENTS: [Experiment; 9] = [
    Experiment::TreeEmbed,
    Experiment::TreeToH2,
    Experiment::RadialIdentity,
    Experiment::RadialZmu,
    Experiment::RadialUnipotent,
    Experiment::PoincareScaling,
    Experiment::KrCurve,
    Experiment::SepScaling,
    Experiment::VolGrowth,
];

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Experiment::TreeEmbed => "tree_embed",
            Experiment::TreeToH2 => "tree_to_h2",
            Experiment::RadialIdentity => "radial_identity",
            Experiment::RadialZmu => "radial_zmu",
            Experiment::RadialUnipotent => "radial_unipotent",
            Experiment::PoincareScaling => "poincare_scaling",
            Experiment::KrCurve => "kr_curve",
            Experiment::SepScaling => "sep_scaling",
            Experiment::VolGrowth => "vol_growth",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('-', "_");
        EXPERIMENTS.into_iter().find(|e| e.label() == key).ok_or_else(|| ExperimentError::Invalid(format!("unknown experiment {s:?}")))
    }
}

/// Boundary map selector for `kr_curve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaKind {
    Identity,
    ZmuIdentity,
    Biholder,
    Unipotent,
}

impl FromStr for ThetaKind {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "identity" => Ok(ThetaKind::Identity),
            "zmu_identity" => Ok(ThetaKind::ZmuIdentity),
            "biholder" => Ok(ThetaKind::Biholder),
            "unipotent" => Ok(ThetaKind::Unipotent),
            _ => Err(ExperimentError::Invalid(format!("unknown boundary map {s:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error("R = {radius}: {message}")]
    AtRadius { radius: f64, message: String },
}

fn at(radius: f64) -> impl Fn(&dyn fmt::Display) -> ExperimentError {
    move |e| ExperimentError::AtRadius { radius, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub r_list: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_prime: Vec<f64>,
    pub mesh: f64,
    pub degree: u32,
    pub seed: u64,
    pub grid_n: usize,
    pub theta: ThetaKind,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub a: f64,
    /// Random points drawn for sampled Z nets.
    pub samples: usize,
    /// Where the CLI writes the table; the library ignores it.
    pub output: Option<String>,
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment, r_list: Vec<f64>) -> Self {
        Self {
            experiment,
            r_list,
            mu: vec![1.0, 2.0],
            mu_prime: vec![1.0, 1.0],
            mesh: 1.0,
            degree: 3,
            seed: 0,
            grid_n: 1 << 10,
            theta: ThetaKind::Unipotent,
            alpha: 2.0,
            beta: 2.0,
            lambda: 2.0,
            a: 1.0,
            samples: 300,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.to_string()));
        if self.r_list.is_empty() {
            return bad("R list is empty");
        }
        if self.r_list.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("radii must be positive and finite");
        }
        if self.r_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("R list must be strictly ascending");
        }
        if !(self.mesh > 0.0) {
            return bad("mesh must be positive");
        }
        if self.mu.is_empty() || self.mu.iter().any(|m| !(*m > 0.0)) {
            return bad("mu must be a nonempty list of positive values");
        }
        match self.experiment {
            Experiment::TreeToH2 => {
                if self.degree < 3 {
                    return bad("tree degree must be at least 3");
                }
                if self.r_list.iter().any(|r| r.fract() != 0.0) {
                    return bad("tree_to_h2 needs integer radii");
                }
            }
            Experiment::RadialZmu if self.mu_prime.len() != self.mu.len() || self.mu_prime.iter().any(|m| !(*m > 0.0)) => {
                return bad("mu_prime must be positive and match mu in length");
            }
            Experiment::RadialUnipotent if self.mu.len() != 2 => return bad("the shear map needs a two-dimensional torus"),
            Experiment::SepScaling | Experiment::VolGrowth if !(self.a >= 0.0) => return bad("a must be nonnegative"),
            Experiment::VolGrowth if !(self.alpha > 0.0 && self.lambda >= 1.0) => return bad("need alpha > 0 and lambda >= 1"),
            _ => {}
        }
        Ok(())
    }

    fn boundary_map(&self) -> BoundaryMap {
        match self.theta {
            ThetaKind::Identity => BoundaryMap::Identity { mu: self.mu.clone() },
            ThetaKind::ZmuIdentity => BoundaryMap::ZmuIdentity { mu: self.mu.clone(), mu_prime: self.mu_prime.clone() },
            ThetaKind::Biholder => BoundaryMap::Biholder { alpha: self.alpha.min(1.0), beta: self.beta.max(1.0), c: 1.0, mu: self.mu.clone() },
            ThetaKind::Unipotent => BoundaryMap::Unipotent,
        }
    }
}

/// Header plus string cells; the CLI serializes it as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }
}

fn cell(x: f64) -> String {
    format!("{x}")
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn distortion_cells(d: &DistortionReport) -> Vec<String> {
    vec![cell(d.lambda1), cell(d.c1), cell(d.lambda2), cell(d.c2), cell(d.total), d.pairs.to_string()]
}

const DISTORTION: [&str; 6] = ["lambda1", "c1", "lambda2", "c2", "total", "pairs"];

/// Runs the pipeline for every radius.
pub fn run(spec: &ExperimentSpec) -> Result<Table, ExperimentError> {
    spec.validate()?;
    let names: Vec<&str> = match spec.experiment {
        Experiment::TreeEmbed => [&["R"][..], &DISTORTION, &["generations"]].concat(),
        Experiment::TreeToH2 => [&["R"][..], &DISTORTION, &["outer_radius", "ratio_k_ln_d"]].concat(),
        Experiment::RadialIdentity | Experiment::RadialUnipotent => [&["R"][..], &DISTORTION, &["domain_points"]].concat(),
        Experiment::RadialZmu => [&["R"][..], &DISTORTION, &["K", "ray_constant", "certificate_ok"]].concat(),
        Experiment::PoincareScaling => vec!["R", "c2", "ln_c2", "levels", "level_size"],
        Experiment::KrCurve => vec!["R", "K", "analytic_K", "resolution", "pairs", "grid_n"],
        Experiment::SepScaling => vec!["R", "points", "vol_a", "family", "upper", "lower", "c2_cover"],
        Experiment::VolGrowth => vec!["R", "points", "covering_count", "packing_count", "packing_count_2a", "c_min", "c_min_over_R"],
    };
    let rows = spec.r_list.par_iter().map(|&r| row(spec, r)).collect::<Result<Vec<_>, _>>()?;
    let mut header = header(&names);
    header.push("seed".into());
    let rows = rows
        .into_iter()
        .map(|mut cells| {
            cells.push(spec.seed.to_string());
            cells
        })
        .collect();
    Ok(Table { header, rows })
}

fn sampled_map(spec: &ExperimentSpec, r: f64, theta: &BoundaryMap, target_mu: &[f64]) -> Result<crate::embeddings::PointMap, ExperimentError> {
    let fail = at(r);
    let dom = ZmuLattice::new(SpaceParams::new(spec.mu.clone(), r, spec.mesh).map_err(|e| fail(&e))?, false).map_err(|e| fail(&e))?;
    let cod = ZmuLattice::new(SpaceParams::new(target_mu.to_vec(), r, spec.mesh).map_err(|e| fail(&e))?, false).map_err(|e| fail(&e))?;
    let net = dom.sample_net(spec.samples, 6, spec.samples / 3, spec.seed);
    radial_extension(theta, &net, &cod).map_err(|e| fail(&e))
}

fn row(spec: &ExperimentSpec, r: f64) -> Result<Vec<String>, ExperimentError> {
    let fail = at(r);
    let mut out = vec![cell(r)];
    match spec.experiment {
        Experiment::TreeEmbed => {
            let model = SqrtTreeModel::new(r).map_err(|e| fail(&e))?;
            out.extend(distortion_cells(&model.distortion(Objective::Sum)));
            out.push(model.tree.depth().to_string());
        }
        Experiment::TreeToH2 => {
            let depth = r as u32;
            let model = TreeToH2Model::new(spec.degree, depth).map_err(|e| fail(&e))?;
            out.extend(distortion_cells(&model.distortion(Objective::Sum)));
            let outer = *model.tree.radii.last().expect("root present");
            out.push(cell(outer));
            out.push(cell(outer / (r * f64::from(spec.degree).ln())));
        }
        Experiment::RadialIdentity => {
            let map = sampled_map(spec, r, &BoundaryMap::Identity { mu: spec.mu.clone() }, &spec.mu)?;
            out.extend(distortion_cells(&measure_distortion(&map, Objective::Sum).map_err(|e| fail(&e))?));
            out.push(map.domain.len().to_string());
        }
        Experiment::RadialUnipotent => {
            let map = sampled_map(spec, r, &BoundaryMap::Unipotent, &spec.mu)?;
            out.extend(distortion_cells(&measure_distortion(&map, Objective::Sum).map_err(|e| fail(&e))?));
            out.push(map.domain.len().to_string());
        }
        Experiment::RadialZmu => {
            let theta = BoundaryMap::ZmuIdentity { mu: spec.mu.clone(), mu_prime: spec.mu_prime.clone() };
            let map = sampled_map(spec, r, &theta, &spec.mu_prime)?;
            out.extend(distortion_cells(&measure_distortion(&map, Objective::Sum).map_err(|e| fail(&e))?));
            let k = analytic_k(&theta, r).expect("closed form exists").value;
            let d = map.domain.ray_constant.unwrap_or(0.0).max(map.codomain.ray_constant.unwrap_or(0.0));
            let (lambda, cq) = theta_constants(k, d + 1.0).map_err(|e| fail(&e))?;
            let cert = verify_qie(&map, lambda, lambda, cq + 16.0, cq + 16.0);
            out.extend([cell(k), cell(d), cert.ok.to_string()]);
        }
        Experiment::PoincareScaling => {
            let cols = UniformColumns::new(SpaceParams::new(spec.mu.clone(), r, spec.mesh).map_err(|e| fail(&e))?).map_err(|e| fail(&e))?;
            let c2 = cols.gradient_c2().map_err(|e| fail(&e))?.lower;
            out.extend([cell(c2), cell(c2.ln()), cols.heights.len().to_string(), cell(cols.level_size())]);
        }
        Experiment::KrCurve => {
            let theta = spec.boundary_map();
            let est = estimate_k_detailed(&theta, r, spec.grid_n, spec.seed);
            let analytic = analytic_k(&theta, r).map_or(f64::NAN, |a| a.value);
            out.extend([cell(est.k), cell(analytic), cell(est.resolution), est.pairs.to_string(), spec.grid_n.to_string()]);
        }
        Experiment::SepScaling => {
            let net = Arc::new(build_h2_net(r, spec.mesh).map_err(|e| fail(&e))?);
            let rep = separation(&net, spec.a).map_err(|e| fail(&e))?;
            out.extend([
                net.len().to_string(),
                rep.upper.vol_total.to_string(),
                rep.family_size.to_string(),
                rep.upper.count.to_string(),
                cell(rep.lower),
                cell(rep.c2),
            ]);
        }
        Experiment::VolGrowth => {
            // The bound is only informative at radii far beyond any enumerable net,
            // so the counts are left empty once the net exceeds the point cap.
            match build_h2_net(r, spec.mesh) {
                Ok(net) => {
                    let cover = vol_a(&net, spec.a);
                    out.extend([
                        net.len().to_string(),
                        cover.covering_count.to_string(),
                        cover.packing_count.to_string(),
                        cover.packing_count_2a.to_string(),
                    ]);
                }
                Err(SpaceError::MeshTooFine { .. } | SpaceError::SizeCap { .. }) => out.extend(std::iter::repeat_n(String::new(), 4)),
                Err(e) => return Err(fail(&e)),
            }
            let c = volume_growth_lower_bound(spec.alpha, spec.lambda, r);
            out.extend([cell(c), cell(c / r)]);
        }
    }
    Ok(out)
}

/// One threshold check on a finished table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assessment {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Assessment {
    Assessment { name: name.to_string(), pass, detail }
}

fn power_beta(series: &[(f64, f64)]) -> Option<(f64, f64)> {
    let fit = fit_growth(series).ok()?;
    let p = fit.power();
    Some((p.coefficients[1], p.r2))
}

/// Regime checks for `run --assert`; empty when the experiment has none.
pub fn assess(spec: &ExperimentSpec, table: &Table) -> Vec<Assessment> {
    let r = table.column("R").unwrap_or_default();
    let series = |name: &str| -> Vec<(f64, f64)> { table.column(name).map(|y| r.iter().copied().zip(y).collect()).unwrap_or_default() };
    let mut out = Vec::new();
    match spec.experiment {
        Experiment::TreeEmbed | Experiment::TreeToH2 => {
            let detail = match power_beta(&series("total")) {
                Some((b, r2)) => {
                    out.push(check("sqrt_regime", (0.35..=0.65).contains(&b) && r2 >= 0.9, format!("beta={b} r2={r2}")));
                    return out;
                }
                None => "need at least 4 radii".to_string(),
            };
            out.push(check("sqrt_regime", false, detail));
        }
        Experiment::RadialIdentity => {
            let t = table.column("total").unwrap_or_default();
            let spread = t.iter().copied().fold(f64::NEG_INFINITY, f64::max) - t.iter().copied().fold(f64::INFINITY, f64::min);
            out.push(check("constant_distortion", spread <= 1e-9, format!("spread={spread}")));
        }
        Experiment::RadialZmu => {
            let k = table.header.iter().position(|h| h == "certificate_ok");
            let ok = k.is_some_and(|k| table.rows.iter().all(|row| row[k] == "true"));
            out.push(check("certificate", ok, "verify_qie at every radius".into()));
        }
        Experiment::PoincareScaling => {
            let lc = series("ln_c2");
            let bound = (spec.mu.iter().sum::<f64>() / 2.0 * 0.7, spec.mu.iter().copied().fold(0.0, f64::max) * 1.3);
            let pass = fit_line(&lc).ok().map(|(a, _, r2)| (a, r2));
            let (slope, r2) = pass.unwrap_or((f64::NAN, 0.0));
            out.push(check("exponential_c2", slope >= bound.0 && slope <= bound.1 && r2 >= 0.9, format!("slope={slope} r2={r2}")));
        }
        Experiment::KrCurve if spec.theta == ThetaKind::Unipotent => {
            let kr = series("K");
            let fit = fit_growth(&kr).ok();
            let beta = fit.as_ref().map_or(f64::NAN, |f| f.power().coefficients[1]);
            let model_ok = fit.as_ref().is_some_and(|f| f.model.label() == "log" || (f.model.label() == "power" && beta <= 0.25));
            let ratio_ok = kr.iter().all(|&(r, k)| k / r.ln() <= 3.0);
            let label = fit.as_ref().map_or("none", |f| f.model.label());
            out.push(check("log_regime", model_ok && ratio_ok, format!("model={label} beta={beta}")));
        }
        Experiment::SepScaling => {
            let up = series("upper");
            let slope = fit_line(&up.iter().map(|&(r, u)| (r, u.max(1.0).ln())).collect::<Vec<_>>()).map_or(f64::NAN, |f| f.0);
            out.push(check("bounded_separation", slope.abs() <= 0.3, format!("log-slope={slope}")));
        }
        Experiment::VolGrowth => {
            let last = table.column("c_min_over_R").and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
            out.push(check("half_radius", (0.35..=0.5).contains(&last), format!("c_min/R={last}")));
        }
        _ => {}
    }
    out
}
