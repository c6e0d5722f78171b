use super::{EmbedError, PointMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which combination of constants is minimized on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Objective {
    /// λ + c.
    #[default]
    Sum,
    /// max{λ, c}.
    Max,
}

impl Objective {
    fn eval(self, lambda: f64, c: f64) -> f64 {
        match self {
            Objective::Sum => lambda + c,
            Objective::Max => lambda.max(c),
        }
    }
}

/// Optimal constants constraining y ≤ λ·x + c over a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub lambda: f64,
    pub c: f64,
    /// Index of a point on the line y = λx + c, when one exists.
    pub witness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub c1: f64,
    pub c2: f64,
    pub total: f64,
    /// Domain pairs attaining the upper and lower envelopes.
    pub witnesses: Witnesses,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Witnesses {
    pub upper: Option<(usize, usize)>,
    pub lower: Option<(usize, usize)>,
}

/// Upper convex hull of the points, as indices with ascending x.
fn upper_hull(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(points[b].1.total_cmp(&points[a].1)));
    order.dedup_by(|b, a| points[*a].0 == points[*b].0);
    let mut hull: Vec<usize> = Vec::new();
    for i in order {
        while hull.len() >= 2 {
            let (o, a, b) = (points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]);
            let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

fn offset(points: &[(f64, f64)], hull: &[usize], lambda: f64) -> (f64, usize) {
    hull.iter()
        .map(|&i| (points[i].1 - lambda * points[i].0, i))
        .fold((f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 { b } else { a })
}

/// Cheapest (λ ≥ 1, c ≥ 0) with y ≤ λx + c for every point, ties to the smallest λ.
fn fit_side(points: &[(f64, f64)], objective: Objective) -> Side {
    if points.is_empty() {
        return Side { lambda: 1.0, c: 0.0, witness: None };
    }
    let hull = upper_hull(points);
    let mut candidates = vec![1.0];
    for w in hull.windows(2) {
        let (a, b) = (points[w[0]], points[w[1]]);
        candidates.push((b.1 - a.1) / (b.0 - a.0));
    }
    let zero_free = points.iter().all(|p| p.0 > 0.0 || p.1 <= 0.0);
    if zero_free {
        let crossing = points.iter().filter(|p| p.0 > 0.0).map(|p| p.1 / p.0).fold(f64::NEG_INFINITY, f64::max);
        if crossing.is_finite() {
            candidates.push(crossing);
        }
    }
    if objective == Objective::Max {
        candidates.extend(hull.iter().map(|&i| points[i].1 / (1.0 + points[i].0)));
    }
    let mut candidates: Vec<f64> = candidates.into_iter().filter(|l| l.is_finite()).map(|l| l.max(1.0)).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: Option<(f64, f64, f64, usize)> = None;
    for &lambda in &candidates {
        let (g, arg) = offset(points, &hull, lambda);
        let c = g.max(0.0);
        let f = objective.eval(lambda, c);
        let better = match best {
            None => true,
            Some((bf, ..)) => f < bf - 1e-12 * (1.0 + bf.abs()),
        };
        if better {
            best = Some((f, lambda, c, arg));
        }
    }
    let (_, lambda, c, arg) = best.expect("at least one candidate");
    let (x, y) = points[arg];
    let tight = (y - lambda * x - c).abs() <= 1e-9 * (1.0 + y.abs() + (lambda * x).abs());
    Side { lambda, c, witness: tight.then_some(arg) }
}

/// Optimal upper and lower constants for a scatter of (d, d') values.
///
/// The lower envelope (d − c₂)/λ₂ ≤ d' is the upper envelope d ≤ λ₂d' + c₂
/// of the swapped scatter.
pub fn fit_scatter(points: &[(f64, f64)], objective: Objective) -> (Side, Side) {
    let swapped: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (y, x)).collect();
    (fit_side(points, objective), fit_side(&swapped, objective))
}

/// All unordered domain pairs (i < j) with their domain and image distances.
pub fn pair_scatter(map: &PointMap) -> (Vec<(usize, usize)>, Vec<(f64, f64)>) {
    let n = map.domain.len();
    let rows: Vec<Vec<((usize, usize), (f64, f64))>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let d = map.domain.distance(i, j);
                    let e = map.codomain.distance(map.assignment[i], map.assignment[j]);
                    ((i, j), (d, e))
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().unzip()
}

/// Optimal (λ₁, c₁, λ₂, c₂) of a map over all domain pairs.
pub fn measure_distortion(map: &PointMap, objective: Objective) -> Result<DistortionReport, EmbedError> {
    if map.domain.len() < 2 {
        return Err(EmbedError::EmptyMap);
    }
    let (pairs, scatter) = pair_scatter(map);
    if scatter.iter().all(|p| p.0 == 0.0) {
        return Err(EmbedError::DegenerateDomain);
    }
    let (up, lo) = fit_scatter(&scatter, objective);
    Ok(DistortionReport {
        lambda1: up.lambda,
        lambda2: lo.lambda,
        c1: up.c,
        c2: lo.c,
        total: up.lambda + lo.lambda + up.c + lo.c,
        witnesses: Witnesses { upper: up.witness.map(|k| pairs[k]), lower: lo.witness.map(|k| pairs[k]) },
        pairs: scatter.len(),
    })
}

/// Outcome of a quasi-isometry check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QieCheck {
    pub ok: bool,
    /// Most violated pair and its violation (negative when every pair is satisfied).
    pub worst: Option<(usize, usize, f64)>,
}

fn violation(d: f64, e: f64, l1: f64, l2: f64, c1: f64, c2: f64) -> f64 {
    let up = e - (l1 * d + c1);
    let lo = (d - c2) / l2 - e;
    up.max(lo) / (1.0 + d + e)
}

/// Checks (d − c₂)/λ₂ ≤ d' ≤ λ₁d + c₁ on every domain pair, up to 10⁻⁹ relative.
pub fn verify_qie(map: &PointMap, l1: f64, l2: f64, c1: f64, c2: f64) -> QieCheck {
    let n = map.domain.len();
    let worst = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).map(move |j| {
                let d = map.domain.distance(i, j);
                let e = map.codomain.distance(map.assignment[i], map.assignment[j]);
                (violation(d, e, l1, l2, c1, c2), i, j)
            })
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a });
    match worst {
        None => QieCheck { ok: true, worst: None },
        Some((v, i, j)) => QieCheck { ok: v <= 1e-9, worst: Some((i, j, v)) },
    }
}

/// Same check over an explicit scatter; the witness indexes the scatter.
pub fn verify_scatter(points: &[(f64, f64)], l1: f64, l2: f64, c1: f64, c2: f64) -> QieCheck {
    let worst = points
        .iter()
        .enumerate()
        .map(|(k, &(d, e))| (violation(d, e, l1, l2, c1, c2), k))
        .fold(None, |acc: Option<(f64, usize)>, b| match acc {
            Some(a) if a.0 >= b.0 => Some(a),
            _ => Some(b),
        });
    match worst {
        None => QieCheck { ok: true, worst: None },
        Some((v, k)) => QieCheck { ok: v <= 1e-9, worst: Some((k, k, v)) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{build_tree_ball, Edge, Net};
    use rand::Rng;
    use std::sync::Arc;

    fn subdivided_tree(net: &Net) -> Net {
        let edges = net.edges.iter().map(|e| Edge { len: 2.0, ..*e }).collect();
        Net::from_graph(net.len(), edges, None).unwrap()
    }

    #[test]
    fn identity_is_isometric() {
        let net = Arc::new(build_tree_ball(3, 3).unwrap());
        let r = measure_distortion(&PointMap::identity(net), Objective::Sum).unwrap();
        assert_eq!((r.lambda1, r.lambda2, r.c1, r.c2), (1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn doubling_map() {
        let tree = build_tree_ball(3, 3).unwrap();
        let doubled = Arc::new(subdivided_tree(&tree));
        let n = tree.len();
        let map = PointMap::new(Arc::new(tree), doubled, (0..n).collect(), "double").unwrap();
        let r = measure_distortion(&map, Objective::Sum).unwrap();
        assert!((r.lambda1 - 2.0).abs() < 1e-12 && r.c1 == 0.0);
        assert_eq!((r.lambda2, r.c2), (1.0, 0.0));
        assert!(verify_qie(&map, r.lambda1, r.lambda2, r.c1, r.c2).ok);
        assert!(!verify_qie(&map, 1.0, 1.0, 0.0, 0.0).ok);
    }

    #[test]
    fn empty_and_degenerate() {
        let one = Arc::new(Net::from_graph(1, vec![], None).unwrap());
        assert_eq!(measure_distortion(&PointMap::identity(one), Objective::Sum), Err(EmbedError::EmptyMap));
    }

    fn brute_side(points: &[(f64, f64)], objective: Objective, step: f64) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..4000 {
            let lambda = 1.0 + k as f64 * step;
            let c = points.iter().map(|p| p.1 - lambda * p.0).fold(0.0, f64::max);
            best = best.min(objective.eval(lambda, c));
        }
        best
    }

    #[test]
    fn hull_fit_matches_grid_search() {
        let mut rng = crate::rng::stream(11, "fit");
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (0..15).map(|_| (rng.gen_range(0.0..5.0), rng.gen_range(0.0..12.0))).collect();
            for objective in [Objective::Sum, Objective::Max] {
                let side = fit_side(&pts, objective);
                let exact = objective.eval(side.lambda, side.c);
                let grid = brute_side(&pts, objective, 0.005);
                assert!(exact <= grid + 1e-9, "{exact} > {grid}");
                assert!(grid - exact <= 0.005 * 5.0 + 1e-9, "{exact} vs {grid}");
                let lower_lambda = side.lambda - 0.01;
                if lower_lambda >= 1.0 {
                    let c = pts.iter().map(|p| p.1 - lower_lambda * p.0).fold(0.0, f64::max);
                    assert!(c > side.c);
                }
            }
        }
    }
}
