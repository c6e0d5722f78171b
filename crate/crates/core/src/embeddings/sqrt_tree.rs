use super::distortion::{fit_scatter, DistortionReport, Objective, Witnesses};
use super::layered::{tree_from_parents, CompressedScatter, Layout, LayeredTree};
use super::{EmbedError, PointMap};
use crate::spaces::{Net, SpaceError};
use std::sync::Arc;

/// Tree of √R-separated generations on the spheres of radius k√R of a net.
///
/// Generation k keeps a greedy maximal √R-separated subset (in net order) of
/// the points within one mesh of the sphere of radius k√R around the point of
/// smallest height. Each point of generation k + 1 is joined to a closest point
/// of generation k, ties to the smallest index. Returns the unit-edge tree and
/// the map from the selected sub-net onto it.
pub fn build_sqrt_tree_embedding(net: &Net, radius: f64) -> Result<(Net, PointMap), EmbedError> {
    if net.is_empty() || !(radius > 0.0) {
        return Err(EmbedError::EmptyMap);
    }
    let step = radius.sqrt();
    let mesh = net.params.mesh;
    let origin = (0..net.len())
        .min_by(|&a, &b| net.points[a].height().total_cmp(&net.points[b].height()))
        .expect("non-empty net");
    let gens = (radius / step + 1e-9).floor() as usize;
    let from_origin: Vec<f64> = (0..net.len()).map(|i| net.distance(origin, i)).collect();
    let mut generations: Vec<Vec<usize>> = vec![vec![origin]];
    let mut chosen = vec![false; net.len()];
    chosen[origin] = true;
    for k in 1..=gens {
        let target = k as f64 * step;
        let mut gen = Vec::new();
        for i in 0..net.len() {
            if (from_origin[i] - target).abs() > mesh + 1e-9 || chosen[i] {
                continue;
            }
            let clash = net
                .neighbors_within(i, step)
                .into_iter()
                .any(|j| chosen[j] && gen_contains(&gen, j) && net.distance(i, j) < step);
            if !clash {
                chosen[i] = true;
                gen.push(i);
            }
        }
        if gen.is_empty() {
            return Err(EmbedError::EmptyGeneration(k));
        }
        generations.push(gen);
    }
    let selected: Vec<usize> = generations.iter().flatten().copied().collect();
    let mut slot = vec![usize::MAX; net.len()];
    for (s, &i) in selected.iter().enumerate() {
        slot[i] = s;
    }
    let mut parents: Vec<Option<usize>> = vec![None];
    for k in 1..generations.len() {
        for &i in &generations[k] {
            let p = generations[k - 1]
                .iter()
                .copied()
                .min_by(|&a, &b| net.distance(i, a).total_cmp(&net.distance(i, b)).then(a.cmp(&b)))
                .expect("previous generation is non-empty");
            parents.push(Some(slot[p]));
        }
    }
    let tree = tree_from_parents(&parents)?;
    let domain = Arc::new(net.subnet(&selected));
    let map = PointMap::new(domain, Arc::new(tree.clone()), (0..selected.len()).collect(), "sqrt-tree")?;
    Ok((tree, map))
}

fn gen_contains(gen: &[usize], j: usize) -> bool {
    gen.binary_search(&j).is_ok()
}

/// The same construction on exact circles, at any radius.
///
/// Generation k lies on the circle of radius k√R and has the largest
/// power-of-two size whose neighbouring points are still √R apart, which is a
/// maximal √R-separated set of equally spaced points. Parents are nearest
/// points of the previous generation (exact ties to the lower index).
#[derive(Debug, Clone)]
pub struct SqrtTreeModel {
    pub radius: f64,
    pub tree: LayeredTree,
}

impl SqrtTreeModel {
    pub fn new(radius: f64) -> Result<Self, EmbedError> {
        if !(radius > 0.0) {
            return Err(EmbedError::EmptyMap);
        }
        let step = radius.sqrt();
        let gens = (radius / step + 1e-9).floor() as usize;
        let mut radii = vec![0.0];
        let mut counts = vec![1u128];
        for k in 1..=gens {
            let r = k as f64 * step;
            let q = (step / 2.0).sinh() / r.sinh();
            let m = if q >= 1.0 { 0 } else { (std::f64::consts::PI / q.asin()).log2().floor().max(0.0) as u32 };
            if m > 120 {
                return Err(SpaceError::SizeCap { requested: 2f64.powi(m as i32), cap: usize::MAX }.into());
            }
            radii.push(r);
            counts.push(1u128 << m);
        }
        for w in counts.windows(2) {
            if w[1] < w[0] {
                return Err(EmbedError::Unsupported("generation sizes must not shrink".into()));
            }
        }
        let offsets = vec![0; radii.len()];
        Ok(Self { radius, tree: LayeredTree { radii, counts, offsets, layout: Layout::Nearest } })
    }

    pub fn scatter(&self) -> CompressedScatter {
        self.tree.compressed_scatter()
    }

    /// Optimal constants of the map from the generations (with ℍ² distance) onto the tree.
    pub fn distortion(&self, objective: Objective) -> DistortionReport {
        let points = self.scatter().h2_to_tree_points();
        let (up, lo) = fit_scatter(&points, objective);
        DistortionReport {
            lambda1: up.lambda,
            lambda2: lo.lambda,
            c1: up.c,
            c2: lo.c,
            total: up.lambda + lo.lambda + up.c + lo.c,
            witnesses: Witnesses::default(),
            pairs: points.len(),
        }
    }

    /// Explicit generations and tree, for cross-checks at small radius.
    pub fn to_map(&self, cap: usize) -> Result<PointMap, EmbedError> {
        let (h2, tree) = self.tree.enumerate(cap)?;
        let n = h2.len();
        PointMap::new(Arc::new(h2), Arc::new(tree), (0..n).collect(), "sqrt-tree-model")
    }
}
