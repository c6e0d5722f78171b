use super::distortion::{fit_scatter, DistortionReport, Objective, Witnesses};
use super::layered::{CompressedScatter, Layout, LayeredTree};
use super::{EmbedError, PointMap};
use crate::spaces::{build_rooted_tree, rooted_tree_size, SpaceError, DEFAULT_POINT_CAP};
use std::sync::Arc;

/// Radius R_k of generation k ≥ 1: the root of R_k − √R_k = k·ln d + ln(d + 1),
/// that is e^{R_k} = e^{√R_k}(d + 1)d^k. Generation 0 is the origin.
pub fn tree_to_h2_radius(degree: u32, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let d = f64::from(degree);
    let c = k as f64 * d.ln() + (d + 1.0).ln();
    let y = (1.0 + (1.0 + 4.0 * c).sqrt()) / 2.0;
    y * y
}

/// Tree ball with root degree d + 1 and branching d, placed on ℍ² circles.
///
/// Generation k, with (d + 1)d^{k−1} nodes, sits on the circle of radius R_k
/// in depth-first order at equally spaced, half-step offset angles, so each
/// subtree occupies an arc centred on its root.
#[derive(Debug, Clone)]
pub struct TreeToH2Model {
    pub degree: u32,
    pub depth: u32,
    pub tree: LayeredTree,
}

impl TreeToH2Model {
    pub fn new(degree: u32, depth: u32) -> Result<Self, EmbedError> {
        if degree < 3 {
            return Err(SpaceError::InvalidParams("tree degree must be at least 3".into()).into());
        }
        let mut radii = vec![0.0];
        let mut counts = vec![1u128];
        let mut offsets = vec![0u8];
        for k in 1..=depth as usize {
            radii.push(tree_to_h2_radius(degree, k));
            let prev = *counts.last().expect("root present");
            counts.push(prev * u128::from(if k == 1 { degree + 1 } else { degree }));
            offsets.push(1);
        }
        Ok(Self { degree, depth, tree: LayeredTree { radii, counts, offsets, layout: Layout::Blocks } })
    }

    pub fn scatter(&self) -> CompressedScatter {
        self.tree.compressed_scatter()
    }

    /// Optimal constants of the map from the tree onto its ℍ² image.
    pub fn distortion(&self, objective: Objective) -> DistortionReport {
        let points = self.scatter().tree_to_h2_points();
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
}

/// Explicit tree ball (root degree d + 1, branching d) and its ℍ² image net.
pub fn build_tree_to_h2(degree: u32, depth: u32) -> Result<(PointMap, crate::spaces::Net), EmbedError> {
    let size = rooted_tree_size(degree + 1, degree, depth);
    if size > DEFAULT_POINT_CAP as f64 {
        return Err(SpaceError::SizeCap { requested: size, cap: DEFAULT_POINT_CAP }.into());
    }
    let model = TreeToH2Model::new(degree, depth)?;
    let (image, _) = model.tree.enumerate(DEFAULT_POINT_CAP)?;
    let tree = build_rooted_tree(degree + 1, degree, depth, DEFAULT_POINT_CAP)?;
    let n = tree.len();
    let image = Arc::new(image);
    let map = PointMap::new(Arc::new(tree), image.clone(), (0..n).collect(), "tree-to-h2")?;
    Ok((map, (*image).clone()))
}
