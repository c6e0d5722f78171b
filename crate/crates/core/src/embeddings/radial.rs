use super::{EmbedError, PointMap};
use crate::boundary::BoundaryMap;
use crate::spaces::{Net, Oracle, Point, SpaceKind, Visual, ZmuLattice};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Radial extension of a boundary map between Z-type spaces.
///
/// A domain point at height t over boundary point ξ goes to the codomain
/// lattice point nearest to (t, θ(ξ)). The codomain net consists of the
/// distinct image points with their lattice weights; for the shear map its
/// oracle uses the shear visual distance.
pub fn radial_extension(theta: &BoundaryMap, domain: &Net, codomain: &ZmuLattice) -> Result<PointMap, EmbedError> {
    theta.validate()?;
    if !matches!(domain.kind, SpaceKind::Zmu | SpaceKind::ZmuCover) {
        return Err(EmbedError::Unsupported("radial extension needs a Z net domain".into()));
    }
    let mut index: BTreeMap<(usize, Vec<u64>), usize> = BTreeMap::new();
    let mut images = Vec::new();
    let mut assignment = Vec::with_capacity(domain.len());
    for p in &domain.points {
        let (t, x) = match p {
            Point::Z { t, x } | Point::ZCover { t, x } => (*t, x),
            _ => return Err(EmbedError::Unsupported("non-Z point in domain".into())),
        };
        let y = theta.forward(x)?;
        let k = codomain.nearest_level(t);
        let j = codomain.nearest_index(k, &y);
        let next = index.len();
        let slot = *index.entry((k, j.clone())).or_insert_with(|| {
            images.push((k, j));
            next
        });
        assignment.push(slot);
    }
    let points = images.iter().map(|(k, j)| codomain.point(*k, j)).collect();
    let measure = images.iter().map(|(k, _)| codomain.levels[*k].weight).collect();
    let mut net = Net::assemble(codomain.kind(), codomain.params.clone(), points, measure, Vec::new(), Oracle::RadialFormula);
    net.ray_constant = Some(codomain.ray_constant());
    if matches!(theta, BoundaryMap::Unipotent) {
        net.visual = Visual::Unipotent;
    }
    PointMap::new(Arc::new(domain.clone()), Arc::new(net), assignment, "radial")
}

/// Radial extension on ℍ²: (r, φ) ↦ (r, 2π·θ(φ/2π)) for a one-dimensional boundary map.
pub fn radial_extension_h2(theta: &BoundaryMap, domain: &Net) -> Result<PointMap, EmbedError> {
    theta.validate()?;
    let mut points = Vec::with_capacity(domain.len());
    for p in &domain.points {
        match p {
            Point::H2 { r, theta: phi } => {
                let y = theta.forward(&[phi / TAU])?;
                points.push(Point::H2 { r: *r, theta: TAU * y[0] });
            }
            _ => return Err(EmbedError::Unsupported("radial_extension_h2 needs ℍ² points".into())),
        }
    }
    let params = domain.params.clone();
    let n = points.len();
    let image = Net::assemble(SpaceKind::H2, params, points, domain.measure.clone(), Vec::new(), Oracle::ClosedForm);
    PointMap::new(Arc::new(domain.clone()), Arc::new(image), (0..n).collect(), "radial-h2")
}
