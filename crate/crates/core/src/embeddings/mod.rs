//! Maps between nets and their optimal quasi-isometry constants.
//!
//! A [`PointMap`] assigns a codomain point to every domain point. Its
//! distortion (λ₁, c₁, λ₂, c₂) is the cheapest pair of affine envelopes
//!
//! ```text
//! (d − c₂)/λ₂ ≤ d' ≤ λ₁·d + c₁
//! ```
//!
//! over the scatter of pair distances (d, d'). Both envelopes are read off
//! upper convex hulls, so every candidate slope is a hull edge and the search
//! is exact.
//!
//! | Construction | Function | Scale |
//! |--------------|----------|-------|
//! | generations on spheres of radius k√R joined to a closest parent | [`build_sqrt_tree_embedding`] | explicit ℍ² net |
//! | same, power-of-two generations on exact circles | [`SqrtTreeModel`] | any R, compressed scatter |
//! | tree ball placed on circles of radius R_k | [`build_tree_to_h2`], [`TreeToH2Model`] | explicit / compressed |
//! | radial extension of a boundary map | [`radial_extension`] | Z_μ lattices |

mod distortion;
mod layered;
mod radial;
mod sqrt_tree;
mod tree_to_h2;

pub use distortion::{
    fit_scatter, measure_distortion, pair_scatter, verify_qie, verify_scatter, DistortionReport, Objective, QieCheck,
    Side,
};
pub use layered::{CompressedScatter, LayeredTree};
pub use radial::{radial_extension, radial_extension_h2};
pub use sqrt_tree::{build_sqrt_tree_embedding, SqrtTreeModel};
pub use tree_to_h2::{build_tree_to_h2, tree_to_h2_radius, TreeToH2Model};

use crate::boundary::BoundaryError;
use crate::spaces::{Net, SpaceError};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("map needs at least two domain points")]
    EmptyMap,
    #[error("all domain distances are zero")]
    DegenerateDomain,
    #[error("generation {0} is empty: the net is too coarse")]
    EmptyGeneration(usize),
    #[error("boundary map undefined: {0}")]
    BoundaryMapUndefined(#[from] BoundaryError),
    #[error("assignment has {got} entries for {expected} domain points")]
    Length { expected: usize, got: usize },
    #[error("codomain index {0} out of range")]
    OutOfRange(usize),
    #[error("unsupported net: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A total map from the points of one net to the points of another.
#[derive(Debug, Clone)]
pub struct PointMap {
    pub domain: Arc<Net>,
    pub codomain: Arc<Net>,
    pub assignment: Vec<usize>,
    pub meta: String,
}

impl PointMap {
    pub fn new(domain: Arc<Net>, codomain: Arc<Net>, assignment: Vec<usize>, meta: impl Into<String>) -> Result<Self, EmbedError> {
        if assignment.len() != domain.len() {
            return Err(EmbedError::Length { expected: domain.len(), got: assignment.len() });
        }
        if let Some(&bad) = assignment.iter().find(|&&j| j >= codomain.len()) {
            return Err(EmbedError::OutOfRange(bad));
        }
        Ok(Self { domain, codomain, assignment, meta: meta.into() })
    }

    pub fn identity(net: Arc<Net>) -> Self {
        let assignment = (0..net.len()).collect();
        Self { domain: net.clone(), codomain: net, assignment, meta: "identity".into() }
    }

    /// Same assignment in the other direction; only valid for bijections.
    pub fn inverse(&self) -> Option<Self> {
        let mut inv = vec![usize::MAX; self.codomain.len()];
        for (i, &j) in self.assignment.iter().enumerate() {
            if inv[j] != usize::MAX {
                return None;
            }
            inv[j] = i;
        }
        if inv.contains(&usize::MAX) {
            return None;
        }
        Some(Self {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            assignment: inv,
            meta: format!("inverse of {}", self.meta),
        })
    }
}
