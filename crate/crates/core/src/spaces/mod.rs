//! Discrete models of the three families of spaces used throughout the crate.
//!
//! | Space | Builder | Oracle |
//! |-------|---------|--------|
//! | ℍ² ball of radius R | [`build_h2_net`] | closed-form hyperbolic law of cosines |
//! | regular tree ball | [`build_tree_ball`] | unique-path length |
//! | Z_μ ball Tⁿ × [0, R] (and its double cover) | [`build_zmu_net`], [`ZmuLattice`] | radial formula t₁ + t₂ − 2 min{t₁, t₂, t_∞} |
//! | abstract weighted graph | [`Net::from_graph`] | shortest path |
//!
//! Nets are immutable once built. Point counts are capped (default
//! [`DEFAULT_POINT_CAP`]); exceeding the cap is an error, never a silent
//! truncation. [`ZmuLattice`] describes a Z_μ net without enumerating it, for
//! radii where the full net is out of reach.

mod h2;
mod net;
mod tree;
mod zmu;

pub use h2::{build_h2_net, build_h2_net_capped, h2_distance, h2_distance_polar, h2_visual_distance};
pub use net::{Edge, Net, Oracle, SpaceKind, Visual};
pub use tree::{
    build_rooted_tree, build_tree_ball, build_tree_ball_capped, rooted_tree_size, tree_ball_size, tree_distance,
};
pub use zmu::{
    build_zmu_net, radial_distance_formula, zmu_distance, zmu_visual_distance,
    zmu_visual_distance_periodic, ZmuLattice, ZmuLevel,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of points any builder will enumerate.
pub const DEFAULT_POINT_CAP: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("mesh too fine: {requested} points exceed the cap of {cap}")]
    MeshTooFine { requested: f64, cap: usize },
    #[error("size cap exceeded: {requested} points exceed the cap of {cap}")]
    SizeCap { requested: f64, cap: usize },
    #[error("point kind does not belong to this net")]
    PointKind,
}

/// Exponents, radius, mesh and slack constant describing one model space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    /// Exponents μ₁ ≤ … ≤ μ_n, all positive.
    pub mu: Vec<f64>,
    /// Ball radius R.
    pub radius: f64,
    /// Net spacing h, with 0 < h ≤ R unless R = 0.
    pub mesh: f64,
    /// Hyperbolicity slack δ used by approximate oracles.
    pub delta: f64,
    /// Torus dimension n.
    pub base_dim: usize,
}

impl SpaceParams {
    /// Parameters with δ = 1 and n = `mu.len()`.
    pub fn new(mu: Vec<f64>, radius: f64, mesh: f64) -> Result<Self, SpaceError> {
        let base_dim = mu.len();
        let p = Self { mu, radius, mesh, delta: 1.0, base_dim };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for ℍ² and tree nets, which carry a single unit exponent.
    pub fn unit(radius: f64, mesh: f64) -> Result<Self, SpaceError> {
        Self::new(vec![1.0], radius, mesh)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self, SpaceError> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |m: &str| Err(SpaceError::InvalidParams(m.to_string()));
        if self.mu.is_empty() {
            return bad("mu must be non-empty");
        }
        if self.mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return bad("all mu_i must be positive and finite");
        }
        if self.mu.windows(2).any(|w| w[0] > w[1]) {
            return bad("mu must be sorted ascending");
        }
        if self.base_dim != self.mu.len() {
            return bad("base_dim must equal the number of exponents");
        }
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return bad("radius must be finite and non-negative");
        }
        if !(self.mesh.is_finite() && self.mesh > 0.0) {
            return bad("mesh must be positive");
        }
        if self.radius > 0.0 && self.mesh > self.radius {
            return bad("mesh must not exceed the radius");
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad("delta must be non-negative");
        }
        Ok(())
    }

    pub fn mu_sum(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn mu_max(&self) -> f64 {
        *self.mu.last().expect("validated params have exponents")
    }
}

/// A point of one of the model spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Point {
    /// Polar coordinates in ℍ² around the centre of the ball.
    H2 { r: f64, theta: f64 },
    /// Child indices along the path from the root.
    TreeNode { path: Vec<u32> },
    /// Height t and torus coordinates x ∈ [0,1)ⁿ.
    Z { t: f64, x: Vec<f64> },
    /// Height and coordinates on the double cover, x_n ∈ [0,2).
    ZCover { t: f64, x: Vec<f64> },
    /// Vertex of an abstract graph.
    Vertex { id: usize },
}

impl Point {
    pub fn kind_label(&self) -> &'static str {
        match self {
            Point::H2 { .. } => "h2",
            Point::TreeNode { .. } => "tree",
            Point::Z { .. } => "z",
            Point::ZCover { .. } => "zcover",
            Point::Vertex { .. } => "vertex",
        }
    }

    /// Flat coordinate list used for CSV output.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::H2 { r, theta } => vec![*r, *theta],
            Point::TreeNode { path } => path.iter().map(|&c| f64::from(c)).collect(),
            Point::Z { t, x } | Point::ZCover { t, x } => {
                let mut v = Vec::with_capacity(x.len() + 1);
                v.push(*t);
                v.extend_from_slice(x);
                v
            }
            Point::Vertex { id } => vec![*id as f64],
        }
    }

    /// Inverse of [`Point::coords`] for a kind label.
    pub fn from_coords(kind: &str, coords: &[f64]) -> Result<Self, SpaceError> {
        let bad = || SpaceError::InvalidParams(format!("bad {kind} coordinates {coords:?}"));
        match kind {
            "h2" if coords.len() == 2 => Ok(Point::H2 { r: coords[0], theta: coords[1] }),
            "tree" => {
                let path = coords
                    .iter()
                    .map(|&c| if c >= 0.0 && c.fract() == 0.0 && c <= f64::from(u32::MAX) { Some(c as u32) } else { None })
                    .collect::<Option<Vec<u32>>>()
                    .ok_or_else(bad)?;
                Ok(Point::TreeNode { path })
            }
            "z" | "zcover" if coords.len() >= 2 => {
                let (t, x) = (coords[0], coords[1..].to_vec());
                Ok(if kind == "z" { Point::Z { t, x } } else { Point::ZCover { t, x } })
            }
            "vertex" if coords.len() == 1 && coords[0] >= 0.0 && coords[0].fract() == 0.0 => Ok(Point::Vertex { id: coords[0] as usize }),
            _ => Err(bad()),
        }
    }

    /// Distance to the base point (centre, root or height).
    pub fn height(&self) -> f64 {
        match self {
            Point::H2 { r, .. } => *r,
            Point::TreeNode { path } => path.len() as f64,
            Point::Z { t, .. } | Point::ZCover { t, .. } => *t,
            Point::Vertex { .. } => 0.0,
        }
    }
}
