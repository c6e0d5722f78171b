//! Finite, desk-scale models of quasi-isometry questions between hyperbolic spaces.
//!
//! The crate builds discrete nets of ℍ², regular-tree balls and the spaces
//! Z_μ = Tⁿ × ℝ with metric dt² + Σ e^{2μ_i t} dx_i², constructs explicit maps
//! between them, and measures what those maps cost.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`spaces`] | parameters, points, nets, distance oracles, net builders |
//! | [`embeddings`] | point maps, optimal (λ, c) distortion, tree and radial constructions |
//! | [`poincare`] | kernels, cocycles, seminorms, Poincaré constants, transport |
//! | [`boundary`] | visual metrics on ideal boundaries and the distortion function K(R) |
//! | [`sepvol`] | coarse volume, separation and the volume/connectivity obstructions |
//! | [`fit`] | growth-model fitting (constant, log, √R, linear, power) |
//! | [`experiment`] | R-sweep pipelines shared by the CLI and the acceptance suite |
//!
//! All randomness is derived from a single `u64` seed through [`rng::stream`],
//! so every pipeline is reproducible bit for bit.

pub mod boundary;
pub mod embeddings;
pub mod experiment;
pub mod fit;
pub mod poincare;
pub mod rng;
pub mod sepvol;
pub mod spaces;
