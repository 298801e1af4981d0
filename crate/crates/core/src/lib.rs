//! Medial-surface driven spectral coordinates for 3D shape analysis.
//!
//! The pipeline: voxelize a watertight mesh, extract an average-outward-flux
//! (AOF) medial surface by topology-preserving thinning, reconstruct the
//! object as a sphere envelope, couple boundary vertices that share medial
//! spheres into a weighted graph, and solve a generalized Laplacian
//! eigenproblem to obtain per-vertex spectral coordinates. Those coordinates
//! feed shape correspondence, unsupervised part segmentation, and per-point
//! feature export.

pub mod config;
pub mod correspond;
pub mod error;
pub mod features;
pub mod medial;
pub mod pipeline;
pub mod recon;
pub mod segment;
pub mod spatial;
pub mod spectral;
pub mod synth;
pub mod voxelio;

pub use error::{Error, Result};
