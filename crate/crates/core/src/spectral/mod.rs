//! Medially weighted spectral embeddings: boundary-to-medial association,
//! graph assembly with sphere-overlap weights, the generalized eigenproblem,
//! and global spectral signatures.

pub(crate) mod eigen;
pub(crate) mod embedding;
pub(crate) mod graph;
pub(crate) mod overlap;

pub use eigen::{solve_smallest, EigenResult};
pub use embedding::{
    solve_eigens, spectral_signature, SpectralEmbedding, SpectralSignature,
};
pub use graph::{
    build_graph, build_graph_from_spheres, map_boundary_to_medial, resolve_spheres,
    BoundaryMedialMap, MedialGraph, RhoMode,
};
pub use overlap::sphere_overlap_volume;
