//! Average-outward-flux medial surfaces: Euclidean distance field, its
//! gradient, the AOF measure, and homotopy-preserving thinning.

mod aof;
mod dt;
mod thin;
mod topology;

pub use aof::{average_outward_flux, gradient_field, sphere_directions, AofField, VectorField};
pub use dt::{distance_transform, DistanceField};
pub use thin::{thin, SkeletalPoint, SkeletalPointSet};
pub use topology::{
    component_count_26, euler_characteristic, is_endpoint, is_simple, neighborhood_mask,
    simple_mask, CENTER_BIT,
};
