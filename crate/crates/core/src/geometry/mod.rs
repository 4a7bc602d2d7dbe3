//! World representation: analytic primitive scenes and baked ESDF grids.

mod esdf;
mod field;
mod primitive;
mod scene;
mod worldgen;

pub use esdf::{BakeOptions, EsdfGrid, EsdfSample, DEFAULT_MAX_VOXELS, DEFAULT_RESOLUTION};
pub use field::DistanceField;
pub use primitive::{Aabb, BoolOp, Primitive, Shape};
pub use scene::{Mission, Scene, SceneAt, ANALYTIC_SURFACE_EPSILON, SCENE_SCHEMA_VERSION};
pub use worldgen::{generate_world, World, WorldGenParams};
