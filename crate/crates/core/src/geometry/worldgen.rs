//! Seeded random cluttered worlds with a start/goal pair across the clutter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::primitive::{Aabb, Primitive};
use super::scene::{Mission, Scene};
use crate::error::{Error, Result};
use crate::rmp::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldGenParams {
    pub bounds: Aabb,
    pub n_obstacles: usize,
    /// Sphere radius range (m).
    pub sphere_radius: [f64; 2],
    /// Box half-extent range per axis (m).
    pub box_half_extent: [f64; 2],
    /// Probability that a primitive is a box rather than a sphere.
    pub box_fraction: f64,
    /// Probability that a primitive is subtracted instead of merged.
    pub subtract_fraction: f64,
    /// Start and goal must have strictly more clearance than this (m).
    pub clearance: f64,
    /// Minimum start-goal separation as a fraction of the bounds diagonal.
    pub min_separation: f64,
    pub max_attempts: usize,
}

impl Default for WorldGenParams {
    fn default() -> Self {
        Self {
            bounds: Aabb::cube(10.0),
            n_obstacles: 0,
            sphere_radius: [0.3, 1.5],
            box_half_extent: [0.3, 1.5],
            box_fraction: 0.5,
            subtract_fraction: 0.1,
            clearance: 0.3,
            min_separation: 0.6,
            max_attempts: 10_000,
        }
    }
}

impl WorldGenParams {
    pub fn with_obstacles(n_obstacles: usize) -> Self {
        Self {
            n_obstacles,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub scene: Scene,
    pub start: Vec3,
    pub goal: Vec3,
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: &Vec3, hi: &Vec3) -> Vec3 {
    Vec3::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y), rng.gen_range(lo.z..=hi.z))
}

/// Generates the world for `seed`. Identical inputs give identical output.
///
/// Start lies in the lower-x half of the bounds and goal in the upper-x half,
/// both with clearance above `params.clearance` and at least
/// `min_separation · diagonal` apart.
pub fn generate_world(seed: u64, params: &WorldGenParams) -> Result<World> {
    params.bounds.validate()?;
    let [r_lo, r_hi] = params.sphere_radius;
    let [h_lo, h_hi] = params.box_half_extent;
    if !(r_lo > 0.0 && r_hi >= r_lo && h_lo > 0.0 && h_hi >= h_lo) {
        return Err(Error::InvalidParameter("obstacle size ranges must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = params.bounds;
    let mut scene = Scene::new(b);
    scene.seed = Some(seed);
    for _ in 0..params.n_obstacles {
        let center = uniform_in(&mut rng, &b.min, &b.max);
        let mut p = if rng.gen_bool(params.box_fraction) {
            let h = Vec3::new(rng.gen_range(h_lo..=h_hi), rng.gen_range(h_lo..=h_hi), rng.gen_range(h_lo..=h_hi));
            Primitive::cuboid(center, h)
        } else {
            Primitive::sphere(center, rng.gen_range(r_lo..=r_hi))
        };
        if rng.gen_bool(params.subtract_fraction) {
            p = p.subtracted();
        }
        scene.primitives.push(p);
    }

    let mid = b.center().x;
    let lower_max = Vec3::new(mid, b.max.y, b.max.z);
    let upper_min = Vec3::new(mid, b.min.y, b.min.z);
    let min_sep = params.min_separation * b.diagonal();
    for _ in 0..params.max_attempts {
        let start = uniform_in(&mut rng, &b.min, &lower_max);
        let goal = uniform_in(&mut rng, &upper_min, &b.max);
        if (goal - start).norm() < min_sep {
            continue;
        }
        if scene.distance(&start, 0.0) > params.clearance && scene.distance(&goal, 0.0) > params.clearance {
            scene.mission = Some(Mission { start, goal });
            return Ok(World { scene, start, goal });
        }
    }
    Err(Error::WorldTooDense { attempts: params.max_attempts })
}
