//! Goal attractor and obstacle avoidance policies.
//!
//! The obstacle policy for a single direction is a distance-decaying repulsor
//! plus a velocity-dependent damper, weighted by a metric stretched along the
//! damper direction. The raycast and scan policies evaluate it once per ray or
//! beam and tree-reduce the results.

mod params;

pub use params::{AttractorOverrides, AttractorParams, ObstacleOverrides, ObstacleParams, ParamOverrides, PolicyParams, Preset, PARAMS_SCHEMA_VERSION};

use crate::geometry::{DistanceField, EsdfGrid};
use crate::raycast::{raycast, RangeScan, RayBundle};
use crate::reduce::{tree_reduce_par, tree_reduce_seq};
use crate::rmp::{soft_normalize, Mat3, Policy, PolicySum, RobotState, Vec3};

/// Beams shorter than this hit the vehicle itself and are ignored.
pub const DEFAULT_MIN_SCAN_RANGE: f64 = 0.3;

/// `α·s(goal − x) − β·v` with identity metric.
pub fn attractor(state: &RobotState, goal: &Vec3, p: &AttractorParams) -> Policy {
    let f = soft_normalize(&(goal - state.position), p.c) * p.alpha - state.velocity * p.beta;
    Policy::new(f, Mat3::identity())
}

/// Activation weight `d²/r² − 2d/r + 1` inside `radius`, zero outside.
pub fn activation_weight(d: f64, radius: f64) -> f64 {
    if d < radius {
        let u = d / radius;
        u * u - 2.0 * u + 1.0
    } else {
        0.0
    }
}

/// Repulsive term `η_rep·exp(−d/υ_rep)·away`.
pub fn repulsor(away: &Vec3, d: f64, p: &ObstacleParams) -> Vec3 {
    away * (p.eta_rep * (-d / p.nu_rep).exp())
}

/// Damping term: squared approach speed along `−away`, scaled by
/// `η_damp / (d/υ_damp + ε)`. Zero when moving away from the obstacle.
pub fn damper(velocity: &Vec3, away: &Vec3, d: f64, p: &ObstacleParams) -> Vec3 {
    let approach = (-velocity.dot(away)).max(0.0);
    away * (approach * approach * p.eta_damp / (d / p.nu_damp + p.epsilon))
}

/// Obstacle policy for an obstacle at distance `d` (m) whose away-pointing
/// unit direction is `away`.
pub fn obstacle_ray_policy(velocity: &Vec3, away: &Vec3, d: f64, p: &ObstacleParams) -> Policy {
    let f_rep = repulsor(away, d, p);
    let f_damp = damper(velocity, away, d, p);
    let s = soft_normalize(&f_damp, p.c);
    let metric = s * s.transpose() * activation_weight(d, p.radius);
    Policy::new(f_rep + f_damp, metric)
}

/// Contribution of one hit along cast direction `dir`. Hits at or beyond the
/// activation radius have an exactly zero metric and are dropped.
#[inline]
fn hit_contribution(velocity: &Vec3, dir: &Vec3, d: f64, p: &ObstacleParams) -> Option<PolicySum> {
    (d < p.radius).then(|| PolicySum::from_policy(&obstacle_ray_policy(velocity, &-dir, d, p)))
}

/// Single-lookup policy driven by the ESDF distance and gradient.
pub fn esdf_policy(state: &RobotState, grid: &EsdfGrid, p: &ObstacleParams) -> Policy {
    let sample = grid.lookup(&state.position);
    if sample.degenerate {
        return Policy::zero();
    }
    obstacle_ray_policy(&state.velocity, &sample.gradient, sample.distance.max(0.0), p)
}

/// Partial sum of the raycast policy over `bundle`, evaluated on the current
/// rayon pool.
pub fn ray_policy_sum<F: DistanceField + ?Sized>(state: &RobotState, field: &F, bundle: &RayBundle, p: &ObstacleParams, max_range: f64) -> PolicySum {
    // Hits beyond the activation radius carry no weight, so tracing past it
    // changes nothing.
    let range = max_range.min(p.radius);
    let dirs = bundle.directions();
    tree_reduce_par(dirs.len(), |i| {
        let dir = &dirs[i];
        let d = raycast(field, &state.position, dir, range)?;
        hit_contribution(&state.velocity, dir, d, p)
    })
}

/// Raycast policy: one obstacle policy per hit ray, combined by metric
/// weighting. Missed rays contribute nothing.
pub fn ray_policy<F: DistanceField + ?Sized>(state: &RobotState, field: &F, bundle: &RayBundle, p: &ObstacleParams, max_range: f64) -> Policy {
    ray_policy_sum(state, field, bundle, p, max_range).resolve()
}

/// Same reduction as [`ray_policy`], run entirely on the calling thread.
pub fn ray_policy_serial<F: DistanceField + ?Sized>(state: &RobotState, field: &F, bundle: &RayBundle, p: &ObstacleParams, max_range: f64) -> Policy {
    let range = max_range.min(p.radius);
    let dirs = bundle.directions();
    tree_reduce_seq(dirs.len(), |i| {
        let dir = &dirs[i];
        let d = raycast(field, &state.position, dir, range)?;
        hit_contribution(&state.velocity, dir, d, p)
    })
    .resolve()
}

pub fn lidar_policy_sum(velocity: &Vec3, scan: &RangeScan, p: &ObstacleParams, min_range: f64) -> PolicySum {
    let rotation = scan.rotation();
    tree_reduce_par(scan.len(), |i| {
        let (dir, d) = scan.world_beam(&rotation, i, min_range)?;
        hit_contribution(velocity, &dir, d, p)
    })
}

/// Scan policy: beam directions and ranges stand in for cast rays. Invalid
/// beams and beams shorter than `min_range` are skipped.
pub fn lidar_policy(velocity: &Vec3, scan: &RangeScan, p: &ObstacleParams, min_range: f64) -> Policy {
    lidar_policy_sum(velocity, scan, p, min_range).resolve()
}
