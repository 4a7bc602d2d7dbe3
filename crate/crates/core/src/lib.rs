//! Obstacle avoidance with Riemannian Motion Policies evaluated over many
//! raycasts.
//!
//! Each ray cast from the robot into a signed distance map (or each beam of a
//! range scan) yields a small repulsor/damper policy. Thousands of them are
//! evaluated in parallel, tree-reduced, and combined with a goal attractor
//! into a single acceleration command.
//!
//! Modules, bottom-up:
//!
//! - [`rmp`]: policy algebra, soft normalization and combination.
//! - [`geometry`]: analytic scenes, baked ESDF grids, random world generation.
//! - [`raycast`]: Halton ray bundles, sphere tracing, synthetic range scans.
//! - [`policies`]: attractor, obstacle, ESDF, raycast and scan policies.
//! - [`sim`]: closed-loop rollouts, trajectory metrics, batch evaluation.
//! - [`bench`]: throughput measurement of policy evaluation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod geometry;
pub mod policies;
pub mod raycast;
pub mod reduce;
pub mod rmp;
pub mod sim;

pub use error::{Error, Result};
pub use rmp::{combine, soft_normalize, Mat3, Policy, PolicySum, RobotState, Vec3};
