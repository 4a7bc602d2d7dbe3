//! Policy algebra: the `(f, A)` pair, soft normalization, and metric-weighted
//! combination.
//!
//! A [`Policy`] is an acceleration paired with a positive semi-definite
//! metric. Combining policies yields the metric-weighted mean
//! `(ΣA)⁺ Σ A f` with summed metric `ΣA`. Combination is split in two halves
//! so parallel callers can reduce partial sums themselves: [`PolicySum`]
//! accumulates `(ΣA, ΣAf)` and [`PolicySum::resolve`] applies the
//! pseudoinverse once at the end.

use std::ops::{Add, AddAssign};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::reduce;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Relative singular-value cutoff of the pseudoinverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-8;

/// Smallest eigenvalue still accepted as positive semi-definite.
pub const PSD_TOLERANCE: f64 = -1e-9;

/// Acceleration `f` together with its Riemannian metric `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Policy {
    accel: Vec3,
    metric: Mat3,
}

impl Policy {
    /// Builds a policy, symmetrizing the metric.
    pub fn new(accel: Vec3, metric: Mat3) -> Self {
        Self {
            accel,
            metric: (metric + metric.transpose()) * 0.5,
        }
    }

    /// The inactive policy: zero acceleration with zero weight.
    pub fn zero() -> Self {
        Self {
            accel: Vec3::zeros(),
            metric: Mat3::zeros(),
        }
    }

    pub fn accel(&self) -> Vec3 {
        self.accel
    }

    pub fn metric(&self) -> Mat3 {
        self.metric
    }

    pub fn is_finite(&self) -> bool {
        self.accel.iter().chain(self.metric.iter()).all(|x| x.is_finite())
    }

    /// Minimum eigenvalue of the metric.
    pub fn min_metric_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.metric).eigenvalues.min()
    }

    pub fn is_psd(&self) -> bool {
        self.min_metric_eigenvalue() >= PSD_TOLERANCE
    }
}

impl Default for Policy {
    fn default() -> Self {
        Self::zero()
    }
}

/// Position and velocity of the point robot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl RobotState {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        Self { position, velocity }
    }

    pub fn at_rest(position: Vec3) -> Self {
        Self::new(position, Vec3::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|x| x.is_finite())
    }
}

/// Soft normalization `v / (‖v‖ + c·ln(1 + e^(−2c‖v‖)))`.
///
/// The output is parallel to `v` with norm strictly below one and behaves
/// linearly (`v / (c·ln 2)`) near the origin.
pub fn soft_normalize(v: &Vec3, c: f64) -> Vec3 {
    debug_assert!(c > 0.0);
    let norm = v.norm();
    let denom = norm + c * (-2.0 * c * norm).exp().ln_1p();
    v / denom
}

/// Partial sum `(ΣA, ΣAf)` of a set of policies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicySum {
    pub metric: Mat3,
    pub weighted_accel: Vec3,
}

impl PolicySum {
    pub const ZERO: Self = Self {
        metric: Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        weighted_accel: Vec3::new(0.0, 0.0, 0.0),
    };

    pub fn from_policy(p: &Policy) -> Self {
        Self {
            metric: p.metric,
            weighted_accel: p.metric * p.accel,
        }
    }

    /// Applies the pseudoinverse: `((ΣA)⁺ ΣAf, ΣA)`.
    pub fn resolve(&self) -> Policy {
        let metric = (self.metric + self.metric.transpose()) * 0.5;
        let accel = pseudo_inverse(&metric) * self.weighted_accel;
        Policy { accel, metric }
    }
}

impl Default for PolicySum {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<&Policy> for PolicySum {
    fn from(p: &Policy) -> Self {
        Self::from_policy(p)
    }
}

impl Add for PolicySum {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            metric: self.metric + rhs.metric,
            weighted_accel: self.weighted_accel + rhs.weighted_accel,
        }
    }
}

impl AddAssign for PolicySum {
    fn add_assign(&mut self, rhs: Self) {
        self.metric += rhs.metric;
        self.weighted_accel += rhs.weighted_accel;
    }
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via eigendecomposition.
///
/// Eigenvalues at or below `PINV_RELATIVE_CUTOFF · λ_max` are zeroed. The
/// zero matrix maps to the zero matrix.
pub fn pseudo_inverse(m: &Mat3) -> Mat3 {
    let eig = SymmetricEigen::new(*m);
    let max = eig.eigenvalues.max();
    if !(max > 0.0) {
        return Mat3::zeros();
    }
    let cutoff = PINV_RELATIVE_CUTOFF * max;
    let inv = eig.eigenvalues.map(|l| if l > cutoff { 1.0 / l } else { 0.0 });
    eig.eigenvectors * Mat3::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Metric-weighted mean of `policies`, reduced pairwise.
///
/// An empty list yields the zero policy.
pub fn combine(policies: &[Policy]) -> Policy {
    reduce::tree_reduce_seq(policies.len(), |i| Some(PolicySum::from(&policies[i]))).resolve()
}
