use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmp::Vec3;

/// Axis-aligned box given by its corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    /// Cube `[0, side]³`.
    pub fn cube(side: f64) -> Self {
        Self {
            min: Vec3::zeros(),
            max: Vec3::repeat(side),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0..3).all(|k| self.min[k].is_finite() && self.max[k].is_finite() && self.max[k] > self.min[k]);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "degenerate bounds {:?} .. {:?}",
                self.min.as_slice(),
                self.max.as_slice()
            )))
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|k| x[k] >= self.min[k] && x[k] <= self.max[k])
    }

    pub fn padded(&self, pad: f64) -> Self {
        Self {
            min: self.min - Vec3::repeat(pad),
            max: self.max + Vec3::repeat(pad),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Sphere { radius: f64 },
    Box { half_extents: Vec3 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoolOp {
    #[default]
    Union,
    Subtract,
}

/// A sphere or box, optionally translating at constant velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub center: Vec3,
    #[serde(default)]
    pub op: BoolOp,
    #[serde(default = "Vec3::zeros")]
    pub velocity: Vec3,
}

impl Primitive {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self {
            shape: Shape::Sphere { radius },
            center,
            op: BoolOp::Union,
            velocity: Vec3::zeros(),
        }
    }

    pub fn cuboid(center: Vec3, half_extents: Vec3) -> Self {
        Self {
            shape: Shape::Box { half_extents },
            center,
            op: BoolOp::Union,
            velocity: Vec3::zeros(),
        }
    }

    pub fn subtracted(mut self) -> Self {
        self.op = BoolOp::Subtract;
        self
    }

    pub fn moving(mut self, velocity: Vec3) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            Shape::Sphere { radius } => radius > 0.0 && radius.is_finite(),
            Shape::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0 && h.is_finite()),
        };
        let finite = self.center.iter().chain(self.velocity.iter()).all(|x| x.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid primitive {self:?}")))
        }
    }

    pub fn center_at(&self, t: f64) -> Vec3 {
        self.center + self.velocity * t
    }

    pub fn is_moving(&self) -> bool {
        self.velocity != Vec3::zeros()
    }

    /// Exact signed distance to this primitive's surface at time `t`.
    pub fn distance(&self, x: &Vec3, t: f64) -> f64 {
        let p = x - self.center_at(t);
        match self.shape {
            Shape::Sphere { radius } => p.norm() - radius,
            Shape::Box { half_extents } => {
                let q = p.abs() - half_extents;
                let outside = q.sup(&Vec3::zeros()).norm();
                let inside = q.max().min(0.0);
                outside + inside
            }
        }
    }
}
