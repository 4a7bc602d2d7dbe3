use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rmp::Vec3;

/// Radical inverse of `i` in `base`.
///
/// Indexing starts at one: `halton(0, b)` is zero and would place a ray on
/// the +z pole at zero azimuth, so bundles never use it.
pub fn halton(mut i: u64, base: u64) -> f64 {
    debug_assert!(base >= 2);
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while i > 0 {
        value += (i % base) as f64 * scale;
        i /= base;
        scale *= inv_base;
    }
    value
}

/// Unit direction for Halton index `i`: polar angle from base 2, azimuth
/// from base 3.
pub fn halton_direction(i: u64) -> Vec3 {
    let polar = (1.0 - 2.0 * halton(i, 2)).acos();
    let azimuth = 2.0 * PI * halton(i, 3);
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(sp * ca, sp * sa, cp)
}

/// An ordered set of unit ray directions.
#[derive(Clone, Debug, PartialEq)]
pub struct RayBundle {
    directions: Vec<Vec3>,
}

impl RayBundle {
    /// Quasi-uniform sphere sampling using Halton indices `1..=n`.
    pub fn halton(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("ray bundle needs at least one ray".into()));
        }
        Ok(Self {
            directions: (1..=n as u64).map(halton_direction).collect(),
        })
    }

    /// Bundle from arbitrary directions, normalizing each.
    pub fn from_directions(directions: impl IntoIterator<Item = Vec3>) -> Result<Self> {
        let directions: Vec<Vec3> = directions
            .into_iter()
            .map(|d| {
                d.try_normalize(1e-12)
                    .ok_or_else(|| Error::InvalidParameter("zero-length ray direction".into()))
            })
            .collect::<Result<_>>()?;
        Ok(Self { directions })
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}
