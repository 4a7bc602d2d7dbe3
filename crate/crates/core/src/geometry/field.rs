use crate::rmp::Vec3;

/// A signed distance field that can be sphere traced.
pub trait DistanceField: Sync {
    /// Signed distance at `x`, positive in free space. Must not overestimate
    /// the distance to the nearest surface by more than the surface epsilon.
    fn distance(&self, x: &Vec3) -> f64;

    /// Distance below which a sphere trace counts as a hit.
    fn surface_epsilon(&self) -> f64;

    /// Whether `x` lies where the field carries information. Rays leaving this
    /// region are reported as misses.
    fn contains(&self, _x: &Vec3) -> bool {
        true
    }
}

impl<T: DistanceField + ?Sized> DistanceField for &T {
    fn distance(&self, x: &Vec3) -> f64 {
        (**self).distance(x)
    }

    fn surface_epsilon(&self) -> f64 {
        (**self).surface_epsilon()
    }

    fn contains(&self, x: &Vec3) -> bool {
        (**self).contains(x)
    }
}
