use crate::geometry::DistanceField;
use crate::rmp::Vec3;

pub const DEFAULT_MAX_RANGE: f64 = 20.0;

/// Iteration cap for one sphere trace; exhausting it counts as a miss.
pub const MAX_TRACE_STEPS: usize = 512;

/// Sphere traces `field` from `origin` along unit `dir`.
///
/// Returns the distance to the first point whose field value drops below the
/// surface epsilon, or `None` when the ray passes `max_range`, leaves the
/// field's domain, or runs out of steps. An origin inside an obstacle hits
/// at zero.
pub fn raycast<F: DistanceField + ?Sized>(field: &F, origin: &Vec3, dir: &Vec3, max_range: f64) -> Option<f64> {
    let eps = field.surface_epsilon();
    let mut t = 0.0;
    for _ in 0..MAX_TRACE_STEPS {
        let p = origin + dir * t;
        if !field.contains(&p) {
            return None;
        }
        let d = field.distance(&p);
        if d < eps {
            return Some(t);
        }
        t += d;
        if t > max_range {
            return None;
        }
    }
    None
}
