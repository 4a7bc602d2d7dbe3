use std::f64::consts::PI;

use crate::rmp::Vec3;

/// Segments shorter than this are ignored by [`smoothness`].
pub const MIN_SEGMENT_LENGTH: f64 = 1e-6;

/// Mean angular similarity `1 − θ/π` between consecutive path segments,
/// where `θ` is the turn angle. 1.0 is a straight line, 0.5 an average
/// right-angle turn.
///
/// Returns `None` with fewer than two usable segments.
pub fn smoothness(points: &[Vec3]) -> Option<f64> {
    let mut prev: Option<Vec3> = None;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for w in points.windows(2) {
        let seg = w[1] - w[0];
        if seg.norm() < MIN_SEGMENT_LENGTH {
            continue;
        }
        if let Some(a) = prev {
            // atan2 keeps parallel and perpendicular segments exact.
            let angle = a.cross(&seg).norm().atan2(a.dot(&seg));
            total += 1.0 - angle / PI;
            pairs += 1;
        }
        prev = Some(seg);
    }
    (pairs > 0).then(|| total / pairs as f64)
}

pub fn path_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Linear-interpolated percentile, `q` in `[0, 1]`. `values` need not be
/// sorted.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}
