//! Range scans on an azimuth × elevation lattice, synthesized by tracing an
//! analytic scene or loaded from disk.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::{raycast, DEFAULT_MAX_RANGE};
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::rmp::{Mat3, Vec3};

pub const SCAN_SCHEMA_VERSION: u32 = 1;

/// Range carried by invalid beams.
pub const INVALID_RANGE: f64 = -1.0;

/// Regular lattice of `rows` elevations by `cols` azimuths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPattern {
    pub rows: usize,
    pub cols: usize,
    /// Full vertical field of view (rad), centered on the horizon.
    pub vertical_fov: f64,
}

impl ScanPattern {
    pub const DEFAULT_VERTICAL_FOV: f64 = PI / 2.0;

    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            vertical_fov: Self::DEFAULT_VERTICAL_FOV,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sensor-frame unit direction of beam (`row`, `col`).
    pub fn direction(&self, row: usize, col: usize) -> Vec3 {
        let elevation = if self.rows > 1 {
            -0.5 * self.vertical_fov + self.vertical_fov * row as f64 / (self.rows - 1) as f64
        } else {
            0.0
        };
        let azimuth = 2.0 * PI * col as f64 / self.cols as f64;
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || !(self.vertical_fov >= 0.0 && self.vertical_fov <= PI) {
            return Err(Error::InvalidParameter(format!("invalid scan pattern {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorPose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl SensorPose {
    pub fn at(position: Vec3) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Beam {
    /// Unit direction in the sensor frame.
    pub direction: Vec3,
    /// Measured range (m), or [`INVALID_RANGE`].
    pub range: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeScan {
    pub pose: SensorPose,
    pub pattern: ScanPattern,
    /// Row-major: beam `row * cols + col`.
    pub beams: Vec<Beam>,
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub max_range: f64,
    /// Fraction of beams randomly marked invalid.
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            max_range: DEFAULT_MAX_RANGE,
            dropout: 0.0,
            seed: 0,
        }
    }
}

/// Traces every lattice beam against `scene` frozen at time `t`.
pub fn synthesize_scan(scene: &Scene, pose: SensorPose, pattern: ScanPattern, t: f64, opts: &ScanOptions) -> Result<RangeScan> {
    pattern.validate()?;
    let rot = pose.orientation.to_rotation_matrix();
    let field = scene.at(t);
    let mut beams: Vec<Beam> = (0..pattern.len())
        .into_par_iter()
        .map(|i| {
            let direction = pattern.direction(i / pattern.cols, i % pattern.cols);
            let world = rot * direction;
            match raycast(&field, &pose.position, &world, opts.max_range) {
                Some(range) if range > 0.0 => Beam { direction, range, valid: true },
                _ => Beam {
                    direction,
                    range: INVALID_RANGE,
                    valid: false,
                },
            }
        })
        .collect();
    if opts.dropout > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for b in &mut beams {
            if rng.gen_bool(opts.dropout.min(1.0)) {
                b.valid = false;
                b.range = INVALID_RANGE;
            }
        }
    }
    Ok(RangeScan { pose, pattern, beams })
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    position: [f64; 3],
    /// (w, x, y, z)
    orientation: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct ScanRecord {
    version: u32,
    pose: PoseRecord,
    rows: usize,
    cols: usize,
    vertical_fov: f64,
    /// (row, col, range, valid)
    beams: Vec<(usize, usize, f64, bool)>,
}

impl RangeScan {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.beams.iter().filter(|b| b.valid).count()
    }

    pub fn rotation(&self) -> Mat3 {
        let r: Rotation3<f64> = self.pose.orientation.to_rotation_matrix();
        *r.matrix()
    }

    /// World-frame (direction, range) of beam `i` if it is valid and at
    /// least `min_range` long.
    pub fn world_beam(&self, rotation: &Mat3, i: usize, min_range: f64) -> Option<(Vec3, f64)> {
        let b = &self.beams[i];
        (b.valid && b.range > 0.0 && b.range >= min_range).then(|| (rotation * b.direction, b.range))
    }

    pub fn to_json(&self) -> String {
        let q = self.pose.orientation.quaternion();
        let record = ScanRecord {
            version: SCAN_SCHEMA_VERSION,
            pose: PoseRecord {
                position: [self.pose.position.x, self.pose.position.y, self.pose.position.z],
                orientation: [q.w, q.i, q.j, q.k],
            },
            rows: self.pattern.rows,
            cols: self.pattern.cols,
            vertical_fov: self.pattern.vertical_fov,
            beams: self
                .beams
                .iter()
                .enumerate()
                .map(|(i, b)| (i / self.pattern.cols, i % self.pattern.cols, b.range, b.valid))
                .collect(),
        };
        serde_json::to_string(&record).expect("scan record serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let rec: ScanRecord = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if rec.version != SCAN_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                kind: "scan",
                found: rec.version,
                expected: SCAN_SCHEMA_VERSION,
            });
        }
        let pattern = ScanPattern {
            rows: rec.rows,
            cols: rec.cols,
            vertical_fov: rec.vertical_fov,
        };
        pattern.validate()?;
        let [w, x, y, z] = rec.pose.orientation;
        let q = Quaternion::new(w, x, y, z);
        if !(q.norm() > 1e-9) {
            return Err(parse_err("zero orientation quaternion".into()));
        }
        let pose = SensorPose {
            position: Vec3::from(rec.pose.position),
            orientation: UnitQuaternion::from_quaternion(q),
        };
        let mut beams = vec![
            Beam {
                direction: Vec3::zeros(),
                range: INVALID_RANGE,
                valid: false,
            };
            pattern.len()
        ];
        for (i, b) in beams.iter_mut().enumerate() {
            b.direction = pattern.direction(i / pattern.cols, i % pattern.cols);
        }
        for (row, col, range, valid) in rec.beams {
            if row >= pattern.rows || col >= pattern.cols {
                return Err(parse_err(format!("beam ({row}, {col}) outside {}x{} pattern", pattern.rows, pattern.cols)));
            }
            let b = &mut beams[row * pattern.cols + col];
            let valid = valid && range.is_finite() && range > 0.0;
            b.valid = valid;
            b.range = if valid { range } else { INVALID_RANGE };
        }
        Ok(Self { pose, pattern, beams })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
