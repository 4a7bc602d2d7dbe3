//! Voxel Euclidean signed distance grid baked from an analytic scene.
//!
//! Values are stored at voxel centers `origin + (i, j, k)·resolution` in
//! x-fastest order and queried by trilinear interpolation.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::field::DistanceField;
use super::primitive::Aabb;
use super::scene::Scene;
use crate::error::{Error, Result};
use crate::rmp::Vec3;

pub const DEFAULT_RESOLUTION: f64 = 0.2;
pub const DEFAULT_MAX_VOXELS: u64 = 512 * 512 * 512;

const BLOB_MAGIC: &[u8; 4] = b"ESDF";
const BLOB_VERSION: u32 = 1;
const BLOB_HEADER_LEN: usize = 4 + 4 + 3 * 8 + 8 + 3 * 4;

/// Gradient norms below this are reported as degenerate.
const DEGENERATE_GRADIENT: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct BakeOptions {
    /// Extra margin baked around the scene bounds (m).
    pub padding: f64,
    pub max_voxels: u64,
}

impl Default for BakeOptions {
    fn default() -> Self {
        Self {
            padding: 0.0,
            max_voxels: DEFAULT_MAX_VOXELS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EsdfGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    values: Vec<f64>,
}

/// Result of [`EsdfGrid::lookup`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EsdfSample {
    pub distance: f64,
    /// Unit gradient, or zero when `degenerate`.
    pub gradient: Vec3,
    /// The query lay outside the grid and was clamped to its boundary.
    pub extrapolated: bool,
    pub degenerate: bool,
}

impl EsdfGrid {
    /// Wraps precomputed voxel values.
    pub fn from_values(origin: Vec3, resolution: f64, dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if !(resolution > 0.0) || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "grid needs positive resolution and dims, got {resolution} and {dims:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(Error::InvalidParameter(format!("expected {n} voxel values, got {}", values.len())));
        }
        Ok(Self {
            origin,
            resolution,
            dims,
            values,
        })
    }

    pub fn bake(scene: &Scene, resolution: f64) -> Result<Self> {
        Self::bake_with(scene, resolution, BakeOptions::default())
    }

    /// Samples the scene at t = 0 on every voxel center covering its bounds.
    pub fn bake_with(scene: &Scene, resolution: f64, opts: BakeOptions) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidParameter(format!("resolution {resolution}")));
        }
        let bounds = scene.bounds.padded(opts.padding);
        bounds.validate()?;
        let extent = bounds.extent();
        let dims_f: Vec<f64> = (0..3).map(|k| (extent[k] / resolution - 1e-9).ceil() + 1.0).collect();
        let requested = dims_f.iter().product::<f64>();
        if requested > opts.max_voxels as f64 {
            return Err(Error::GridTooLarge {
                requested: requested as u64,
                limit: opts.max_voxels,
            });
        }
        let dims = [dims_f[0] as usize, dims_f[1] as usize, dims_f[2] as usize];
        let origin = bounds.min;
        let plane = dims[0] * dims[1];
        let mut values = vec![0.0; plane * dims[2]];
        values.par_chunks_mut(dims[0]).enumerate().for_each(|(row, out)| {
            let j = row % dims[1];
            let k = row / dims[1];
            for (i, v) in out.iter_mut().enumerate() {
                let x = origin + Vec3::new(i as f64, j as f64, k as f64) * resolution;
                *v = scene.distance(&x, 0.0);
            }
        });
        Ok(Self {
            origin,
            resolution,
            dims,
            values,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn voxel(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.resolution
    }

    /// Region spanned by the voxel centers.
    pub fn bounds(&self) -> Aabb {
        let span = Vec3::new((self.dims[0] - 1) as f64, (self.dims[1] - 1) as f64, (self.dims[2] - 1) as f64) * self.resolution;
        Aabb {
            min: self.origin,
            max: self.origin + span,
        }
    }

    pub fn in_bounds(&self, x: &Vec3) -> bool {
        self.bounds().contains(x)
    }

    /// Trilinear distance at `x`, clamped to the grid. The flag reports
    /// whether clamping happened.
    pub fn interpolate(&self, x: &Vec3) -> (f64, bool) {
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        let mut clamped = false;
        for k in 0..3 {
            let max = (self.dims[k] - 1) as f64;
            let mut u = (x[k] - self.origin[k]) / self.resolution;
            if !(u >= 0.0) {
                clamped |= u < -1e-9 || u.is_nan();
                u = 0.0;
            } else if u > max {
                clamped |= u > max + 1e-9;
                u = max;
            }
            let r = u.round();
            if (u - r).abs() < 1e-9 {
                u = r;
            }
            let i = (u.floor() as usize).min(self.dims[k].saturating_sub(2));
            base[k] = i;
            frac[k] = u - i as f64;
        }
        let step = |k: usize| if self.dims[k] > 1 { 1 } else { 0 };
        let (sx, sy, sz) = (step(0), step(1), step(2));
        let [i, j, k] = base;
        let v = |di: usize, dj: usize, dk: usize| self.voxel(i + di * sx, j + dj * sy, k + dk * sz);
        let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else { a + (b - a) * t };
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), frac[0]);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), frac[0]);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), frac[0]);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), frac[0]);
        let c0 = lerp(c00, c10, frac[1]);
        let c1 = lerp(c01, c11, frac[1]);
        (lerp(c0, c1, frac[2]), clamped)
    }

    /// Distance and unit gradient at `x`.
    ///
    /// The gradient is a central difference of the interpolated field with a
    /// step of one voxel.
    pub fn lookup(&self, x: &Vec3) -> EsdfSample {
        let (distance, extrapolated) = self.interpolate(x);
        let h = self.resolution;
        let mut grad = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            grad[k] = (self.interpolate(&(x + e)).0 - self.interpolate(&(x - e)).0) / (2.0 * h);
        }
        let norm = grad.norm();
        let degenerate = !(norm >= DEGENERATE_GRADIENT);
        EsdfSample {
            distance,
            gradient: if degenerate { Vec3::zeros() } else { grad / norm },
            extrapolated,
            degenerate,
        }
    }

    /// Largest absolute difference between any two voxels sharing a face,
    /// edge, or corner.
    pub fn max_neighbor_jump(&self) -> f64 {
        let [nx, ny, nz] = self.dims;
        (0..nz)
            .into_par_iter()
            .map(|k| {
                let mut worst = 0f64;
                for j in 0..ny {
                    for i in 0..nx {
                        let v = self.voxel(i, j, k);
                        for dk in 0..=1usize {
                            for dj in -1i64..=1 {
                                for di in -1i64..=1 {
                                    if dk == 0 && (dj < 0 || (dj == 0 && di <= 0)) {
                                        continue;
                                    }
                                    let (ii, jj, kk) = (i as i64 + di, j as i64 + dj, (k + dk) as i64);
                                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 || kk >= nz as i64 {
                                        continue;
                                    }
                                    let w = self.voxel(ii as usize, jj as usize, kk as usize);
                                    worst = worst.max((v - w).abs());
                                }
                            }
                        }
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Whether every neighbouring voxel pair differs by at most
    /// `resolution·√3 + 1e−6`.
    pub fn satisfies_lipschitz(&self) -> bool {
        self.max_neighbor_jump() <= self.resolution * 3f64.sqrt() + 1e-6
    }

    /// Fraction of voxels with non-positive distance.
    pub fn occupancy_fraction(&self) -> f64 {
        let occupied = self.values.iter().filter(|v| **v <= 0.0).count();
        occupied as f64 / self.values.len() as f64
    }

    /// Serializes to the little-endian `ESDF` blob with f32 voxel values.
    pub fn write_blob<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BLOB_MAGIC)?;
        w.write_all(&BLOB_VERSION.to_le_bytes())?;
        for k in 0..3 {
            w.write_all(&self.origin[k].to_le_bytes())?;
        }
        w.write_all(&self.resolution.to_le_bytes())?;
        for d in self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_blob<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::MalformedBlob(e.to_string()))?;
        if bytes.len() < BLOB_HEADER_LEN {
            return Err(Error::MalformedBlob(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[0..4] != BLOB_MAGIC {
            return Err(Error::MalformedBlob("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != BLOB_VERSION {
            return Err(Error::SchemaVersion {
                kind: "ESDF blob",
                found: version,
                expected: BLOB_VERSION,
            });
        }
        let origin = Vec3::new(f64_at(8), f64_at(16), f64_at(24));
        let resolution = f64_at(32);
        let dims = [u32_at(40) as usize, u32_at(44) as usize, u32_at(48) as usize];
        let n = dims.iter().product::<usize>();
        let body = &bytes[BLOB_HEADER_LEN..];
        if body.len() != n * 4 {
            return Err(Error::MalformedBlob(format!("expected {} value bytes, found {}", n * 4, body.len())));
        }
        let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Self::from_values(origin, resolution, dims, values)
    }

    pub fn save_blob(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_blob(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load_blob(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_blob(std::io::BufReader::new(file))
    }
}

impl DistanceField for EsdfGrid {
    fn distance(&self, x: &Vec3) -> f64 {
        self.interpolate(x).0
    }

    /// Half a voxel: below the discretization floor nothing is gained.
    fn surface_epsilon(&self) -> f64 {
        0.5 * self.resolution
    }

    fn contains(&self, x: &Vec3) -> bool {
        self.in_bounds(x)
    }
}
