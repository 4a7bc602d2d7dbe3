//! Throughput measurement of the ray and scan policies.
//!
//! Each configuration runs on its own rayon pool of the requested size.
//! Setup (pool creation, scan synthesis, bundle generation) happens outside
//! the timed region; each repetition times one full evaluate, reduce and
//! resolve cycle.

use std::hint::black_box;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{DistanceField, Scene};
use crate::policies::{lidar_policy, ray_policy, ObstacleParams};
use crate::raycast::{synthesize_scan, RangeScan, RayBundle, ScanOptions, ScanPattern, SensorPose};
use crate::rmp::{Policy, RobotState, Vec3};
use crate::sim::percentile;

pub const MIN_REPETITIONS: usize = 100;
pub const MIN_WARMUP: usize = 10;
pub const MIN_POSES: usize = 10;

/// Typical sensor frame rate (Hz) the scan policy has to keep up with.
pub const SENSOR_RATE_HZ: f64 = 20.0;

pub const BENCH_CSV_HEADER: &str = "planner,rays,workers,reps,median_us,p95_us,hz,per_ray_ns";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchOptions {
    pub repetitions: usize,
    pub warmup: usize,
    pub max_range: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repetitions: MIN_REPETITIONS,
            warmup: MIN_WARMUP,
            max_range: crate::raycast::DEFAULT_MAX_RANGE,
        }
    }
}

impl BenchOptions {
    fn validate(&self) -> Result<()> {
        if self.repetitions < MIN_REPETITIONS || self.warmup < MIN_WARMUP {
            return Err(Error::InvalidParameter(format!(
                "benchmarks need at least {MIN_REPETITIONS} repetitions and {MIN_WARMUP} warm-up runs"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    /// `ray` or `lidar`.
    pub planner: &'static str,
    /// Policies evaluated per call.
    pub rays: usize,
    pub workers: usize,
    pub reps: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub p95_us: f64,
    /// `1 / mean latency`.
    pub hz: f64,
    pub per_ray_ns: f64,
    /// Output for each pose, from the first pass over the poses.
    pub outputs: Vec<Policy>,
}

impl BenchRow {
    pub fn meets_rate(&self, hz: f64) -> bool {
        self.hz >= hz
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{BENCH_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.3},{:.3},{:.3},{:.3}",
                r.planner, r.rays, r.workers, r.reps, r.median_us, r.p95_us, r.hz, r.per_ray_ns
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Aligned plain-text table with a sensor-rate verdict on scan rows.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<7} {:>7} {:>7} {:>6} {:>12} {:>12} {:>10} {:>11}\n",
            "planner", "rays", "workers", "reps", "median_us", "p95_us", "hz", "per_ray_ns"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<7} {:>7} {:>7} {:>6} {:>12.1} {:>12.1} {:>10.1} {:>11.2}",
                r.planner, r.rays, r.workers, r.reps, r.median_us, r.p95_us, r.hz, r.per_ray_ns
            ));
            if r.planner == "lidar" {
                let verdict = if r.meets_rate(SENSOR_RATE_HZ) { "above" } else { "BELOW" };
                out.push_str(&format!("  {verdict} {SENSOR_RATE_HZ} Hz sensor rate"));
            }
            out.push('\n');
        }
        out
    }
}

/// `n` deterministic states in free space of `scene`, each moving at
/// 1 m/s in a random direction.
pub fn bench_states(scene: &Scene, n: usize, seed: u64) -> Result<Vec<RobotState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = scene.bounds;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n.max(1) * 10_000 {
        if out.len() == n {
            break;
        }
        let x = Vec3::new(
            rng.gen_range(b.min.x..=b.max.x),
            rng.gen_range(b.min.y..=b.max.y),
            rng.gen_range(b.min.z..=b.max.z),
        );
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if scene.distance(&x, 0.0) > 0.3 && v.norm() > 1e-3 {
            out.push(RobotState::new(x, v.normalize()));
        }
    }
    if out.len() < n {
        return Err(Error::WorldTooDense { attempts: n * 10_000 });
    }
    Ok(out)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build a pool of {workers} workers: {e}")))
}

fn measure<F: Fn(usize) -> Policy + Sync>(planner: &'static str, rays: usize, workers: usize, poses: usize, opts: &BenchOptions, eval: F) -> Result<BenchRow> {
    opts.validate()?;
    if poses < MIN_POSES {
        return Err(Error::InvalidParameter(format!("benchmarks cycle through at least {MIN_POSES} poses")));
    }
    let pool = pool(workers)?;
    let (outputs, samples) = pool.install(|| {
        let outputs: Vec<Policy> = (0..poses).map(&eval).collect();
        for i in 0..opts.warmup {
            black_box(eval(i % poses));
        }
        let samples: Vec<f64> = (0..opts.repetitions)
            .map(|i| {
                let t = Instant::now();
                black_box(eval(i % poses));
                t.elapsed().as_secs_f64() * 1e6
            })
            .collect();
        (outputs, samples)
    });
    let mean_us = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(BenchRow {
        planner,
        rays,
        workers: pool.current_num_threads(),
        reps: opts.repetitions,
        mean_us,
        median_us: percentile(&samples, 0.5).unwrap_or(0.0),
        p95_us: percentile(&samples, 0.95).unwrap_or(0.0),
        hz: 1e6 / mean_us,
        per_ray_ns: mean_us * 1e3 / rays.max(1) as f64,
        outputs,
    })
}

/// Times [`ray_policy`] with `n_rays` Halton rays against `field`, cycling
/// through `states`.
pub fn bench_policy<F: DistanceField + ?Sized>(
    field: &F,
    states: &[RobotState],
    n_rays: usize,
    workers: usize,
    params: &ObstacleParams,
    opts: &BenchOptions,
) -> Result<BenchRow> {
    let bundle = RayBundle::halton(n_rays)?;
    measure("ray", n_rays, workers, states.len(), opts, |i| {
        ray_policy(&states[i], field, &bundle, params, opts.max_range)
    })
}

/// Times [`lidar_policy`] on scans synthesized beforehand at each of
/// `states`.
#[allow(clippy::too_many_arguments)]
pub fn bench_scan_policy(
    scene: &Scene,
    states: &[RobotState],
    rows: usize,
    cols: usize,
    workers: usize,
    params: &ObstacleParams,
    min_range: f64,
    opts: &BenchOptions,
) -> Result<BenchRow> {
    let pattern = ScanPattern::new(rows, cols);
    let scan_opts = ScanOptions {
        max_range: opts.max_range,
        ..ScanOptions::default()
    };
    let scans: Vec<RangeScan> = states
        .iter()
        .map(|s| synthesize_scan(scene, SensorPose::at(s.position), pattern, 0.0, &scan_opts))
        .collect::<Result<_>>()?;
    measure("lidar", rows * cols, workers, states.len(), opts, |i| {
        lidar_policy(&states[i].velocity, &scans[i], params, min_range)
    })
}
