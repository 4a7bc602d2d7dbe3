use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{path_length, smoothness};
use crate::error::{Error, Result};
use crate::geometry::{BakeOptions, EsdfGrid, Scene, DEFAULT_RESOLUTION};
use crate::policies::{attractor, esdf_policy, lidar_policy_sum, ray_policy_sum, PolicyParams, DEFAULT_MIN_SCAN_RANGE};
use crate::raycast::{synthesize_scan, RayBundle, ScanOptions, ScanPattern, SensorPose, DEFAULT_MAX_RANGE};
use crate::rmp::{combine, Policy, RobotState, Vec3};

/// Obstacle policy driving a rollout.
///
/// Textual form: `ray:<n>`, `ray:<k>^2` (k² rays), `esdf`, `lidar:<rows>x<cols>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Planner {
    /// Halton ray bundle cast into the baked grid.
    Ray(usize),
    /// Single distance and gradient lookup in the baked grid.
    Esdf,
    /// Synthesized scan of the live scene at every step.
    Lidar { rows: usize, cols: usize },
}

impl Planner {
    /// `k²` rays.
    pub fn ray_squared(k: usize) -> Self {
        Planner::Ray(k * k)
    }

    pub fn uses_map(&self) -> bool {
        !matches!(self, Planner::Lidar { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Planner::Ray(0) => Err(Error::InvalidParameter("ray planner needs at least one ray".into())),
            Planner::Lidar { rows, cols } if rows == 0 || cols == 0 => Err(Error::InvalidParameter(format!("empty scan pattern {rows}x{cols}"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Planner::Ray(n) => write!(f, "ray:{n}"),
            Planner::Esdf => f.write_str("esdf"),
            Planner::Lidar { rows, cols } => write!(f, "lidar:{rows}x{cols}"),
        }
    }
}

impl FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad planner '{s}' (expected ray:N, ray:K^2, esdf or lidar:RxC)"));
        let count = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let planner = match s.trim().split_once(':') {
            None if s.trim() == "esdf" => Planner::Esdf,
            Some(("ray", n)) => match n.split_once('^') {
                Some((k, "2")) => Planner::ray_squared(count(k)?),
                Some(_) => return Err(bad()),
                None => Planner::Ray(count(n)?),
            },
            Some(("lidar", size)) => {
                let (r, c) = size.split_once('x').ok_or_else(bad)?;
                Planner::Lidar {
                    rows: count(r)?,
                    cols: count(c)?,
                }
            }
            _ => return Err(bad()),
        };
        planner.validate()?;
        Ok(planner)
    }
}

impl TryFrom<String> for Planner {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Planner> for String {
    fn from(p: Planner) -> String {
        p.to_string()
    }
}

/// Scan synthesis settings for lidar rollouts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub vertical_fov: f64,
    /// Beams shorter than this are discarded (m).
    pub min_range: f64,
    pub dropout: f64,
    /// Dropout seed; step `k` uses `seed + k`.
    pub seed: u64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            vertical_fov: ScanPattern::DEFAULT_VERTICAL_FOV,
            min_range: DEFAULT_MIN_SCAN_RANGE,
            dropout: 0.0,
            seed: 0,
        }
    }
}

/// Rollout settings. The serialized form carries the simulation settings
/// only; `planner` and `params` are chosen per run by the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    /// Integration step (s).
    pub dt: f64,
    pub max_time: f64,
    pub robot_radius: f64,
    pub goal_tolerance: f64,
    /// Keep flying until `max_time` instead of stopping at the goal; a
    /// collision-free episode then ends in success.
    pub hold_position: bool,
    #[serde(skip)]
    pub planner: Planner,
    #[serde(skip)]
    pub params: PolicyParams,
    /// Commanded accelerations are clamped to this norm (m/s²).
    pub max_accel: f64,
    /// Length of the stuck-detection window (s).
    pub stuck_window: f64,
    /// Net displacement over the window divided by its length, below which
    /// the robot counts as stuck (m/s). Chattering in place qualifies.
    pub stuck_speed: f64,
    pub max_range: f64,
    /// Resolution of the grid baked for map planners (m).
    pub map_resolution: f64,
    /// Margin baked around the scene bounds for map planners (m).
    pub map_padding: f64,
    pub scan: ScanSettings,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            max_time: 60.0,
            robot_radius: 0.3,
            goal_tolerance: 0.3,
            hold_position: false,
            planner: Planner::ray_squared(32),
            params: PolicyParams::default(),
            max_accel: 40.0,
            stuck_window: 2.0,
            stuck_speed: 0.01,
            max_range: DEFAULT_MAX_RANGE,
            map_resolution: DEFAULT_RESOLUTION,
            map_padding: 1.0,
            scan: ScanSettings::default(),
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("dt", self.dt > 0.0 && self.dt.is_finite()),
            ("max_time", self.max_time > 0.0 && self.max_time.is_finite()),
            ("robot_radius", self.robot_radius >= 0.0 && self.robot_radius.is_finite()),
            ("goal_tolerance", self.goal_tolerance >= 0.0),
            ("max_accel", self.max_accel > 0.0),
            ("stuck_window", self.stuck_window > 0.0),
            ("stuck_speed", self.stuck_speed >= 0.0),
            ("max_range", self.max_range > 0.0),
            ("map_resolution", self.map_resolution > 0.0),
            ("map_padding", self.map_padding >= 0.0),
            ("scan.dropout", (0.0..=1.0).contains(&self.scan.dropout)),
        ];
        if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
            return Err(Error::InvalidParameter(format!("rollout config field {name} out of range")));
        }
        self.planner.validate()?;
        self.params.validate()
    }

    /// Bakes the grid used by the map planners.
    pub fn bake_map(&self, scene: &Scene) -> Result<EsdfGrid> {
        EsdfGrid::bake_with(
            scene,
            self.map_resolution,
            BakeOptions {
                padding: self.map_padding,
                ..BakeOptions::default()
            },
        )
    }

    fn stuck_steps(&self) -> usize {
        ((self.stuck_window / self.dt).round() as usize).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
    Stuck,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "SUCCESS",
            Outcome::Collision => "COLLISION",
            Outcome::Timeout => "TIMEOUT",
            Outcome::Stuck => "STUCK",
        })
    }
}

/// State at time `t` and the command applied from `t` to `t + dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Zero on the terminal sample.
    pub accel: Vec3,
    /// Policy evaluation time for this step (µs).
    pub plan_time_us: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutMetrics {
    /// `None` when fewer than two segments are usable.
    pub smoothness: Option<f64>,
    pub path_length: f64,
    /// Smallest scene distance over all samples (m).
    pub min_clearance: f64,
    pub plan_time_us_mean: f64,
    pub clamp_events: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    pub metrics: RolloutMetrics,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,x,y,z,vx,vy,vz,ax,ay,az,plan_time_us";

impl TrajectoryRecord {
    pub fn positions(&self) -> Vec<Vec3> {
        self.samples.iter().map(|s| s.position).collect()
    }

    pub fn final_state(&self) -> RobotState {
        let s = self.samples.last().expect("a rollout records at least one sample");
        RobotState::new(s.position, s.velocity)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            let (p, v, a) = (s.position, s.velocity, s.accel);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{:.3}",
                s.t, p.x, p.y, p.z, v.x, v.y, v.z, a.x, a.y, a.z, s.plan_time_us
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

/// Semi-implicit Euler: velocity first, then position with the new velocity.
pub fn step(state: &RobotState, accel: &Vec3, dt: f64) -> RobotState {
    let velocity = state.velocity + accel * dt;
    RobotState::new(state.position + velocity * dt, velocity)
}

fn clamp_norm(a: Vec3, limit: f64) -> (Vec3, bool) {
    let n = a.norm();
    if n > limit {
        (a * (limit / n), true)
    } else {
        (a, false)
    }
}

/// Runs a rollout, baking the planner's grid first when it needs one.
pub fn rollout(scene: &Scene, start: Vec3, goal: Vec3, cfg: &RolloutConfig) -> Result<TrajectoryRecord> {
    let map = if cfg.planner.uses_map() { Some(cfg.bake_map(scene)?) } else { None };
    rollout_with_map(scene, map.as_ref(), start, goal, cfg)
}

/// Runs a rollout against a prebaked grid. Map planners bake one on demand
/// when `map` is `None`; the lidar planner ignores it.
///
/// Collision is checked against the analytic scene at simulation time.
pub fn rollout_with_map(scene: &Scene, map: Option<&EsdfGrid>, start: Vec3, goal: Vec3, cfg: &RolloutConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    scene.validate()?;
    for (name, p) in [("start", start), ("goal", goal)] {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} is not finite")));
        }
        let clearance = scene.distance(&p, 0.0);
        if clearance <= cfg.robot_radius {
            return Err(Error::InsufficientClearance {
                clearance,
                radius: cfg.robot_radius,
            });
        }
    }
    let baked;
    let map = match (cfg.planner.uses_map(), map) {
        (true, None) => {
            baked = cfg.bake_map(scene)?;
            Some(&baked)
        }
        (_, m) => m,
    };
    let bundle = match cfg.planner {
        Planner::Ray(n) => Some(RayBundle::halton(n)?),
        _ => None,
    };
    let scan_opts = ScanOptions {
        max_range: cfg.max_range,
        dropout: cfg.scan.dropout,
        seed: cfg.scan.seed,
    };
    let obstacle = &cfg.params.obstacle;

    let wall = Instant::now();
    let window = cfg.stuck_steps();
    let max_steps = (cfg.max_time / cfg.dt).round() as usize;
    let mut samples: Vec<Sample> = Vec::with_capacity(max_steps.min(100_000) + 1);
    let mut state = RobotState::at_rest(start);
    let mut clamp_events = 0usize;
    let mut min_clearance = f64::INFINITY;
    let mut k = 0usize;

    let outcome = loop {
        let t = k as f64 * cfg.dt;
        let clearance = scene.distance(&state.position, t);
        min_clearance = min_clearance.min(clearance);
        let terminal = |state: &RobotState| Sample {
            t,
            position: state.position,
            velocity: state.velocity,
            accel: Vec3::zeros(),
            plan_time_us: 0.0,
        };
        let outcome = if !state.is_finite() || clearance <= cfg.robot_radius {
            Some(Outcome::Collision)
        } else if !cfg.hold_position && (state.position - goal).norm() <= cfg.goal_tolerance {
            Some(Outcome::Success)
        } else if k >= max_steps {
            Some(if cfg.hold_position { Outcome::Success } else { Outcome::Timeout })
        } else if !cfg.hold_position && k >= window && (state.position - samples[k - window].position).norm() < cfg.stuck_speed * window as f64 * cfg.dt {
            Some(Outcome::Stuck)
        } else {
            None
        };
        if let Some(o) = outcome {
            samples.push(terminal(&state));
            break o;
        }

        let scan = match cfg.planner {
            Planner::Lidar { rows, cols } => {
                let pattern = ScanPattern {
                    rows,
                    cols,
                    vertical_fov: cfg.scan.vertical_fov,
                };
                let opts = ScanOptions {
                    seed: scan_opts.seed.wrapping_add(k as u64),
                    ..scan_opts
                };
                Some(synthesize_scan(scene, SensorPose::at(state.position), pattern, t, &opts)?)
            }
            _ => None,
        };

        let timer = Instant::now();
        let goal_policy = attractor(&state, &goal, &cfg.params.attractor);
        let obstacle_policy = match cfg.planner {
            Planner::Ray(_) => {
                let grid = map.expect("map planners always have a grid");
                ray_policy_sum(&state, grid, bundle.as_ref().expect("ray bundle"), obstacle, cfg.max_range).resolve()
            }
            Planner::Esdf => esdf_policy(&state, map.expect("map planners always have a grid"), obstacle),
            Planner::Lidar { .. } => {
                let scan = scan.as_ref().expect("lidar scan");
                lidar_policy_sum(&state.velocity, scan, obstacle, cfg.scan.min_range).resolve()
            }
        };
        let command: Policy = combine(&[goal_policy, obstacle_policy]);
        let plan_time_us = timer.elapsed().as_secs_f64() * 1e6;

        let (accel, clamped) = clamp_norm(command.accel(), cfg.max_accel);
        if clamped {
            clamp_events += 1;
            log::debug!("t={t:.2}: acceleration {:.1} clamped to {}", command.accel().norm(), cfg.max_accel);
        }
        samples.push(Sample {
            t,
            position: state.position,
            velocity: state.velocity,
            accel,
            plan_time_us,
        });
        state = step(&state, &accel, cfg.dt);
        k += 1;
    };
    if clamp_events > 0 {
        log::info!("{clamp_events} acceleration commands clamped to {} m/s²", cfg.max_accel);
    }

    let positions: Vec<Vec3> = samples.iter().map(|s| s.position).collect();
    let steps = samples.len().saturating_sub(1).max(1);
    let metrics = RolloutMetrics {
        smoothness: smoothness(&positions),
        path_length: path_length(&positions),
        min_clearance,
        plan_time_us_mean: samples.iter().map(|s| s.plan_time_us).sum::<f64>() / steps as f64,
        clamp_events,
        wall_time_s: wall.elapsed().as_secs_f64(),
    };
    Ok(TrajectoryRecord { samples, outcome, metrics })
}
