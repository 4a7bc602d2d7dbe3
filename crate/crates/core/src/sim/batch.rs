use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::metrics::percentile;
use super::rollout::{rollout_with_map, Outcome, Planner, RolloutConfig};
use crate::error::{Error, Result};
use crate::geometry::{generate_world, WorldGenParams};

/// Cartesian product of seeds, obstacle tiers and planners to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSpec {
    pub seeds: Vec<u64>,
    pub tiers: Vec<usize>,
    pub planners: Vec<Planner>,
    /// Shared rollout settings; `planner` is replaced per run.
    pub rollout: RolloutConfig,
    /// Shared world settings; `n_obstacles` is replaced per tier.
    pub world: WorldGenParams,
}

impl BatchSpec {
    pub fn new(seeds: Vec<u64>, tiers: Vec<usize>, planners: Vec<Planner>) -> Self {
        Self {
            seeds,
            tiers,
            planners,
            rollout: RolloutConfig::default(),
            world: WorldGenParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.tiers.is_empty() || self.planners.is_empty() {
            return Err(Error::InvalidParameter("batch needs at least one seed, tier and planner".into()));
        }
        self.rollout.validate()?;
        self.planners.iter().try_for_each(Planner::validate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub smoothness: Option<f64>,
    pub path_length: f64,
    pub min_clearance: f64,
    pub plan_time_us_mean: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub tier: usize,
    pub seed: u64,
    pub planner: Planner,
    /// `Err` holds the message of a run that could not be set up.
    pub result: std::result::Result<RunSummary, String>,
}

impl RunRecord {
    pub fn outcome(&self) -> Option<Outcome> {
        self.result.as_ref().ok().map(|r| r.outcome)
    }
}

/// Aggregate over all seeds of one (tier, planner) cell. Rates are
/// fractions of `n_runs`, which includes failed setups.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchRow {
    pub tier: usize,
    pub planner: Planner,
    pub n_runs: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub stuck_rate: f64,
    pub timeout_rate: f64,
    pub error_rate: f64,
    /// Over successful runs with defined smoothness.
    pub smoothness_mean: Option<f64>,
    pub smoothness_p10: Option<f64>,
    pub smoothness_p90: Option<f64>,
    pub plan_time_us_mean: f64,
    pub wall_time_s_mean: f64,
}

pub const BATCH_CSV_HEADER: &str =
    "tier,planner,n_runs,success_rate,collision_rate,stuck_rate,timeout_rate,smoothness_mean,smoothness_p10,smoothness_p90,plan_time_us_mean";

#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    /// Ordered by tier, then seed, then planner, in `BatchSpec` order.
    pub runs: Vec<RunRecord>,
    /// Ordered by tier, then planner.
    pub rows: Vec<BatchRow>,
}

impl BatchResult {
    pub fn row(&self, tier: usize, planner: Planner) -> Option<&BatchRow> {
        self.rows.iter().find(|r| r.tier == tier && r.planner == planner)
    }

    /// Writes the aggregate table. Timing varies between runs; with
    /// `timing = false` its column is left empty so the output is
    /// reproducible byte for byte.
    pub fn write_csv<W: Write>(&self, mut w: W, timing: bool) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        writeln!(w, "{BATCH_CSV_HEADER}")?;
        for r in &self.rows {
            let plan = if timing { format!("{:.3}", r.plan_time_us_mean) } else { String::new() };
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
                r.tier,
                r.planner,
                r.n_runs,
                r.success_rate,
                r.collision_rate,
                r.stuck_rate,
                r.timeout_rate,
                opt(r.smoothness_mean),
                opt(r.smoothness_p10),
                opt(r.smoothness_p90),
                plan
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, timing).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, timing: bool) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv(timing)).map_err(|e| Error::io(path, e))
    }
}

fn run_world(spec: &BatchSpec, tier: usize, seed: u64) -> Vec<RunRecord> {
    let record = |planner: Planner, result| RunRecord { tier, seed, planner, result };
    let params = WorldGenParams {
        n_obstacles: tier,
        ..spec.world.clone()
    };
    let world = match generate_world(seed, &params) {
        Ok(w) => w,
        Err(e) => return spec.planners.iter().map(|&p| record(p, Err(e.to_string()))).collect(),
    };
    let map = if spec.planners.iter().any(Planner::uses_map) {
        match spec.rollout.bake_map(&world.scene) {
            Ok(m) => Some(m),
            Err(e) => return spec.planners.iter().map(|&p| record(p, Err(e.to_string()))).collect(),
        }
    } else {
        None
    };
    spec.planners
        .iter()
        .map(|&planner| {
            let cfg = RolloutConfig {
                planner,
                ..spec.rollout.clone()
            };
            let result = rollout_with_map(&world.scene, map.as_ref(), world.start, world.goal, &cfg)
                .map(|r| RunSummary {
                    outcome: r.outcome,
                    smoothness: r.metrics.smoothness,
                    path_length: r.metrics.path_length,
                    min_clearance: r.metrics.min_clearance,
                    plan_time_us_mean: r.metrics.plan_time_us_mean,
                    wall_time_s: r.metrics.wall_time_s,
                })
                .map_err(|e| e.to_string());
            record(planner, result)
        })
        .collect()
}

fn aggregate(tier: usize, planner: Planner, runs: &[&RunRecord]) -> BatchRow {
    let n = runs.len();
    let rate = |o: Outcome| runs.iter().filter(|r| r.outcome() == Some(o)).count() as f64 / n as f64;
    let ok: Vec<&RunSummary> = runs.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let smooth: Vec<f64> = ok.iter().filter(|r| r.outcome == Outcome::Success).filter_map(|r| r.smoothness).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let plan: Vec<f64> = ok.iter().map(|r| r.plan_time_us_mean).collect();
    let wall: Vec<f64> = ok.iter().map(|r| r.wall_time_s).collect();
    BatchRow {
        tier,
        planner,
        n_runs: n,
        success_rate: rate(Outcome::Success),
        collision_rate: rate(Outcome::Collision),
        stuck_rate: rate(Outcome::Stuck),
        timeout_rate: rate(Outcome::Timeout),
        error_rate: (n - ok.len()) as f64 / n as f64,
        smoothness_mean: mean(&smooth),
        smoothness_p10: percentile(&smooth, 0.1),
        smoothness_p90: percentile(&smooth, 0.9),
        plan_time_us_mean: mean(&plan).unwrap_or(0.0),
        wall_time_s_mean: mean(&wall).unwrap_or(0.0),
    }
}

/// Runs every (tier, seed, planner) combination. Worlds are evaluated in
/// parallel; each is generated and baked once and shared by its planners.
/// Setup failures are recorded per run and never abort the batch.
pub fn evaluate_batch(spec: &BatchSpec) -> Result<BatchResult> {
    evaluate_batch_with_progress(spec, |_| {})
}

/// [`evaluate_batch`] calling `progress` as each world finishes.
pub fn evaluate_batch_with_progress<P>(spec: &BatchSpec, progress: P) -> Result<BatchResult>
where
    P: Fn(&[RunRecord]) + Sync,
{
    spec.validate()?;
    let jobs: Vec<(usize, u64)> = spec.tiers.iter().flat_map(|&t| spec.seeds.iter().map(move |&s| (t, s))).collect();
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(tier, seed)| {
            let records = run_world(spec, tier, seed);
            progress(&records);
            records
        })
        .collect();
    let mut rows = Vec::with_capacity(spec.tiers.len() * spec.planners.len());
    for &tier in &spec.tiers {
        for &planner in &spec.planners {
            let cell: Vec<&RunRecord> = runs.iter().filter(|r| r.tier == tier && r.planner == planner).collect();
            rows.push(aggregate(tier, planner, &cell));
        }
    }
    Ok(BatchResult { runs, rows })
}
