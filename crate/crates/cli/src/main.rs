//! `rmpnav` command-line front end.
//!
//! Exit codes: 0 success, 2 collision, 3 timeout, 4 stuck, 64 usage error,
//! 65 data error.

mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rmpnav::bench::{bench_policy, bench_scan_policy, bench_states, BenchOptions, BenchReport};
use rmpnav::geometry::{generate_world, Aabb, EsdfGrid, Scene, WorldGenParams, DEFAULT_RESOLUTION};
use rmpnav::policies::{lidar_policy, PolicyParams, Preset, DEFAULT_MIN_SCAN_RANGE};
use rmpnav::raycast::RangeScan;
use rmpnav::sim::{evaluate_batch_with_progress, rollout, Outcome, Planner, RolloutConfig, RunRecord};
use rmpnav::Vec3;
use serde::Deserialize;

use crate::config::ExperimentConfig;

const EXIT_COLLISION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_STUCK: u8 = 4;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser, Debug)]
#[command(name = "rmpnav", version, about = "Raycast motion-policy navigation experiments")]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Log verbosity; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded random world and write it as a scene file.
    GenWorld(GenWorldArgs),
    /// Fly one rollout through a scene and write its trajectory.
    Rollout(RolloutArgs),
    /// Run a batch experiment described by a config file.
    Eval(EvalArgs),
    /// Benchmark policy evaluation throughput.
    Bench(BenchArgs),
    /// Evaluate the scan policy on recorded scans.
    ReplayScan(ReplayArgs),
}

#[derive(Args, Debug)]
struct GenWorldArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    obstacles: usize,
    /// Cube side `S` or corners `x0,y0,z0,x1,y1,z1` (m).
    #[arg(long, default_value = "10", value_parser = parse_bounds)]
    bounds: Aabb,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RolloutArgs {
    #[arg(long)]
    scene: PathBuf,
    /// `ray:N`, `ray:K^2`, `esdf` or `lidar:RxC`.
    #[arg(long, default_value = "ray:1024", value_parser = parse_planner)]
    planner: Planner,
    #[arg(long, default_value = "static_map", value_parser = parse_preset)]
    preset: Preset,
    /// Parameter file; replaces `--preset`.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Start `x,y,z`; defaults to the scene's mission.
    #[arg(long, value_parser = parse_vec3)]
    start: Option<Vec3>,
    /// Goal `x,y,z`; defaults to the scene's mission.
    #[arg(long, value_parser = parse_vec3)]
    goal: Option<Vec3>,
    #[arg(long)]
    max_time: Option<f64>,
    /// Hold the goal for the whole episode instead of stopping there.
    #[arg(long)]
    hold: bool,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Ray counts, `N` or `K^2`.
    #[arg(long, value_delimiter = ',', default_value = "4^2,8^2,16^2,32^2,64^2,128^2,256^2", value_parser = parse_count)]
    rays_sweep: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers_sweep: Vec<usize>,
    /// Scan sizes `RxC` for the scan policy.
    #[arg(long, value_delimiter = ',', value_parser = parse_scan_size)]
    scans: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 100)]
    obstacles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    poses: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long, num_args = 1.., required = true)]
    scans: Vec<PathBuf>,
    /// CSV with columns `vx,vy,vz`: one row per scan, or a single row for all.
    #[arg(long)]
    velocities: Option<PathBuf>,
    #[arg(long, default_value = "lidar", value_parser = parse_preset)]
    preset: Preset,
    #[arg(long, default_value_t = DEFAULT_MIN_SCAN_RANGE)]
    min_range: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Command failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_DATA,
        error: error.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

fn parse_bounds(s: &str) -> Result<Aabb, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    let b = match v[..] {
        [side] => Aabb::cube(side),
        [x0, y0, z0, x1, y1, z1] => Aabb {
            min: Vec3::new(x0, y0, z0),
            max: Vec3::new(x1, y1, z1),
        },
        _ => return Err(format!("expected S or x0,y0,z0,x1,y1,z1, got '{s}'")),
    };
    b.validate().map_err(|e| e.to_string())?;
    Ok(b)
}

fn parse_planner(s: &str) -> Result<Planner, String> {
    s.parse().map_err(|e: rmpnav::Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: rmpnav::Error| e.to_string())
}

fn parse_count(s: &str) -> Result<usize, String> {
    let bad = |_| format!("expected N or K^2, got '{s}'");
    match s.trim().split_once('^') {
        Some((k, "2")) => k.trim().parse::<usize>().map(|k| k * k).map_err(bad),
        Some(_) => Err(format!("expected N or K^2, got '{s}'")),
        None => s.trim().parse().map_err(bad),
    }
}

fn parse_scan_size(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once('x').ok_or_else(|| format!("expected RxC, got '{s}'"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((n(r)?, n(c)?))
}

fn create_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(data),
        _ => Ok(()),
    }
}

fn cmd_gen_world(args: GenWorldArgs) -> CmdResult {
    let params = WorldGenParams {
        bounds: args.bounds,
        n_obstacles: args.obstacles,
        ..WorldGenParams::default()
    };
    let world = generate_world(args.seed, &params).map_err(data)?;
    let occupancy = EsdfGrid::bake(&world.scene, DEFAULT_RESOLUTION).map_err(data)?.occupancy_fraction();
    create_parent(&args.out)?;
    world.scene.save(&args.out).map_err(data)?;
    println!("wrote {}", args.out.display());
    println!("obstacles {}", world.scene.primitives.len());
    println!("occupancy {occupancy:.4} (resolution {DEFAULT_RESOLUTION} m)");
    println!("start {:.4},{:.4},{:.4}", world.start.x, world.start.y, world.start.z);
    println!("goal {:.4},{:.4},{:.4}", world.goal.x, world.goal.y, world.goal.z);
    Ok(0)
}

fn cmd_rollout(args: RolloutArgs) -> CmdResult {
    let scene = Scene::load(&args.scene).map_err(data)?;
    let params = match &args.params {
        Some(p) => PolicyParams::load(p).map_err(data)?,
        None => args.preset.params(),
    };
    let mission = scene.mission;
    let start = args
        .start
        .or(mission.map(|m| m.start))
        .ok_or_else(|| usage(anyhow!("{} has no mission; pass --start", args.scene.display())))?;
    let goal = args
        .goal
        .or(mission.map(|m| m.goal))
        .ok_or_else(|| usage(anyhow!("{} has no mission; pass --goal", args.scene.display())))?;
    let defaults = RolloutConfig::default();
    let cfg = RolloutConfig {
        planner: args.planner,
        params,
        max_time: args.max_time.unwrap_or(defaults.max_time),
        hold_position: args.hold,
        ..defaults
    };
    let record = rollout(&scene, start, goal, &cfg).map_err(data)?;
    create_parent(&args.out)?;
    record.save_csv(&args.out).map_err(data)?;
    let m = &record.metrics;
    let smooth = m.smoothness.map_or("undefined".to_string(), |s| format!("{s:.4}"));
    println!("outcome {}", record.outcome);
    println!("time {:.2} s", record.samples.last().map_or(0.0, |s| s.t));
    println!("path_length {:.3} m", m.path_length);
    println!("min_clearance {:.3} m", m.min_clearance);
    println!("smoothness {smooth}");
    println!("plan_time_us_mean {:.1}", m.plan_time_us_mean);
    Ok(match record.outcome {
        Outcome::Success => 0,
        Outcome::Collision => EXIT_COLLISION,
        Outcome::Timeout => EXIT_TIMEOUT,
        Outcome::Stuck => EXIT_STUCK,
    })
}

fn write_runs_csv(path: &Path, runs: &[RunRecord], timing: bool) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record([
        "tier",
        "seed",
        "planner",
        "outcome",
        "smoothness",
        "path_length",
        "min_clearance",
        "plan_time_us_mean",
        "error",
    ])?;
    for r in runs {
        let fields: [String; 9] = match &r.result {
            Ok(s) => [
                r.tier.to_string(),
                r.seed.to_string(),
                r.planner.to_string(),
                s.outcome.to_string(),
                s.smoothness.map(|x| format!("{x:.6}")).unwrap_or_default(),
                format!("{:.6}", s.path_length),
                format!("{:.6}", s.min_clearance),
                if timing { format!("{:.3}", s.plan_time_us_mean) } else { String::new() },
                String::new(),
            ],
            Err(e) => [
                r.tier.to_string(),
                r.seed.to_string(),
                r.planner.to_string(),
                "ERROR".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let cfg = ExperimentConfig::load(&args.config).map_err(data)?;
    let spec = cfg.batch_spec().map_err(data)?;
    let total = spec.seeds.len() * spec.tiers.len() * spec.planners.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let result = evaluate_batch_with_progress(&spec, |records| {
        for r in records {
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            let outcome = match &r.result {
                Ok(s) => s.outcome.to_string(),
                Err(e) => format!("ERROR ({e})"),
            };
            eprintln!("[{k}/{total}] tier {} seed {} {}: {outcome}", r.tier, r.seed, r.planner);
        }
    })
    .map_err(data)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(data)?;
    let batch = dir.join("batch.csv");
    result.save_csv(&batch, cfg.record_timing).map_err(data)?;
    write_runs_csv(&dir.join("runs.csv"), &result.runs, cfg.record_timing).map_err(data)?;
    let resolved = cfg.to_toml().map_err(data)?;
    fs::write(dir.join("config.toml"), resolved).context("cannot write config copy").map_err(data)?;
    print!("{}", result.to_csv(cfg.record_timing));
    eprintln!("wrote {}", batch.display());
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let opts = BenchOptions {
        repetitions: args.reps,
        warmup: args.warmup,
        ..BenchOptions::default()
    };
    let world = generate_world(args.seed, &WorldGenParams::with_obstacles(args.obstacles)).map_err(data)?;
    let grid = EsdfGrid::bake(&world.scene, DEFAULT_RESOLUTION).map_err(data)?;
    let states = bench_states(&world.scene, args.poses, args.seed).map_err(data)?;
    let map_params = Preset::StaticMap.params().obstacle;
    let scan_params = Preset::Lidar.params().obstacle;
    let mut report = BenchReport::default();
    for &workers in &args.workers_sweep {
        for &rays in &args.rays_sweep {
            let row = bench_policy(&grid, &states, rays, workers, &map_params, &opts).map_err(usage_or_data)?;
            eprintln!("ray {rays} x{workers}: {:.1} us median", row.median_us);
            report.rows.push(row);
        }
        for &(rows, cols) in &args.scans {
            let row = bench_scan_policy(&world.scene, &states, rows, cols, workers, &scan_params, DEFAULT_MIN_SCAN_RANGE, &opts).map_err(usage_or_data)?;
            eprintln!("lidar {rows}x{cols} x{workers}: {:.1} us median", row.median_us);
            report.rows.push(row);
        }
    }
    create_parent(&args.out)?;
    report.save_csv(&args.out).map_err(data)?;
    print!("{}", report.table());
    Ok(0)
}

fn usage_or_data(e: rmpnav::Error) -> Failure {
    match e {
        rmpnav::Error::InvalidParameter(_) => usage(e.into()),
        other => data(other),
    }
}

#[derive(Deserialize)]
struct VelocityRow {
    vx: f64,
    vy: f64,
    vz: f64,
}

fn read_velocities(path: &Path) -> anyhow::Result<Vec<Vec3>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    r.deserialize::<VelocityRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.with_context(|| format!("{}: bad velocity row {}", path.display(), i + 1))?;
            Ok(Vec3::new(row.vx, row.vy, row.vz))
        })
        .collect()
}

fn cmd_replay_scan(args: ReplayArgs) -> CmdResult {
    let velocities = match &args.velocities {
        Some(p) => read_velocities(p).map_err(data)?,
        None => vec![Vec3::zeros()],
    };
    if velocities.len() != 1 && velocities.len() != args.scans.len() {
        return Err(data(anyhow!(
            "{} velocity rows for {} scans (need one per scan, or exactly one)",
            velocities.len(),
            args.scans.len()
        )));
    }
    let params = args.preset.params().obstacle;
    create_parent(&args.out)?;
    let mut w = csv::Writer::from_path(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))
        .map_err(data)?;
    let header = ["scan", "file", "valid_beams", "fx", "fy", "fz", "a00", "a01", "a02", "a11", "a12", "a22"];
    w.write_record(header).map_err(data)?;
    let mut written = 0usize;
    for (i, path) in args.scans.iter().enumerate() {
        let scan = match RangeScan::load(path) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                eprintln!("warning: skipping {}: {e}", path.display());
                continue;
            }
        };
        let v = velocities[if velocities.len() == 1 { 0 } else { i }];
        let p = lidar_policy(&v, &scan, &params, args.min_range);
        let (f, a) = (p.accel(), p.metric());
        let mut row = vec![i.to_string(), path.display().to_string(), scan.valid_count().to_string()];
        row.extend(
            [f.x, f.y, f.z, a[(0, 0)], a[(0, 1)], a[(0, 2)], a[(1, 1)], a[(1, 2)], a[(2, 2)]]
                .iter()
                .map(|x| x.to_string()),
        );
        w.write_record(&row).map_err(data)?;
        written += 1;
    }
    w.flush().context("cannot flush policy CSV").map_err(data)?;
    println!("wrote {written} of {} scans to {}", args.scans.len(), args.out.display());
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(usage(anyhow!("--workers must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(anyhow!("cannot size worker pool: {e}")))?;
    }
    match cli.command {
        Command::GenWorld(a) => cmd_gen_world(a),
        Command::Rollout(a) => cmd_rollout(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ReplayScan(a) => cmd_replay_scan(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
