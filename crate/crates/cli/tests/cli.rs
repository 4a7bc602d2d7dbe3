use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rmpnav::geometry::{Aabb, EsdfGrid, Primitive, Scene};
use rmpnav::raycast::{synthesize_scan, ScanOptions, ScanPattern, SensorPose, INVALID_RANGE};
use rmpnav::Vec3;
use tempfile::TempDir;

fn rmpnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmpnav")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_codes() {
    assert_eq!(code(&rmpnav(&["--help"])), 0);
    assert_eq!(code(&rmpnav(&["--version"])), 0);
    assert_eq!(code(&rmpnav(&[])), 64);
    assert_eq!(code(&rmpnav(&["gen-world", "--seed", "x", "--obstacles", "1", "--out", "w.toml"])), 64);
    assert_eq!(code(&rmpnav(&["rollout", "--scene", "s.toml", "--planner", "ray:0", "--out", "t.csv"])), 64);
}

#[test]
fn gen_world_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    for path in [&a, &b] {
        let out = rmpnav(&["gen-world", "--seed", "7", "--obstacles", "30", "--out", p(path)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let scene = Scene::load(&a).unwrap();
    assert_eq!(scene.primitives.len(), 30);
    assert!(scene.mission.is_some());
}

#[test]
fn gen_world_empty_is_valid() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.toml");
    let out = rmpnav(&["gen-world", "--seed", "1", "--obstacles", "0", "--bounds", "0,0,0,8,6,4", "--out", p(&path)]);
    assert_eq!(code(&out), 0);
    let scene = Scene::load(&path).unwrap();
    assert!(scene.primitives.is_empty());
    assert_eq!(scene.bounds.max, Vec3::new(8.0, 6.0, 4.0));
    assert!(stdout(&out).contains("occupancy 0.0000"));
}

#[test]
fn gen_world_dense_occupancy() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("dense.toml");
    let out = rmpnav(&["gen-world", "--seed", "3", "--obstacles", "200", "--out", p(&path)]);
    assert_eq!(code(&out), 0);
    let occ = EsdfGrid::bake(&Scene::load(&path).unwrap(), 0.2).unwrap().occupancy_fraction();
    assert!((0.40..=0.60).contains(&occ), "occupancy {occ}");
}

#[test]
fn rollout_exit_codes() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.toml");
    Scene::new(Aabb::cube(10.0)).save(&empty).unwrap();
    let traj = dir.path().join("traj.csv");
    let out = rmpnav(&["rollout", "--scene", p(&empty), "--start", "1,1,1", "--goal", "9,9,9", "--out", p(&traj)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("outcome SUCCESS"));
    let csv = fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("t,x,y,z,vx,vy,vz,ax,ay,az,plan_time_us"));

    // A wall of spheres across the corridor traps the map planner.
    let mut wall = Scene::new(Aabb::cube(10.0));
    for j in 0..5 {
        for k in 0..5 {
            let c = Vec3::new(5.0, 1.0 + 2.0 * j as f64, 1.0 + 2.0 * k as f64);
            wall = wall.with(Primitive::sphere(c, 1.2));
        }
    }
    let wall_path = dir.path().join("wall.toml");
    wall.save(&wall_path).unwrap();
    let out = rmpnav(&[
        "rollout",
        "--scene",
        p(&wall_path),
        "--planner",
        "esdf",
        "--start",
        "1.5,5,5",
        "--goal",
        "9,5,5",
        "--out",
        p(&traj),
    ]);
    assert_eq!(code(&out), 4, "{}", stdout(&out));

    let out = rmpnav(&[
        "rollout",
        "--scene",
        p(&empty),
        "--start",
        "1,1,1",
        "--goal",
        "9,9,9",
        "--max-time",
        "1",
        "--out",
        p(&traj),
    ]);
    assert_eq!(code(&out), 3);

    // No mission in the file and none on the command line.
    assert_eq!(code(&rmpnav(&["rollout", "--scene", p(&empty), "--out", p(&traj)])), 64);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&rmpnav(&["rollout", "--scene", p(&missing), "--out", p(&traj)])), 65);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "version = 1\nbounds = 3\n").unwrap();
    assert_eq!(code(&rmpnav(&["rollout", "--scene", p(&bad), "--out", p(&traj)])), 65);
}

#[test]
fn eval_smoke_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg_text = |out: &Path| {
        format!(
            "version = 1\nseeds = [1, 2]\ntiers = [0, 10]\nplanners = [\"esdf\", \"ray:16\"]\noutput_dir = {:?}\nrecord_timing = false\n\n[rollout]\nmax_time = 20.0\n",
            p(out)
        )
    };
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let cfg = dir.path().join(format!("{run}.toml"));
        fs::write(&cfg, cfg_text(&out_dir)).unwrap();
        let out = rmpnav(&["--workers", "2", "eval", "--config", p(&cfg)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let batch = fs::read_to_string(out_dir.join("batch.csv")).unwrap();
        assert_eq!(batch.lines().count(), 5);
        assert_eq!(fs::read_to_string(out_dir.join("runs.csv")).unwrap().lines().count(), 9);
        assert!(out_dir.join("config.toml").exists());
        tables.push(batch);
    }
    assert_eq!(tables[0], tables[1]);
    for line in tables[0].lines().skip(1).filter(|l| l.starts_with("0,")) {
        assert_eq!(line.split(',').nth(3), Some("1.000000"), "{line}");
    }

    let typo = dir.path().join("typo.toml");
    fs::write(&typo, cfg_text(dir.path()).replace("max_time", "max_tme")).unwrap();
    assert_eq!(code(&rmpnav(&["eval", "--config", p(&typo)])), 65);
}

#[test]
fn bench_single_row() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = rmpnav(&["bench", "--rays-sweep", "16", "--obstacles", "20", "--out", p(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("ray,16,1,100,"));
    assert_eq!(code(&rmpnav(&["bench", "--rays-sweep", "16", "--reps", "5", "--out", p(&csv)])), 64);
}

fn replay_rows(csv: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn replay_scan_outputs() {
    let dir = TempDir::new().unwrap();
    let scene = Scene::new(Aabb::cube(10.0)).with(Primitive::cuboid(Vec3::new(6.2, 5.0, 5.0), Vec3::new(0.2, 4.0, 4.0)));
    let pose = SensorPose::at(Vec3::new(5.0, 5.0, 5.0));
    let mut scan = synthesize_scan(&scene, pose, ScanPattern::new(16, 64), 0.0, &ScanOptions::default()).unwrap();
    let wall = dir.path().join("wall.json");
    scan.save(&wall).unwrap();
    for b in &mut scan.beams {
        b.valid = false;
        b.range = INVALID_RANGE;
    }
    let blind = dir.path().join("blind.json");
    scan.save(&blind).unwrap();
    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, "{ not json").unwrap();
    let vel = dir.path().join("v.csv");
    fs::write(&vel, "vx,vy,vz\n1.0,0.0,0.0\n").unwrap();
    let out_csv = dir.path().join("policies.csv");

    let out = rmpnav(&[
        "replay-scan",
        "--scans",
        p(&wall),
        p(&corrupt),
        p(&blind),
        "--velocities",
        p(&vel),
        "--out",
        p(&out_csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipping"));
    let rows = replay_rows(&out_csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "0");
    let f: Vec<f64> = rows[0][3..6].iter().map(|x| x.parse().unwrap()).collect();
    assert!(f[0] < 0.0, "approaching the wall must decelerate, got {f:?}");
    assert_eq!(rows[1][0], "2");
    assert_eq!(rows[1][2], "0");
    assert!(rows[1][3..].iter().all(|x| x.parse::<f64>().unwrap() == 0.0));

    assert_eq!(code(&rmpnav(&["replay-scan", "--out", p(&out_csv)])), 64);
    let two = dir.path().join("two.csv");
    fs::write(&two, "vx,vy,vz\n1,0,0\n0,1,0\n").unwrap();
    assert_eq!(
        code(&rmpnav(&["replay-scan", "--scans", p(&wall), "--velocities", p(&two), "--out", p(&out_csv)])),
        65
    );
}
