//! Independent oracles and measured numeric checks shared by the property
//! and acceptance suites. Each check returns what it measured so callers can
//! either assert or report.

#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmpnav::geometry::{generate_world, Aabb, DistanceField, EsdfGrid, Primitive, Scene, WorldGenParams, ANALYTIC_SURFACE_EPSILON};
use rmpnav::policies::{attractor, lidar_policy, obstacle_ray_policy, ray_policy, ObstacleParams, Preset};
use rmpnav::raycast::{raycast, synthesize_scan, RayBundle, ScanOptions, ScanPattern, SensorPose};
use rmpnav::{combine, Policy, RobotState, Vec3};

pub const RES: f64 = 0.2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn world(seed: u64, n: usize) -> Scene {
    generate_world(seed, &WorldGenParams::with_obstacles(n)).unwrap().scene
}

/// `n` states with clearance above `clearance`, speeds in `[0, 3)` m/s.
pub fn free_states(scene: &Scene, n: usize, clearance: f64, seed: u64) -> Vec<RobotState> {
    let mut rng = rng(seed);
    let b = scene.bounds;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = Vec3::new(
            rng.gen_range(b.min.x..b.max.x),
            rng.gen_range(b.min.y..b.max.y),
            rng.gen_range(b.min.z..b.max.z),
        );
        let v = unit(&mut rng) * rng.gen_range(0.0..3.0);
        if scene.distance(&x, 0.0) > clearance {
            out.push(RobotState::new(x, v));
        }
    }
    out
}

/// Per-hit obstacle policy written out term by term.
fn hand_policy(v: &Vec3, away: &Vec3, d: f64, p: &ObstacleParams) -> (Matrix3<f64>, Vector3<f64>) {
    let f_rep = away * (p.eta_rep * (-d / p.nu_rep).exp());
    let approach = (-v.dot(away)).max(0.0);
    let f_damp = away * (p.eta_damp / (d / p.nu_damp + p.epsilon) * approach * approach);
    let n = f_damp.norm();
    let h = n + p.c * (1.0 + (-2.0 * p.c * n).exp()).ln();
    let s = f_damp / h;
    let w = if d < p.radius { (1.0 - d / p.radius).powi(2) } else { 0.0 };
    (s * s.transpose() * w, f_rep + f_damp)
}

/// Sequential loop over every ray: cast, evaluate, accumulate `ΣA` and
/// `ΣAf`, then apply an SVD pseudoinverse.
pub fn brute_force_ray_policy<F: DistanceField + ?Sized>(state: &RobotState, field: &F, dirs: &[Vec3], p: &ObstacleParams, max_range: f64) -> Policy {
    let mut sum_a = Matrix3::zeros();
    let mut sum_af = Vector3::zeros();
    for dir in dirs {
        let Some(d) = raycast(field, &state.position, dir, max_range.min(p.radius)) else {
            continue;
        };
        let (a, f) = hand_policy(&state.velocity, &-dir, d, p);
        sum_a += a;
        sum_af += a * f;
    }
    let svd = sum_a.svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return Policy::new(Vec3::zeros(), sum_a);
    }
    let pinv = svd.pseudo_inverse(1e-8 * smax).unwrap();
    Policy::new(pinv * sum_af, sum_a)
}

/// Error of `a` against `b`, relative to `max(1, ‖b‖)` per component.
pub fn policy_error(a: &Policy, b: &Policy) -> f64 {
    let ef = (a.accel() - b.accel()).norm() / b.accel().norm().max(1.0);
    let ea = (a.metric() - b.metric()).norm() / b.metric().norm().max(1.0);
    ef.max(ea)
}

/// Worst error of the parallel raycast policy against the brute-force loop
/// over `states` on a baked grid.
pub fn ray_policy_oracle_error(n_rays: usize, n_states: usize, seed: u64) -> f64 {
    let scene = world(seed, 100);
    let grid = EsdfGrid::bake(&scene, RES).unwrap();
    let bundle = RayBundle::halton(n_rays).unwrap();
    let p = Preset::StaticMap.params().obstacle;
    free_states(&scene, n_states, 0.2, seed + 1)
        .iter()
        .map(|s| {
            let fast = ray_policy(s, &grid, &bundle, &p, 20.0);
            let slow = brute_force_ray_policy(s, &grid, bundle.directions(), &p, 20.0);
            policy_error(&fast, &slow)
        })
        .fold(0.0, f64::max)
}

/// Worst error of the scan policy on synthesized scans against the raycast
/// policy with the scan's beam directions.
pub fn lidar_vs_ray_error(n_states: usize, seed: u64) -> f64 {
    let scene = world(seed, 100);
    let pattern = ScanPattern::new(16, 64);
    let dirs: Vec<Vec3> = (0..pattern.rows)
        .flat_map(|r| (0..pattern.cols).map(move |c| pattern.direction(r, c)))
        .collect();
    let bundle = RayBundle::from_directions(dirs).unwrap();
    let p = Preset::Lidar.params().obstacle;
    free_states(&scene, n_states, 0.3, seed + 2)
        .iter()
        .map(|s| {
            let scan = synthesize_scan(&scene, SensorPose::at(s.position), pattern, 0.0, &ScanOptions::default()).unwrap();
            let from_scan = lidar_policy(&s.velocity, &scan, &p, 0.0);
            let from_rays = ray_policy(s, &scene, &bundle, &p, 20.0);
            policy_error(&from_scan, &from_rays)
        })
        .fold(0.0, f64::max)
}

pub fn random_obstacle_params(rng: &mut ChaCha8Rng) -> ObstacleParams {
    ObstacleParams {
        eta_rep: rng.gen_range(0.1..200.0),
        nu_rep: rng.gen_range(0.1..3.0),
        eta_damp: rng.gen_range(0.1..200.0),
        nu_damp: rng.gen_range(0.1..3.0),
        epsilon: 1e-6,
        radius: rng.gen_range(0.5..3.0),
        c: rng.gen_range(0.05..2.0),
    }
}

/// Number of non-PSD metrics among `n` random single-ray, attractor and
/// combined evaluations.
pub fn psd_failures(n: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut failures = 0;
    for _ in 0..n {
        let p = random_obstacle_params(&mut rng);
        let v = unit(&mut rng) * rng.gen_range(0.0..10.0);
        let policies: Vec<Policy> = (0..4).map(|_| obstacle_ray_policy(&v, &unit(&mut rng), rng.gen_range(0.0..4.0), &p)).collect();
        let state = RobotState::new(Vec3::new(rng.gen_range(-5.0..5.0), 0.0, 0.0), v);
        let goal = unit(&mut rng) * rng.gen_range(0.0..10.0);
        let attr = attractor(&state, &goal, &Preset::StaticMap.params().attractor);
        let mut all = policies.clone();
        all.push(attr);
        let combined = combine(&all);
        failures += policies.iter().chain([&attr, &combined]).filter(|p| !p.is_psd()).count();
    }
    failures
}

/// Central difference of the analytic scene distance.
fn scene_gradient(scene: &Scene, x: &Vec3) -> Vec3 {
    let h = 1e-5;
    let mut g = Vec3::zeros();
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        g[k] = (scene.distance(&(x + e), 0.0) - scene.distance(&(x - e), 0.0)) / (2.0 * h);
    }
    g
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EsdfReport {
    pub points: usize,
    /// Worst `|grid − scene|` distance (m).
    pub max_distance_error: f64,
    /// Points where the gradient comparison applies.
    pub gradient_points: usize,
    pub max_gradient_angle_deg: f64,
}

/// Angle (deg) between the analytic gradients at `x` and at its six
/// neighbours `±h` along each axis.
fn gradient_spread_deg(scene: &Scene, x: &Vec3, h: f64) -> f64 {
    let g = scene_gradient(scene, x);
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut e = Vec3::zeros();
            e[k] = sign * h;
            let n = scene_gradient(scene, &(x + e));
            let cos = (n.dot(&g) / (n.norm() * g.norm())).clamp(-1.0, 1.0);
            worst = worst.max(cos.acos().to_degrees());
        }
    }
    worst
}

/// ESDF lookup against the analytic scene at `n` random points at least two
/// voxels inside the grid. Gradients are compared at points farther than two
/// voxels from any surface whose analytic gradient is smooth across the
/// two-voxel lookup stencil; next to a medial ridge the true field has no
/// single gradient to compare against.
pub fn esdf_vs_scene(scene: &Scene, n: usize, seed: u64) -> EsdfReport {
    let grid = EsdfGrid::bake(scene, RES).unwrap();
    let mut rng = rng(seed);
    let b = grid.bounds().padded(-2.0 * RES);
    let mut r = EsdfReport::default();
    while r.points < n {
        let x = Vec3::new(
            rng.gen_range(b.min.x..b.max.x),
            rng.gen_range(b.min.y..b.max.y),
            rng.gen_range(b.min.z..b.max.z),
        );
        let truth = scene.distance(&x, 0.0);
        let sample = grid.lookup(&x);
        r.max_distance_error = r.max_distance_error.max((sample.distance - truth).abs());
        r.points += 1;
        if truth <= 2.0 * RES || sample.degenerate || gradient_spread_deg(scene, &x, 2.0 * RES) > GRADIENT_SMOOTHNESS_DEG {
            continue;
        }
        let g = scene_gradient(scene, &x);
        let cos = (sample.gradient.dot(&g) / g.norm()).clamp(-1.0, 1.0);
        r.max_gradient_angle_deg = r.max_gradient_angle_deg.max(cos.acos().to_degrees());
        r.gradient_points += 1;
    }
    r
}

/// Largest change of the analytic gradient across the lookup stencil for a
/// point to count as away from ridges.
pub const GRADIENT_SMOOTHNESS_DEG: f64 = 10.0;

pub fn sphere_scene(seed: u64, n: usize) -> Scene {
    let mut rng = rng(seed);
    let mut scene = Scene::new(Aabb::cube(10.0));
    for _ in 0..n {
        let c = Vec3::new(rng.gen_range(1.0..9.0), rng.gen_range(1.0..9.0), rng.gen_range(1.0..9.0));
        scene = scene.with(Primitive::sphere(c, rng.gen_range(0.3..1.2)));
    }
    scene
}

/// Closed-form first intersection of a ray with a union of spheres: the
/// distance, the index of the sphere hit, and the cosine of the incidence
/// angle.
pub fn analytic_sphere_hit(scene: &Scene, origin: &Vec3, dir: &Vec3) -> Option<(f64, usize, f64)> {
    scene
        .primitives
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let rmpnav::geometry::Shape::Sphere { radius } = p.shape else {
                return None;
            };
            let oc = origin - p.center;
            let b = oc.dot(dir);
            let disc = b * b - (oc.norm_squared() - radius * radius);
            let t = -b - disc.max(0.0).sqrt();
            (disc >= 0.0 && t >= 0.0).then(|| (t, i, disc.sqrt() / radius))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Smallest distance from the segment `[o, o + t·dir]` to any sphere other
/// than `skip`.
fn segment_clearance(scene: &Scene, o: &Vec3, dir: &Vec3, t: f64, skip: usize) -> f64 {
    scene
        .primitives
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .filter_map(|(_, p)| match p.shape {
            rmpnav::geometry::Shape::Sphere { radius } => {
                let s = (p.center - o).dot(dir).clamp(0.0, t);
                Some((o + dir * s - p.center).norm() - radius)
            }
            _ => None,
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RaycastReport {
    pub rays: usize,
    /// Rays passing closer than the tolerance to another sphere before the
    /// analytic hit, or striking their sphere at more than 60° from normal.
    pub grazing: usize,
    /// Worst hit-distance error on the grid over non-grazing rays (m).
    pub max_grid_error: f64,
    /// Worst analytic distance from any grid hit point to a surface (m).
    pub max_grid_surface_offset: f64,
    /// Grid hits beyond the analytic hit by more than the tolerance.
    pub grid_overshoots: usize,
    /// Worst hit-distance error on the analytic scene over non-grazing rays (m).
    pub max_scene_error: f64,
    /// Rays where a trace misses although the oracle hits.
    pub misses: usize,
}

impl RaycastReport {
    pub fn grid_tolerance() -> f64 {
        0.5 * RES + 2.0 * RES
    }

    pub fn passes(&self) -> bool {
        let tol = Self::grid_tolerance();
        self.misses == 0
            && self.grid_overshoots == 0
            && self.max_grid_error <= tol
            && self.max_grid_surface_offset <= tol
            && self.max_scene_error <= 2.0 * ANALYTIC_SURFACE_EPSILON
    }
}

/// Random rays from free points, each aimed near a random sphere's center so
/// it hits, traced on the baked grid and the analytic scene and compared with
/// the closed-form intersection.
///
/// A grid trace stops once the field drops below its surface epsilon, so a
/// ray grazing another sphere within the tolerance may legitimately stop
/// there. Such rays are checked for landing on a real surface and never
/// overshooting the analytic hit; all others must match it.
pub fn raycast_vs_analytic(n: usize, seed: u64) -> RaycastReport {
    let scene = sphere_scene(seed, 12);
    let grid = EsdfGrid::bake(&scene, RES).unwrap();
    let tol = RaycastReport::grid_tolerance();
    let mut rng = rng(seed + 7);
    let mut r = RaycastReport::default();
    while r.rays < n {
        let o = Vec3::new(rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5));
        if scene.distance(&o, 0.0) < 0.5 {
            continue;
        }
        let target = scene.primitives[rng.gen_range(0..scene.primitives.len())].center + unit(&mut rng) * 0.1;
        let dir = (target - o).normalize();
        let Some((t, hit, cos_incidence)) = analytic_sphere_hit(&scene, &o, &dir) else {
            continue;
        };
        r.rays += 1;
        let grazing = segment_clearance(&scene, &o, &dir, t, hit) <= tol || cos_incidence < 0.5;
        r.grazing += grazing as usize;
        match raycast(&grid, &o, &dir, 20.0) {
            Some(g) => {
                let offset = scene.distance(&(o + dir * g), 0.0).abs();
                r.max_grid_surface_offset = r.max_grid_surface_offset.max(offset);
                r.grid_overshoots += (g > t + tol) as usize;
                if !grazing {
                    r.max_grid_error = r.max_grid_error.max((g - t).abs());
                }
            }
            None => r.misses += 1,
        }
        match raycast(&scene, &o, &dir, 20.0) {
            Some(s) if !grazing => r.max_scene_error = r.max_scene_error.max((s - t).abs()),
            Some(_) => {}
            None => r.misses += 1,
        }
    }
    r
}

/// Whether the grids baked for the given seeds and tiers all satisfy the
/// neighbour Lipschitz bound.
pub fn lipschitz_holds(seeds: &[u64], tiers: &[usize]) -> bool {
    seeds
        .iter()
        .flat_map(|&s| tiers.iter().map(move |&t| (s, t)))
        .all(|(s, t)| EsdfGrid::bake(&world(s, t), RES).unwrap().satisfies_lipschitz())
}

pub fn random_policy(rng: &mut ChaCha8Rng) -> Policy {
    let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let a = m * m.transpose() + Matrix3::identity() * 0.1;
    Policy::new(unit(rng) * rng.gen_range(0.0..10.0), a)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CombineReport {
    pub permutation: f64,
    pub zero_metric: f64,
    pub scale_f: f64,
    pub scale_a: f64,
    pub associativity: f64,
}

impl CombineReport {
    pub fn passes(&self) -> bool {
        self.permutation <= 1e-6 && self.zero_metric <= 1e-9 && self.scale_f <= 1e-6 && self.scale_a <= 1e-6 && self.associativity <= 1e-6
    }
}

/// Worst relative deviations from the combination invariances over `n`
/// random trials.
pub fn combine_invariances(n: usize, seed: u64) -> CombineReport {
    let mut rng = rng(seed);
    let mut r = CombineReport::default();
    let rel = |a: &Vec3, b: &Vec3| (a - b).norm() / b.norm().max(1.0);
    for _ in 0..n {
        let k = rng.gen_range(2..8);
        let ps: Vec<Policy> = (0..k).map(|_| random_policy(&mut rng)).collect();
        let base = combine(&ps);
        let mut shuffled = ps.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let perm = combine(&shuffled);
        r.permutation = r.permutation.max(rel(&perm.accel(), &base.accel()));

        let mut padded = ps.clone();
        for _ in 0..rng.gen_range(1..5) {
            padded.insert(rng.gen_range(0..=padded.len()), Policy::new(unit(&mut rng) * 100.0, Matrix3::zeros()));
        }
        let z = combine(&padded);
        let dz = rel(&z.accel(), &base.accel()).max((z.metric() - base.metric()).norm() / base.metric().norm());
        r.zero_metric = r.zero_metric.max(dz);

        let s = rng.gen_range(0.01..100.0);
        let scaled: Vec<Policy> = ps.iter().map(|p| Policy::new(p.accel(), p.metric() * s)).collect();
        let c = combine(&scaled);
        r.scale_f = r.scale_f.max(rel(&c.accel(), &base.accel()));
        r.scale_a = r.scale_a.max((c.metric() - base.metric() * s).norm() / (base.metric() * s).norm());

        let first = combine(&ps[..2]);
        let mut nested = vec![first];
        nested.extend_from_slice(&ps[2..]);
        r.associativity = r.associativity.max(rel(&combine(&nested).accel(), &base.accel()));
    }
    r
}
