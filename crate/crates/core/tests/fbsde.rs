use std::f64::consts::PI;

use burgers_core::fbsde::{simulate_forward, uniform_bound_check, verify_point, FamilyMember, McConfig};
use burgers_core::fields::{Grid, VectorField};
use burgers_core::noise::{NoisePath, TimeGrid};
use burgers_core::solver::{solve, SolverConfig, Trajectory};

fn mc(n_paths: usize, seed: u64, antithetic: bool) -> McConfig {
    McConfig { n_paths, dt_mc: 0.01, seed, antithetic }
}

/// Trajectory whose `ŷ` snapshot at node `k` is `field(t_k)`, with no noise.
fn synthetic(grid: Grid, tg: TimeGrid, field: impl Fn(f64) -> VectorField) -> (Trajectory, NoisePath) {
    let path = NoisePath::zero(grid, tg);
    let idx: Vec<usize> = (0..=tg.n_steps()).collect();
    let snaps = idx.iter().map(|&k| field(tg.time(k))).collect();
    (Trajectory::from_snapshots(idx, snaps, &path).unwrap(), path)
}

fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var, v.len())
}

#[test]
fn driftless_paths_are_brownian() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let tg = TimeGrid::new(0.5, 50).unwrap();
    let (traj, path) = synthetic(g, tg, |_| VectorField::zeros(g));
    let nu = 0.2;
    let tau = 0.1;
    let x = [PI, 2.5];
    let ens = simulate_forward(&traj, &path, nu, tau, &x, &mc(4000, 1, false)).unwrap();
    let expect_var = 2.0 * nu * (0.5 - tau);
    for c in 0..2 {
        let (mean, var, n) = moments(ens.endpoints.iter().map(|p| p[c]));
        let n = n as f64;
        assert!((mean - x[c]).abs() <= 3.0 * (expect_var / n).sqrt(), "mean {mean}");
        let se = expect_var * (2.0 / (n - 1.0)).sqrt();
        assert!((var - expect_var).abs() <= 3.0 * se, "variance {var} vs {expect_var}");
    }
}

#[test]
fn constant_drift_moves_paths_backwards() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let tg = TimeGrid::new(0.5, 50).unwrap();
    let c = [0.8, -0.4];
    let (traj, path) = synthetic(g, tg, |_| VectorField::constant(g, &c));
    let x = [PI, PI];
    let ens = simulate_forward(&traj, &path, 1e-8, 0.0, &x, &mc(200, 2, false)).unwrap();
    for p in &ens.endpoints {
        for a in 0..2 {
            assert!((p[a] - (x[a] - c[a] * 0.5)).abs() < 1e-3);
        }
    }
}

#[test]
fn constant_data_has_no_spread() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let tg = TimeGrid::new(0.5, 50).unwrap();
    let (traj, path) = synthetic(g, tg, |_| VectorField::constant(g, &[0.3, 0.1]));
    let row = verify_point(&traj, &path, 0.1, 0.2, &[3.0, 3.0], &mc(400, 5, false)).unwrap();
    assert!(row.stderr <= 1e-14, "stderr {}", row.stderr);
    assert!(row.residual <= 1e-14);
}

/// `ŷ = ε exp(−νt) (sin x₁, 0)`: a heat solution whose drift is `O(ε)`.
fn heat_setup(eps: f64, nu: f64) -> (Grid, Trajectory, NoisePath) {
    let g = Grid::new(2, 64, 2.0 * PI).unwrap();
    let tg = TimeGrid::new(0.5, 50).unwrap();
    let (traj, path) = synthetic(g, tg, |t| {
        VectorField::from_fn(g, |x| vec![eps * (-nu * t).exp() * x[0].sin(), 0.0])
    });
    (g, traj, path)
}

#[test]
fn estimate_matches_the_heat_kernel_average() {
    // E[φ(x + √(2ν s) Z)] = ε exp(−ν s) sin x₁; the drift moves paths by at
    // most ε s, which changes the average by at most ε² s
    let eps = 0.01;
    let nu = 0.1;
    let (_, traj, path) = heat_setup(eps, nu);
    for (tau, x) in [(0.0, [1.0, 3.0]), (0.25, [2.0, 2.0]), (0.1, [4.0, 3.5])] {
        let s = 0.5 - tau;
        let row = verify_point(&traj, &path, nu, tau, &x, &mc(20000, 8, false)).unwrap();
        let oracle = eps * (-nu * s).exp() * x[0].sin();
        let err = (row.estimate[0] - oracle).abs();
        let interp = eps * (2.0 * PI / 64.0).powi(2);
        assert!(err <= 3.0 * row.stderr_components[0] + eps * eps * s + interp, "τ = {tau}: {err}");
        assert_eq!(row.estimate[1], 0.0);
    }
}

#[test]
fn antithetic_pairs_do_not_increase_the_standard_error() {
    let (_, traj, path) = heat_setup(0.2, 0.1);
    for seed in 0..10 {
        let plain = verify_point(&traj, &path, 0.1, 0.0, &[1.0, 3.0], &mc(2000, seed, false)).unwrap();
        let anti = verify_point(&traj, &path, 0.1, 0.0, &[1.0, 3.0], &mc(2000, seed, true)).unwrap();
        assert!(anti.stderr <= plain.stderr, "seed {seed}: {} > {}", anti.stderr, plain.stderr);
    }
}

#[test]
fn standard_error_scales_with_inverse_square_root_of_paths() {
    let (_, traj, path) = heat_setup(0.2, 0.1);
    let se = |m: usize| verify_point(&traj, &path, 0.1, 0.0, &[1.0, 3.0], &mc(m, 3, false)).unwrap().stderr;
    let ratio = se(1000) / se(4000);
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}

#[test]
fn estimates_do_not_depend_on_the_thread_count() {
    let (_, traj, path) = heat_setup(0.2, 0.1);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| verify_point(&traj, &path, 0.1, 0.1, &[1.0, 3.0], &mc(1000, 4, true)).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.estimate, b.estimate);
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn smooth_noise_family_stays_below_the_envelope() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let tg = TimeGrid::new(0.3, 150).unwrap();
    let nu = 0.1;
    let phi = VectorField::from_fn(g, |x| vec![0.5 * x[1].sin(), 0.5 * x[0].cos()]);
    let runs: Vec<(NoisePath, Trajectory)> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&a| {
            let profile = VectorField::from_fn(g, |x| vec![0.2 * a * x[0].cos() * x[1].sin(), 0.1 * a * x[1].cos()]);
            let fields = (0..=tg.n_steps()).map(|k| profile.scale(tg.time(k))).collect();
            let path = NoisePath::from_fields(g, tg, fields).unwrap();
            let traj = solve(&phi, &path, &SolverConfig::new(nu, tg.dt())).unwrap();
            (path, traj)
        })
        .collect();
    let family: Vec<FamilyMember<'_>> = runs
        .iter()
        .map(|(eta, traj)| FamilyMember { traj, phi: &phi, eta, nu })
        .collect();
    let verdict = uniform_bound_check(&family).unwrap();
    assert!(verdict.pass);
    for m in &verdict.members {
        assert!(m.observed <= m.envelope.unwrap());
        assert!(m.sup_eta > 0.0 && m.sup_grad_eta > 0.0);
    }
}
