use std::f64::consts::PI;

use burgers_core::colehopf::{residual_check, solve_potential, PotentialInit};
use burgers_core::fields::{curl_defect, sup_distance, DiffScheme, Grid, ScalarField};
use burgers_core::noise::TimeGrid;

/// Modified Bessel function `I_n(a)` from its power series.
fn bessel_i(n: u32, a: f64) -> f64 {
    let half = 0.5 * a;
    let mut term = (1..=n).fold(1.0, |acc, j| acc * half / j as f64);
    let mut sum = term;
    for k in 1..200 {
        term *= half * half / (k as f64 * (k + n) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

#[test]
fn cosine_potential_matches_the_bessel_series_solution() {
    // exp(−a cos x) = I₀(a) + 2 Σ (−1)ⁿ Iₙ(a) cos nx, each mode decaying as exp(−νn²t)
    let nu = 0.1;
    let amp = 0.5;
    let a = amp / (2.0 * nu);
    let g = Grid::new(1, 128, 2.0 * PI).unwrap();
    let psi0 = ScalarField::from_fn(g, |x| amp * x[0].cos());
    let tg = TimeGrid::new(0.6, 3).unwrap();
    let traj = solve_potential(&PotentialInit { psi0, nu }, &tg).unwrap();
    let coeffs: Vec<f64> = (0..40).map(|n| bessel_i(n, a)).collect();
    for (k, y) in traj.y().iter().enumerate() {
        let t = tg.time(k);
        for i in 0..g.len() {
            let x = g.coords(i)[0];
            let mut u = coeffs[0];
            let mut ux = 0.0;
            for (n, c) in coeffs.iter().enumerate().skip(1) {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let w = 2.0 * sign * c * (-nu * (n * n) as f64 * t).exp();
                u += w * (n as f64 * x).cos();
                ux -= w * n as f64 * (n as f64 * x).sin();
            }
            let expect = -2.0 * nu * ux / u;
            assert!((y.component(0).values()[i] - expect).abs() < 1e-10, "t = {t}, x = {x}");
        }
    }
}

#[test]
fn adding_a_constant_to_the_potential_changes_nothing() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let psi = ScalarField::from_fn(g, |x| 0.3 * x[0].sin() * x[1].cos() + 0.1 * (2.0 * x[1]).sin());
    let tg = TimeGrid::new(0.5, 10).unwrap();
    let base = solve_potential(&PotentialInit { psi0: psi.clone(), nu: 0.1 }, &tg).unwrap();
    let shifted = solve_potential(&PotentialInit { psi0: psi.map(|v| v + 17.5), nu: 0.1 }, &tg).unwrap();
    for (a, b) in base.y().iter().zip(shifted.y()) {
        assert!(sup_distance(a, b).unwrap() <= 1e-12);
    }
}

#[test]
fn residual_is_invariant_under_lattice_shifts() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let psi = ScalarField::from_fn(g, |x| 0.4 * (x[0] + 0.3).cos() + 0.2 * (x[1]).sin());
    let tg = TimeGrid::new(0.2, 20).unwrap();
    let shift = [7isize, -4];
    let r = |p: ScalarField| {
        let traj = solve_potential(&PotentialInit { psi0: p, nu: 0.1 }, &tg).unwrap();
        residual_check(&traj, 0.1).unwrap()
    };
    let a = r(psi.clone());
    let b = r(psi.shift(&shift));
    for (p, q) in a.iter().zip(&b) {
        assert!((p.sup - q.sup).abs() <= 1e-12, "{} vs {}", p.sup, q.sup);
    }
}

#[test]
fn residual_shrinks_at_second_order_in_the_snapshot_spacing() {
    let g = Grid::new(1, 64, 2.0 * PI).unwrap();
    let psi0 = ScalarField::from_fn(g, |x| 0.5 * x[0].cos());
    let worst = |steps: usize| {
        let tg = TimeGrid::new(0.4, steps).unwrap();
        let traj = solve_potential(&PotentialInit { psi0: psi0.clone(), nu: 0.1 }, &tg).unwrap();
        residual_check(&traj, 0.1)
            .unwrap()
            .iter()
            .map(|p| p.sup)
            .fold(0.0, f64::max)
    };
    let ratio = worst(20) / worst(40);
    assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
}

#[test]
fn two_dimensional_solution_is_curl_free() {
    let g = Grid::new(2, 64, 2.0 * PI).unwrap();
    let psi0 = ScalarField::from_fn(g, |x| 0.5 * x[0].cos() * (2.0 * x[1]).sin() + 0.3 * x[1].cos());
    let tg = TimeGrid::new(0.5, 5).unwrap();
    let traj = solve_potential(&PotentialInit { psi0, nu: 0.1 }, &tg).unwrap();
    for y in traj.y() {
        assert!(curl_defect(y, DiffScheme::Spectral).unwrap() <= 1e-10);
    }
    for d in traj.diagnostics() {
        assert!(d.curl_defect.unwrap() <= 1e-10);
    }
}
