use std::f64::consts::PI;

use burgers_core::fields::{
    advect, curl_defect, divergence, estimate_holder, gradient, interpolate, laplacian,
    sup_distance, DiffScheme, Discretization, FieldError, Grid, ScalarField, VectorField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: Grid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ScalarField::new(grid, vals).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn central_differences_converge_at_second_order() {
    // f = exp(sin x), f' = cos x · exp(sin x)
    let err = |n: usize, scheme: DiffScheme| {
        let g = Grid::new(1, n, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin().exp());
        let exact: Vec<f64> = (0..n)
            .map(|i| {
                let x = g.coords(i)[0];
                x.cos() * x.sin().exp()
            })
            .collect();
        max_abs_diff(gradient(&f, scheme).unwrap().component(0).values(), &exact)
    };
    let ratio = err(128, DiffScheme::Central2) / err(256, DiffScheme::Central2);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    assert!(err(256, DiffScheme::Spectral) < 1e-12);
    let h = 2.0 * PI / 256.0;
    assert!(err(256, DiffScheme::Central2) < 2.0 * h * h);
}

#[test]
fn laplacian_of_sine_product_is_eigenvalue_times_field() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let f = ScalarField::from_fn(g, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).sin());
    let lap = laplacian(&f, DiffScheme::Spectral).unwrap();
    let expected: Vec<f64> = f.values().iter().map(|v| -13.0 * v).collect();
    assert!(max_abs_diff(lap.values(), &expected) < 1e-10);
}

#[test]
fn laplacian_is_divergence_of_gradient() {
    for d in 1..=3 {
        let n = if d == 3 { 16 } else { 32 };
        let g = Grid::new(d, n, 3.0).unwrap();
        let f = random_field(g, d as u64);
        let lap = laplacian(&f, DiffScheme::Spectral).unwrap();
        let dg = divergence(&gradient(&f, DiffScheme::Spectral).unwrap(), DiffScheme::Spectral).unwrap();
        let scale = lap.sup_norm().max(1.0);
        assert!(max_abs_diff(lap.values(), dg.values()) <= 1e-10 * scale, "d = {d}");
    }
}

#[test]
fn advect_of_sine_by_itself_is_half_double_sine() {
    let g = Grid::new(1, 64, 2.0 * PI).unwrap();
    let y = VectorField::from_fn(g, |x| vec![x[0].sin()]);
    let out = advect(&y, &y, Discretization::spectral()).unwrap();
    let expected: Vec<f64> = (0..64).map(|i| 0.5 * (2.0 * g.coords(i)[0]).sin()).collect();
    assert!(max_abs_diff(out.component(0).values(), &expected) < 1e-13);
}

#[test]
fn advect_matches_pointwise_formula_in_two_dimensions() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let v = VectorField::from_fn(g, |x| vec![x[1].cos(), 0.5 * x[0].sin()]);
    let y = VectorField::from_fn(g, |x| vec![(x[0] + x[1]).sin(), (2.0 * x[0]).cos()]);
    let out = advect(&v, &y, Discretization { scheme: DiffScheme::Spectral, dealias: false }).unwrap();
    for i in (0..g.len()).step_by(37) {
        let [a, b, _] = g.coords(i);
        let (v0, v1) = (b.cos(), 0.5 * a.sin());
        let e0 = v0 * (a + b).cos() + v1 * (a + b).cos();
        let e1 = v0 * (-2.0 * (2.0 * a).sin());
        assert!((out.component(0).values()[i] - e0).abs() < 1e-12);
        assert!((out.component(1).values()[i] - e1).abs() < 1e-12);
    }
}

#[test]
fn advect_is_linear_in_the_transported_field() {
    let g = Grid::new(2, 16, 1.0).unwrap();
    let v = VectorField::new(vec![random_field(g, 1), random_field(g, 2)]).unwrap();
    let y1 = VectorField::new(vec![random_field(g, 3), random_field(g, 4)]).unwrap();
    let y2 = VectorField::new(vec![random_field(g, 5), random_field(g, 6)]).unwrap();
    for disc in [Discretization::spectral(), Discretization::central2(), Discretization::central4()] {
        let lhs = advect(&v, &y1.scale(2.0).axpy(-3.0, &y2).unwrap(), disc).unwrap();
        let rhs = advect(&v, &y1, disc)
            .unwrap()
            .scale(2.0)
            .axpy(-3.0, &advect(&v, &y2, disc).unwrap())
            .unwrap();
        assert!(sup_distance(&lhs, &rhs).unwrap() < 1e-9 * rhs.sup_norm().max(1.0));
    }
}

#[test]
fn rotational_field_has_the_analytic_curl() {
    // y = (−x₂', x₁') b(r) with b a Gaussian: curl = 2b + r b'(r)
    let g = Grid::new(2, 64, 2.0 * PI).unwrap();
    let c = PI;
    let s2 = 0.25f64;
    let y = VectorField::from_fn(g, |x| {
        let (u, v) = (x[0] - c, x[1] - c);
        let b = (-(u * u + v * v) / (2.0 * s2)).exp();
        vec![-v * b, u * b]
    });
    let defect = curl_defect(&y, DiffScheme::Spectral).unwrap();
    // the maximum of 2b + r b' = b (2 − r²/σ²) is 2 at the center
    assert!((defect - 2.0).abs() < 1e-6, "defect {defect}");
}

#[test]
fn zero_field_has_no_curl_and_one_dimension_is_rejected() {
    let g = Grid::new(2, 16, 1.0).unwrap();
    assert_eq!(curl_defect(&VectorField::zeros(g), DiffScheme::Spectral).unwrap(), 0.0);
    let g1 = Grid::new(1, 16, 1.0).unwrap();
    assert!(matches!(
        curl_defect(&VectorField::zeros(g1), DiffScheme::Spectral),
        Err(FieldError::UnsupportedDimension(1))
    ));
}

#[test]
fn interpolation_error_is_second_order() {
    let f = |x: f64, y: f64| (x).sin() * (2.0 * y).cos();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<[f64; 2]> = (0..50)
        .map(|_| [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)])
        .collect();
    let err = |n: usize| {
        let g = Grid::new(2, n, 2.0 * PI).unwrap();
        let field = VectorField::from_fn(g, |x| vec![f(x[0], x[1]), 0.0]);
        points
            .iter()
            .map(|p| (interpolate(&field, p).unwrap()[0] - f(p[0], p[1])).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(32) / err(128);
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

#[test]
fn interpolation_on_an_edge_of_a_linear_field_averages_endpoints() {
    let g = Grid::new(2, 16, 1.0).unwrap();
    let field = VectorField::from_fn(g, |x| vec![3.0 * x[0] + 1.0, 0.0]);
    let h = g.spacing();
    let got = interpolate(&field, &[2.5 * h, 4.0 * h]).unwrap()[0];
    let expected = 0.5 * ((3.0 * 2.0 * h + 1.0) + (3.0 * 3.0 * h + 1.0));
    assert!((got - expected).abs() < 1e-14);
}

#[test]
fn holder_exponent_of_square_root_cusp() {
    let g = Grid::new(1, 1024, 1.0).unwrap();
    let f = ScalarField::from_fn(g, |x| (x[0] - 0.5).abs().sqrt());
    let est = estimate_holder(&f).unwrap();
    assert!((est.exponent - 0.5).abs() < 0.05, "exponent {}", est.exponent);
    assert!(est.scales_used.len() >= 3);
    assert!(est.constant >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradients_are_curl_free(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32])) {
        let g = Grid::new(2, n, 2.0).unwrap();
        let psi = random_field(g, seed);
        let y = gradient(&psi, DiffScheme::Spectral).unwrap();
        prop_assert!(curl_defect(&y, DiffScheme::Spectral).unwrap() <= 1e-10);
    }

    #[test]
    fn interpolation_reproduces_nodes(seed in any::<u64>(), node in 0usize..256) {
        let g = Grid::new(2, 16, 1.5).unwrap();
        let field = VectorField::new(vec![random_field(g, seed), random_field(g, seed ^ 1)]).unwrap();
        let x = g.coords(node);
        let got = interpolate(&field, &x[..2]).unwrap();
        prop_assert_eq!(got, field.at(node));
    }

    #[test]
    fn shifts_commute_with_spectral_derivatives(seed in any::<u64>(), s0 in -8isize..8, s1 in -8isize..8) {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let f = random_field(g, seed);
        let a = gradient(&f.shift(&[s0, s1]), DiffScheme::Spectral).unwrap();
        let b = gradient(&f, DiffScheme::Spectral).unwrap().shift(&[s0, s1]);
        prop_assert!(sup_distance(&a, &b).unwrap() < 1e-11);
    }
}
