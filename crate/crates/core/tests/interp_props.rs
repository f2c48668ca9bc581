mod common;

use common::Draws;
use picardnets::interp::*;
use picardnets::Activation;
use proptest::prelude::*;

fn random_grid(draws: &Draws) -> (Grid, Vec<f64>) {
    let k = 1 + draws.below(40);
    let mut x = draws.range(-20.0, 0.0);
    let mut pts = vec![x];
    for _ in 0..k {
        x += draws.range(0.01, 2.0);
        pts.push(x);
    }
    let values = draws.vec(k + 1, -5.0, 5.0);
    (Grid::new(pts).unwrap(), values)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn relu_interpolant_matches_lin_interp(seed in any::<u64>()) {
        let draws = Draws::new(seed, 41);
        let (grid, values) = random_grid(&draws);
        let net = interp_net_relu(&grid, &values).unwrap();
        let (lo, hi) = (grid.points()[0] - 10.0, grid.points()[grid.cells()] + 10.0);
        for _ in 0..200 {
            let x = draws.range(lo, hi);
            let got = net.realize_scalar(&Activation::Relu, &[x]).unwrap();
            prop_assert!((got - lin_interp(&grid, &values, x)).abs() <= 1e-10);
        }
    }

    #[test]
    fn leaky_interpolant_matches_lin_interp(seed in any::<u64>(), alpha in 0.0f64..0.95) {
        let draws = Draws::new(seed, 43);
        let (grid, values) = random_grid(&draws);
        let act = Activation::LeakyRelu(alpha);
        let net = interp_net(&grid, &values, &act).unwrap();
        for _ in 0..100 {
            let x = draws.range(grid.points()[0] - 5.0, grid.points()[grid.cells()] + 5.0);
            let got = net.realize_scalar(&act, &[x]).unwrap();
            prop_assert!((got - lin_interp(&grid, &values, x)).abs() <= 1e-9, "{} at {}", got, x);
        }
    }

    #[test]
    fn modulus_is_subadditive(seed in any::<u64>()) {
        let draws = Draws::new(seed, 47);
        let samples: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
        let f = |x: f64| (3.0 * x).sin() + x.abs();
        let h1 = 0.01 * (1 + draws.below(40)) as f64;
        let h2 = 0.01 * (1 + draws.below(40)) as f64;
        let w = |h: f64| empirical_modulus(f, &samples, h + 1e-9);
        prop_assert!(w(h1 + h2) <= w(h1) + w(h2) + 1e-12);
        prop_assert!(w(h1) <= 4.0 * (h1 + 1e-9));
    }
}

#[test]
fn relu_interpolant_is_exact_at_knots() {
    let draws = Draws::new(5, 53);
    for _ in 0..20 {
        let (grid, values) = random_grid(&draws);
        let net = interp_net_relu(&grid, &values).unwrap();
        for (x, v) in grid.points().iter().zip(&values) {
            assert!((net.realize_scalar(&Activation::Relu, &[*x]).unwrap() - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}

#[test]
fn leaky_zero_slope_agrees_with_relu() {
    let draws = Draws::new(6, 59);
    let (grid, values) = random_grid(&draws);
    let relu = interp_net_relu(&grid, &values).unwrap();
    let leaky = interp_net(&grid, &values, &Activation::LeakyRelu(0.0)).unwrap();
    for _ in 0..500 {
        let x = draws.range(-40.0, 100.0);
        let a = relu.realize_scalar(&Activation::Relu, &[x]).unwrap();
        let b = leaky.realize_scalar(&Activation::LeakyRelu(0.0), &[x]).unwrap();
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn uniform_interpolant_error_and_lipschitz() {
    let f = LipschitzFn::named("sin").unwrap();
    let (net, g) = approx_net_relu(&f, 2.0, 0.1).unwrap();
    g.check().unwrap();
    assert_eq!(g.k, 400);
    assert_eq!(g.params_bound, 4800.0);
    let pts: Vec<f64> = (0..10_000).map(|i| -g.b + 2.0 * g.b * i as f64 / 9999.0).collect();
    let r = |x: f64| net.realize_scalar(&Activation::Relu, &[x]).unwrap();
    let sup = pts.iter().map(|&x| (r(x) - x.sin()).abs()).fold(0.0, f64::max);
    assert!(sup <= g.core_error * (1.0 + 1e-9), "{sup} > {}", g.core_error);
    let pairs: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    assert!(max_difference_quotient(r, &pairs) <= 1.0 + 1e-9);
}

#[test]
fn softplus_of_the_zero_function_is_zero() {
    let zero = LipschitzFn::new(|_| 0.0, 0.0).unwrap();
    let (net, g) = approx_net_softplus(&zero, 2.0, 0.5).unwrap();
    g.check().unwrap();
    for x in [-1e3, -3.0, 0.0, 2.5, 1e3] {
        assert!(net.realize_scalar(&Activation::Softplus, &[x]).unwrap().abs() <= 1e-12);
    }
}

#[test]
fn softplus_interpolant_is_close() {
    let draws = Draws::new(7, 61);
    let (grid, values) = random_grid(&draws);
    let net = interp_net(&grid, &values, &Activation::Softplus).unwrap();
    let slope = values
        .windows(2)
        .zip(grid.points().windows(2))
        .map(|(v, x)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
        .fold(0.0, f64::max);
    let h_min = grid.points().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    // Each kink contributes at most |c_k| ln 2 / β with β = 64 / h_min.
    let bound = 2.0 * slope * (grid.cells() + 1) as f64 * std::f64::consts::LN_2 * h_min / 64.0;
    for _ in 0..500 {
        let x = draws.range(-30.0, 90.0);
        let got = net.realize_scalar(&Activation::Softplus, &[x]).unwrap();
        assert!((got - lin_interp(&grid, &values, x)).abs() <= bound + 1e-12);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Grid::new(vec![0.0, 0.0]).is_err());
    assert!(Grid::new(vec![1.0]).is_err());
    let f = LipschitzFn::named("cos").unwrap();
    assert!(approx_net_relu(&f, 1.0, 0.1).is_err());
    assert!(approx_net_relu(&f, 2.0, 0.0).is_err());
    assert!(approx_net(&f, 2.0, 0.1, &Activation::Repu(2)).is_err());
    assert!(LipschitzFn::named("exp").is_err());
}
