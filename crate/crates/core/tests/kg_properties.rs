use hyperdiff::measures::{green_convolution_quadrature, martingale_from_kg};
use hyperdiff::spectral_kg::{
    apply_inverse_d, build_hamiltonian, build_metric, check_pseudo_hermiticity, evolve_exact, metric_inner_product,
    KGState,
};
use hyperdiff::{ComplexField, Grid1D, ModelParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn grid64() -> Grid1D {
    Grid1D::periodic(64, 0.0, TAU).unwrap()
}

fn random_field(grid: Grid1D, rng: &mut ChaCha8Rng) -> ComplexField {
    let values = (0..grid.len()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    ComplexField::new(grid, values).unwrap()
}

/// Random trigonometric polynomial with modes up to `max_mode`.
fn trig_poly(rng: &mut ChaCha8Rng, max_mode: i32) -> Vec<(i32, Complex64)> {
    (-max_mode..=max_mode)
        .map(|m| (m, Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
        .collect()
}

fn eval_poly(poly: &[(i32, Complex64)], x: f64) -> Complex64 {
    poly.iter().map(|(m, c)| c * Complex64::new(0.0, *m as f64 * x).exp()).sum()
}

#[test]
fn pseudo_hermitian_with_real_spectrum_on_parameter_grid() {
    let grid = grid64();
    for lambda in [0.5, 1.0, 2.0] {
        for mu in [0.5, 1.0, 2.0] {
            let p = ModelParams::new(lambda, 0.2, mu).unwrap();
            let h = build_hamiltonian(&grid, &p).unwrap();
            let eta = build_metric(&grid, &p).unwrap();
            let defect = check_pseudo_hermiticity(&h, &eta).unwrap();
            assert!(defect <= 1e-12, "lambda={lambda} mu={mu}: {defect}");
            for (block, d) in h.blocks().iter().zip(h.d_symbols()) {
                let mut ev = block.eigenvalues();
                ev.sort_by(|a, b| a.re.total_cmp(&b.re));
                assert!(ev.iter().all(|e| e.im.abs() <= 1e-12));
                assert!((ev[0].re + d.sqrt()).abs() <= 1e-10 && (ev[1].re - d.sqrt()).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn metric_norm_is_conserved_for_random_states() {
    let grid = grid64();
    let p = ModelParams::new(0.7, 0.2, 1.3).unwrap();
    let h = build_hamiltonian(&grid, &p).unwrap();
    let eta = build_metric(&grid, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let s = KGState::from_components(random_field(grid, &mut rng), random_field(grid, &mut rng), p.lambda()).unwrap();
        let n0 = metric_inner_product(&s, &s, &eta).unwrap();
        assert!(n0.im.abs() <= 1e-12 * n0.re && n0.re > 0.0);
        for t in [1.0, 5.0, 10.0] {
            let st = evolve_exact(&s, &h, t).unwrap();
            let nt = metric_inner_product(&st, &st, &eta).unwrap();
            assert!((nt - n0).norm() / n0.re <= 1e-10, "t={t}");
        }
    }
}

#[test]
fn plain_norm_is_not_conserved() {
    let grid = grid64();
    let p = ModelParams::new(1.0, 0.2, 1.0).unwrap();
    let h = build_hamiltonian(&grid, &p).unwrap();
    let psi = ComplexField::from_fn(grid, |x| Complex64::new(x.cos(), 0.0));
    let rate = ComplexField::zeros(grid);
    let s = KGState::from_field_and_rate(&psi, &rate, p.lambda()).unwrap();
    let n0 = s.l2_norm_sqr();
    let change = (0..20)
        .map(|i| (evolve_exact(&s, &h, 0.5 * i as f64).unwrap().l2_norm_sqr() - n0).abs() / n0)
        .fold(0.0, f64::max);
    assert!(change > 1e-6, "{change}");
}

#[test]
fn inverse_d_matches_green_quadrature() {
    let grid = grid64();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mu in [0.5, 1.0, 2.0] {
        let poly = trig_poly(&mut rng, 4);
        let f = ComplexField::from_fn(grid, |x| eval_poly(&poly, x));
        let fourier = apply_inverse_d(&f, mu).unwrap();
        // closed form: each mode is divided by m^2 + mu^2
        for (i, x) in grid.coordinates().iter().enumerate().step_by(7) {
            let direct = green_convolution_quadrature(|y| eval_poly(&poly, y), *x, mu);
            let exact: Complex64 = poly.iter().map(|(m, c)| c * Complex64::new(0.0, *m as f64 * x).exp() / (*m as f64 * *m as f64 + mu * mu)).sum();
            assert!((fourier.values()[i] - direct).norm() <= 1e-8, "mu={mu} x={x}");
            assert!((fourier.values()[i] - exact).norm() <= 1e-12);
        }
    }
}

#[test]
fn symmetric_kg_state_has_zero_martingale_defect() {
    let grid = Grid1D::periodic(128, -8.0, 8.0).unwrap();
    let p = ModelParams::new(0.8, 0.2, 1.0).unwrap();
    let psi = ComplexField::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.0));
    let rate = ComplexField::from_fn(grid, |x| Complex64::new(0.0, 0.5 * (-2.0 * x * x).exp()));
    let s = KGState::from_field_and_rate(&psi, &rate, p.lambda()).unwrap();
    let r = martingale_from_kg(&s, &p, 0.0).unwrap();
    assert!(r.defect.abs() <= 1e-10, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagator_composes(seed in any::<u64>(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let grid = Grid1D::periodic(32, 0.0, TAU).unwrap();
        let p = ModelParams::new(1.3, 0.2, 0.9).unwrap();
        let h = build_hamiltonian(&grid, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = KGState::from_components(random_field(grid, &mut rng), random_field(grid, &mut rng), p.lambda()).unwrap();
        let two = evolve_exact(&evolve_exact(&s, &h, t1).unwrap(), &h, t2).unwrap();
        let one = evolve_exact(&s, &h, t1 + t2).unwrap();
        let err: f64 = two.psi1().values().iter().zip(one.psi1().values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn metric_is_positive(lambda in 0.05f64..5.0, mu in 0.05f64..5.0) {
        let grid = Grid1D::periodic(16, 0.0, TAU).unwrap();
        let p = ModelParams::new(lambda, 0.2, mu).unwrap();
        let eta = build_metric(&grid, &p).unwrap();
        prop_assert!(eta.min_eigenvalue() > 0.0);
    }
}
