use hyperdiff::closed_forms::{heat_kernel, telegraph_variance};
use hyperdiff::grid::l1_distance;
use hyperdiff::particles::{histogram, simulate, InitialDistribution};
use hyperdiff::telegraph::{march, max_stable_dt, TelegraphState};
use hyperdiff::{Field, Grid1D, ModelParams};

const SOURCE_WIDTH: f64 = 0.02;

fn fd_reference(grid: Grid1D, params: &ModelParams, t: f64) -> Field {
    let k = params.diffusivity();
    let tau0 = SOURCE_WIDTH * SOURCE_WIDTH / (2.0 * k);
    let initial = TelegraphState::at_rest(Field::from_fn(grid, |x| heat_kernel(x, tau0, k, 0.0).unwrap()));
    march(&initial, params, t, max_stable_dt(&grid, params)).unwrap().u().clone()
}

fn mc_distance(n: usize, seed: u64, fd: &Field, params: &ModelParams, t: f64) -> f64 {
    let init = InitialDistribution::Gaussian { center: 0.0, width: SOURCE_WIDTH };
    let e = simulate(n, &init, params, t, seed).unwrap();
    l1_distance(&histogram(&e, fd.grid()), fd).unwrap()
}

#[test]
fn histogram_agrees_with_finite_differences() {
    let params = ModelParams::from_diffusivity(0.5, 0.02).unwrap();
    let grid = Grid1D::periodic(512, -1.0, 1.0).unwrap();
    let fd = fd_reference(grid, &params, 1.0);
    let d = mc_distance(100_000, 2024, &fd, &params, 1.0);
    assert!(d <= 0.05, "{d}");
}

#[test]
fn histogram_error_decays_like_inverse_root_n() {
    let params = ModelParams::from_diffusivity(0.5, 0.02).unwrap();
    let grid = Grid1D::periodic(512, -1.0, 1.0).unwrap();
    let fd = fd_reference(grid, &params, 1.0);
    let ns = [1_000usize, 10_000, 100_000];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| (0..4).map(|s| mc_distance(n, 100 + s, &fd, &params, 1.0)).sum::<f64>() / 4.0)
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((-0.65..=-0.35).contains(&slope), "{slope} {errs:?}");
}

#[test]
fn sample_variance_tracks_exact_kac_variance() {
    let params = ModelParams::from_diffusivity(0.5, 0.02).unwrap();
    let n = 200_000;
    for t in [0.25, 1.0, 4.0] {
        let e = simulate(n, &InitialDistribution::Point(0.0), &params, t, 77).unwrap();
        let exact = telegraph_variance(0.5, 0.02, t);
        // a sample variance has variance (kurtosis - 1) sigma^4 / n, and the
        // kurtosis of this walk stays below the Gaussian value 3
        let sd = exact * (2.0 / n as f64).sqrt();
        assert!((e.variance() - exact).abs() <= 4.0 * sd, "t={t}: {} vs {exact}", e.variance());
    }
}

#[test]
fn long_time_variance_is_diffusive() {
    let params = ModelParams::from_diffusivity(0.05, 0.02).unwrap();
    let t = 200.0 * params.lambda();
    let e = simulate(100_000, &InitialDistribution::Point(0.0), &params, t, 9).unwrap();
    let diffusive = 2.0 * params.diffusivity() * t;
    assert!((e.variance() / diffusive - 1.0).abs() <= 0.05);
}
