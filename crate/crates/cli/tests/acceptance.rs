//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use anyhow::{ensure, Result};
use hyperdiff::closed_forms::{heat_kernel, telegraph_variance, AnalyticDensity};
use hyperdiff::grid::{l1_distance, total_mass};
use hyperdiff::measures::{
    green_convolution_quadrature, martingale_defect, martingale_from_kg, robust_stats, Diagnostics,
};
use hyperdiff::particles::{histogram, simulate, InitialDistribution};
use hyperdiff::residuals::{bs_limit_defect, harmonic_residual, scan_lambda, GaussianTestFunction};
use hyperdiff::spectral_kg::{
    apply_inverse_d, build_hamiltonian, build_metric, check_pseudo_hermiticity, evolve_exact, metric_inner_product, KGState,
};
use hyperdiff::telegraph::{lambda_sweep, march, max_stable_dt, TelegraphState};
use hyperdiff::{Boundary, ComplexField, Field, Grid1D, ModelParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn random_field(grid: Grid1D, rng: &mut ChaCha8Rng) -> ComplexField {
    let values = (0..grid.len()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    ComplexField::new(grid, values).unwrap()
}

fn spectral_grid() -> Result<Grid1D> {
    Ok(Grid1D::periodic(64, 0.0, 2.0 * std::f64::consts::PI)?)
}

fn pseudo_hermiticity() -> Result<Verdict> {
    let grid = spectral_grid()?;
    let (mut defect, mut imag, mut spectrum) = (0.0f64, 0.0f64, 0.0f64);
    for lambda in [0.5, 1.0, 2.0] {
        for mu in [0.5, 1.0, 2.0] {
            let p = ModelParams::new(lambda, 0.2, mu)?;
            let h = build_hamiltonian(&grid, &p)?;
            defect = defect.max(check_pseudo_hermiticity(&h, &build_metric(&grid, &p)?)?);
            for (block, k) in h.blocks().iter().zip(h.wavenumbers()) {
                let mut ev = block.eigenvalues();
                ev.sort_by(|a, b| a.re.total_cmp(&b.re));
                let omega = (k * k + mu * mu).sqrt();
                imag = imag.max(ev[0].im.abs()).max(ev[1].im.abs());
                spectrum = spectrum.max((ev[0].re + omega).abs()).max((ev[1].re - omega).abs());
            }
        }
    }
    Ok(Verdict::new(
        defect <= 1e-12 && imag <= 1e-12 && spectrum <= 1e-10,
        format!("defect {defect:.1e}, max |Im ev| {imag:.1e}, spectrum error {spectrum:.1e}"),
    ))
}

fn metric_conservation() -> Result<Verdict> {
    let grid = spectral_grid()?;
    let p = ModelParams::new(0.7, 0.2, 1.3)?;
    let h = build_hamiltonian(&grid, &p)?;
    let eta = build_metric(&grid, &p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut drift = 0.0f64;
    for _ in 0..100 {
        let s = KGState::from_components(random_field(grid, &mut rng), random_field(grid, &mut rng), p.lambda())?;
        let n0 = metric_inner_product(&s, &s, &eta)?;
        let st = evolve_exact(&s, &h, 10.0)?;
        drift = drift.max((metric_inner_product(&st, &st, &eta)? - n0).norm() / n0.re);
    }
    // a state at rest trades field amplitude for rate, so its plain norm moves
    let q = ModelParams::new(1.0, 0.2, 1.0)?;
    let hq = build_hamiltonian(&grid, &q)?;
    let psi = ComplexField::from_fn(grid, |x| Complex64::new(x.cos(), 0.0));
    let s = KGState::from_field_and_rate(&psi, &ComplexField::zeros(grid), q.lambda())?;
    let n0 = s.l2_norm_sqr();
    let change = (1..=20)
        .map(|i| evolve_exact(&s, &hq, 0.5 * i as f64).map(|st| (st.l2_norm_sqr() - n0).abs() / n0))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        drift <= 1e-10 && change > 1e-6,
        format!("metric drift {drift:.1e}, plain norm change {change:.2e}"),
    ))
}

fn black_scholes_limit() -> Result<Verdict> {
    let params = ModelParams::new(0.5, 0.2, 0.0)?;
    let lambdas = [1.0, 1e-2, 1e-4];
    let psi = GaussianTestFunction { center: 0.1, width: 0.5, omega: 1.3, static_amp: 1.0, wave_amp: 0.7 };
    let fine = Grid1D::new(2001, -5.0, 5.0, Boundary::Absorbing)?;
    let mut identity = 0.0f64;
    for &l in &lambdas {
        identity = identity.max(bs_limit_defect(&psi, &params, l, &fine, 0.3)?.relative_difference);
    }
    let k = params.diffusivity();
    ensure!((k - 0.02).abs() < 1e-15, "K = sigma^2 / 2 expected");
    let grid = Grid1D::periodic(400, -2.0, 2.0)?;
    // narrow Gaussian start, i.e. the heat kernel at a small positive time
    let tau0 = 0.1f64.powi(2) / (2.0 * k);
    let initial = TelegraphState::at_rest(Field::from_fn(grid, |x| heat_kernel(x, tau0, k, 0.0).unwrap()));
    let oracle = Field::from_fn(grid, |x| heat_kernel(x, tau0 + 1.0, k, 0.0).unwrap());
    let finals = lambda_sweep(&initial, &params, &lambdas, 1.0, None)?;
    let d: Vec<f64> = finals.iter().map(|s| l1_distance(s.u(), &oracle)).collect::<Result<_, _>>()?;
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    Ok(Verdict::new(
        identity <= 1e-6 && d[2] <= 2e-2 && decreasing,
        format!("identity error {identity:.1e}, heat L1 {:.2e} / {:.2e} / {:.2e}", d[0], d[1], d[2]),
    ))
}

fn cauchy_limit() -> Result<Verdict> {
    let grid = Grid1D::new(4001, -20.0, 20.0, Boundary::Absorbing)?;
    let scan = scan_lambda(&[2.0, 4.0, 8.0, 16.0], 1.0, &grid)?;
    let harmonic = harmonic_residual(1.0, &grid)?;
    Ok(Verdict::new(
        scan.supports_inverse_square() && harmonic <= 1e-6,
        format!("slope {:.4}, fit quality {:.6}, harmonic residual {harmonic:.1e}", scan.slope, scan.fit_quality),
    ))
}

fn fd_mc_cross_validation() -> Result<Verdict> {
    let params = ModelParams::from_diffusivity(0.5, 0.02)?;
    let grid = Grid1D::periodic(512, -1.0, 1.0)?;
    let k = params.diffusivity();
    // the finite-difference point source is a Gaussian two cells wide
    let width = 0.02;
    let initial = TelegraphState::at_rest(Field::from_fn(grid, |x| heat_kernel(x, width * width / (2.0 * k), k, 0.0).unwrap()));
    let fd = march(&initial, &params, 1.0, max_stable_dt(&grid, &params))?;
    let n = 100_000;
    let mc = simulate(n, &InitialDistribution::Point(0.0), &params, 1.0, 5)?;
    let l1 = l1_distance(&histogram(&mc, &grid), fd.u())?;
    // diagnostic only: the same comparison with the particles drawn from the smoothed source
    let smooth = simulate(n, &InitialDistribution::Gaussian { center: 0.0, width }, &params, 1.0, 5)?;
    let smooth_l1 = l1_distance(&histogram(&smooth, &grid), fd.u())?;
    let reach = mc.positions().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let bound = params.wave_speed() * 1.0;

    let t = 20.0 * params.lambda();
    let long = simulate(n, &InitialDistribution::Point(0.0), &params, t, 5)?;
    let ratio = long.variance() / (2.0 * k * t);
    let exact = telegraph_variance(params.lambda(), k, t) / (2.0 * k * t);
    Ok(Verdict::new(
        l1 <= 0.05 && reach <= bound && (ratio - 1.0).abs() <= 0.05,
        format!(
            "L1 {l1:.4} (smoothed source {smooth_l1:.4}), max |x| {reach:.6} <= {bound:.6}, variance / 2Kt {ratio:.4} (exact walk {exact:.4})"
        ),
    ))
}

fn conservation_and_causality() -> Result<Verdict> {
    let grid = Grid1D::periodic(256, 0.0, 1.0)?;
    let params = ModelParams::from_diffusivity(0.5, 0.02)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u: Vec<f64> = (0..256).map(|_| 1.0 + 0.3 * rng.random::<f64>()).collect();
    let mut v: Vec<f64> = (0..256).map(|_| 0.1 * (rng.random::<f64>() - 0.5)).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let initial = TelegraphState::new(Field::new(grid, u)?, Field::new(grid, v)?, 0.0)?;
    let dt = max_stable_dt(&grid, &params);
    let out = march(&initial, &params, 1e4 * dt, dt)?;
    let m0 = total_mass(initial.u());
    let drift = (total_mass(out.u()) - m0).abs() / m0;

    let n = 201;
    let cone = Grid1D::periodic(n, 0.0, 1.0)?;
    let (centre, radius, steps) = (100usize, 3usize, 25usize);
    let bump: Vec<f64> = (0..n).map(|i| if i.abs_diff(centre) <= radius { 1.0 } else { 0.0 }).collect();
    let dt = max_stable_dt(&cone, &params);
    let spread = march(&TelegraphState::at_rest(Field::new(cone, bump)?), &params, steps as f64 * dt, dt)?;
    let outside = spread
        .u()
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(centre) > radius + steps)
        .fold(0.0f64, |m, (_, u)| m.max(u.abs()));
    Ok(Verdict::new(
        drift <= 1e-10 && outside < 1e-12,
        format!("mass drift {drift:.1e} over 1e4 steps, max outside cone {outside:.1e}"),
    ))
}

fn martingale_diagnostics() -> Result<Verdict> {
    let grid = Grid1D::periodic(128, -8.0, 8.0)?;
    let p = ModelParams::new(0.8, 0.2, 1.0)?;
    let psi = ComplexField::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.0));
    let rate_fn = |x: f64| Complex64::new(0.0, 0.5 * (-2.0 * x * x).exp());
    let rate = ComplexField::from_fn(grid, rate_fn);
    let state = KGState::from_field_and_rate(&psi, &rate, p.lambda())?;
    let symmetric = martingale_from_kg(&state, &p, 0.0)?.defect.abs();

    let wide = Grid1D::new(4001, -20.0, 20.0, Boundary::Absorbing)?;
    let mut shift_err = 0.0f64;
    for shift in [-0.7, 0.25, 1.5] {
        let r = martingale_defect(&AnalyticDensity::heat(0.5, 1.0, shift)?.sample(&wide), 0.0)?;
        shift_err = shift_err.max((r.defect - shift).abs());
    }
    // the Fourier inverse is periodic, so the quadrature integrates the periodic extension
    let fourier = apply_inverse_d(&rate, p.mu())?;
    let wrapped = |y: f64| rate_fn(-8.0 + (y + 8.0).rem_euclid(16.0));
    let green_gap = (0..grid.len())
        .step_by(8)
        .map(|i| (fourier.values()[i] - green_convolution_quadrature(wrapped, grid.coordinate(i), p.mu())).norm())
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        symmetric <= 1e-10 && shift_err <= 1e-8 && green_gap <= 1e-8,
        format!("symmetric defect {symmetric:.1e}, shift error {shift_err:.1e}, G-convolution gap {green_gap:.1e}"),
    ))
}

fn wild_vs_mild() -> Result<Verdict> {
    let g = Grid1D::new(200_001, -1000.0, 1000.0, Boundary::Absorbing)?;
    let cauchy = robust_stats(&AnalyticDensity::cauchy(1.0, 0.0)?.sample(&g), 5.0)?;
    let sd = cauchy.iqr / 1.3489795003921634;
    let gauss = robust_stats(&AnalyticDensity::heat(0.5, sd * sd, 0.0)?.sample(&g), 5.0)?;
    let moments: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&r| {
            let grid = Grid1D::new(20_001, -r, r, Boundary::Absorbing)?;
            Ok(Diagnostics::of(&AnalyticDensity::cauchy(1.0, 0.0)?.sample(&grid)).variance)
        })
        .collect::<Result<_>>()?;
    let matched = (gauss.iqr - cauchy.iqr).abs() <= 1e-2;
    Ok(Verdict::new(
        matched && cauchy.tail_mass > gauss.tail_mass && moments.windows(2).all(|w| w[1] > w[0]),
        format!(
            "tail mass beyond 5 IQR {:.3e} vs {:.3e}, truncated second moments {:.2} / {:.1} / {:.0}",
            cauchy.tail_mass, gauss.tail_mass, moments[0], moments[1], moments[2]
        ),
    ))
}

fn determinism() -> Result<Verdict> {
    let dir = tempfile::tempdir()?;
    let mut differing = Vec::new();
    for cmd in ["evolve", "kg-check", "mc", "residual-scan", "limits", "martingale"] {
        let outs = ["a", "b"].map(|tag| dir.path().join(format!("{cmd}-{tag}")));
        for out in &outs {
            let status = Command::new(env!("CARGO_BIN_EXE_hyperdiff"))
                .args([cmd, "--seed", "99", "--out"])
                .arg(out)
                .output()?
                .status;
            ensure!(status.code().is_some_and(|c| c <= 1), "{cmd} exited with {status}");
        }
        for name in result_files(&outs[0])? {
            if std::fs::read(outs[0].join(&name))? != std::fs::read(outs[1].join(&name))? {
                differing.push(format!("{cmd}/{name}"));
            }
        }
    }
    Ok(Verdict::new(differing.is_empty(), format!("differing files: {differing:?}")))
}

/// Every output except the manifest, which records wall time.
fn result_files(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name != hyperdiff_cli::output::MANIFEST_FILE {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

type Criterion = (u32, f64, fn() -> Result<Verdict>);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, 1.0, pseudo_hermiticity),
        (2, 5.0, metric_conservation),
        (3, 30.0, black_scholes_limit),
        (4, 10.0, cauchy_limit),
        (5, 60.0, fd_mc_cross_validation),
        (6, 10.0, conservation_and_causality),
        (7, 5.0, martingale_diagnostics),
        (8, 5.0, wild_vs_mild),
        (9, 60.0, determinism),
    ];
    let mut failures = 0;
    for (id, budget, check) in criteria {
        let start = Instant::now();
        let verdict = check().unwrap_or_else(|e| Verdict::new(false, format!("error: {e:#}")));
        let secs = start.elapsed().as_secs_f64();
        let passed = verdict.passed && secs < budget;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id}: {} {} ({secs:.2} s, budget {budget} s)",
            if passed { "PASS" } else { "FAIL" },
            verdict.detail
        );
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
