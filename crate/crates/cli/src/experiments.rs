//! One function per experiment. Each turns a resolved configuration into a
//! summary and zero or more result tables; file handling lives in the caller.

use anyhow::{bail, ensure, Result};
use hyperdiff::closed_forms::{telegraph_variance, AnalyticDensity};
use hyperdiff::grid::{l1_distance, total_mass};
use hyperdiff::measures::{green_convolution_quadrature, martingale_defect, martingale_from_kg};
use hyperdiff::particles::{histogram, simulate, InitialDistribution};
use hyperdiff::residuals::{
    bs_limit_defect, gauge_factor, harmonic_residual, scan_lambda, GaussianTestFunction, INVERSE_SQUARE_SLOPE,
    MIN_FIT_QUALITY,
};
use hyperdiff::spectral_kg::{
    apply_inverse_d, build_hamiltonian, build_metric, check_pseudo_hermiticity, evolve_exact, metric_inner_product,
    KGState,
};
use hyperdiff::telegraph::{self, check_stability, lambda_sweep, TelegraphState};
use hyperdiff::{Boundary, ComplexField, Field, Grid1D, ModelParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, ExperimentKind, InitialKind, InitialSpec, MartingaleDensity};
use crate::output::{Check, Summary, Table};

pub const RESULT_FILE: &str = "result.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Summary,
    /// `(file name, table)` pairs written in CSV mode.
    pub tables: Vec<(String, Table)>,
}

/// Run the experiment named in `config`. The caller has already resolved
/// the experiment kind.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let Some(kind) = config.experiment else { bail!("no experiment selected") };
    match kind {
        ExperimentKind::Evolve => evolve(config),
        ExperimentKind::KgCheck => kg_check(config),
        ExperimentKind::Mc => mc(config),
        ExperimentKind::ResidualScan => residual_scan(config),
        ExperimentKind::Limits => limits(config),
        ExperimentKind::Martingale => martingale(config),
    }
}

fn density_table(rows: impl IntoIterator<Item = (f64, Field)>) -> Table {
    let mut t = Table::new(&["tau", "x", "u"]);
    for (tau, f) in rows {
        for (x, u) in f.grid().coordinates().into_iter().zip(f.values()) {
            t.push(vec![tau, x, *u]);
        }
    }
    t
}

pub fn initial_field(spec: &InitialSpec, grid: Grid1D) -> Result<Field> {
    let (c, w) = (spec.center, spec.width);
    match spec.kind {
        InitialKind::Point => {
            let Some(i) = grid.nearest_index(c) else { bail!("initial.center {c} lies outside the grid") };
            let mut values = vec![0.0; grid.len()];
            values[i] = 1.0 / (grid.spacing() * grid.weight(i));
            Ok(Field::new(grid, values)?)
        }
        InitialKind::Gaussian => {
            ensure!(w > 0.0, "initial.width must be positive");
            let norm = 1.0 / (w * (2.0 * std::f64::consts::PI).sqrt());
            Ok(Field::from_fn(grid, |x| norm * (-(x - c).powi(2) / (2.0 * w * w)).exp()))
        }
        InitialKind::Uniform => {
            ensure!(w > 0.0, "initial.width must be positive");
            Ok(Field::from_fn(grid, |x| if (x - c).abs() <= w { 0.5 / w } else { 0.0 }))
        }
    }
}

fn particle_start(spec: &InitialSpec) -> (InitialDistribution, f64) {
    let (c, w) = (spec.center, spec.width);
    match spec.kind {
        InitialKind::Point => (InitialDistribution::Point(c), 0.0),
        InitialKind::Gaussian => (InitialDistribution::Gaussian { center: c, width: w }, w * w),
        InitialKind::Uniform => (InitialDistribution::Uniform { low: c - w, high: c + w }, w * w / 3.0),
    }
}

fn evolve(config: &ExperimentConfig) -> Result<Outcome> {
    let params = config.params.build()?;
    let grid = config.grid.build()?;
    let dt = config.time.dt.resolve(&grid, &params)?;
    let initial = TelegraphState::at_rest(initial_field(&config.initial, grid)?);
    let stride = match config.time.snapshot_every {
        0 => usize::MAX,
        n => n,
    };
    let series = telegraph::evolve(&initial, &params, config.time.tau_final, dt, stride)?;

    let report = check_stability(&grid, &params, dt);
    let mut diagnostics =
        Table::new(&["tau", "mass", "mean", "variance", "median", "negative_mass_fraction"]);
    for (tau, d) in series.times().iter().zip(series.diagnostics()) {
        diagnostics.push(vec![*tau, d.mass, d.mean, d.variance, d.median.unwrap_or(f64::NAN), d.negative_mass_fraction]);
    }
    let m0 = total_mass(initial.u());
    let (_, last) = series.last().expect("series holds the initial state");
    let m1 = total_mass(last);

    let mut s = Summary::new(ExperimentKind::Evolve.name());
    s.value("dt", dt);
    s.value("dt_max", report.dt_max);
    s.value("cfl_ratio", report.cfl_ratio);
    s.value("wave_speed", report.wave_speed);
    s.value("snapshots", series.len() as f64);
    s.value("initial_mass", m0);
    s.value("final_mass", m1);
    s.check(Check::flag("stable", report.stable));
    let table = density_table(series.times().iter().copied().zip(series.densities().iter().cloned()));
    Ok(Outcome {
        summary: s,
        tables: vec![(RESULT_FILE.into(), table), (DIAGNOSTICS_FILE.into(), diagnostics)],
    })
}

fn mc(config: &ExperimentConfig) -> Result<Outcome> {
    let params = config.params.build()?;
    let grid = config.grid.build()?;
    let t = config.time.tau_final;
    let (start, start_variance) = particle_start(&config.initial);
    let e = simulate(config.mc.particles, &start, &params, t, config.seed())?;
    let density = histogram(&e, &grid);

    let mut s = Summary::new(ExperimentKind::Mc.name());
    s.value("particles", e.len() as f64);
    s.value("speed", e.speed());
    s.value("mean", e.mean());
    s.value("variance", e.variance());
    s.value("exact_variance", start_variance + telegraph_variance(params.lambda(), params.diffusivity(), t));
    s.value("diffusive_variance", start_variance + 2.0 * params.diffusivity() * t);
    if let InitialDistribution::Point(c) = start {
        let reach = e.positions().iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
        s.value("max_excursion", reach);
        s.check(Check::flag("speed_bound", reach <= e.speed() * t));
    }
    Ok(Outcome { summary: s, tables: vec![(RESULT_FILE.into(), density_table([(t, density)]))] })
}

fn random_field(grid: Grid1D, rng: &mut ChaCha8Rng) -> Result<ComplexField> {
    let values = (0..grid.len()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    Ok(ComplexField::new(grid, values)?)
}

fn kg_check(config: &ExperimentConfig) -> Result<Outcome> {
    let kg = &config.kg;
    ensure!(kg.t_final >= 0.0, "kg.t_final must be >= 0");
    let grid = Grid1D::periodic(kg.modes, 0.0, kg.length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let (mut defect, mut imag, mut eig_err, mut drift) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut l2_change = f64::INFINITY;
    for &lambda in &kg.lambdas {
        for &mu in &kg.mus {
            let p = ModelParams::new(lambda, config.params.sigma, mu)?;
            let h = build_hamiltonian(&grid, &p)?;
            let eta = build_metric(&grid, &p)?;
            defect = defect.max(check_pseudo_hermiticity(&h, &eta)?);
            for (block, d) in h.blocks().iter().zip(h.d_symbols()) {
                let mut ev = block.eigenvalues();
                ev.sort_by(|a, b| a.re.total_cmp(&b.re));
                imag = imag.max(ev[0].im.abs()).max(ev[1].im.abs());
                eig_err = eig_err.max((ev[0].re + d.sqrt()).abs()).max((ev[1].re - d.sqrt()).abs());
            }
            for _ in 0..kg.states {
                let st = KGState::from_components(random_field(grid, &mut rng)?, random_field(grid, &mut rng)?, lambda)?;
                let n0 = metric_inner_product(&st, &st, &eta)?;
                let later = evolve_exact(&st, &h, kg.t_final)?;
                let n1 = metric_inner_product(&later, &later, &eta)?;
                drift = drift.max((n1 - n0).norm() / n0.re);
            }
            // real cosine mode at rest
            let k = 2.0 * std::f64::consts::PI / kg.length;
            let psi = ComplexField::from_fn(grid, |x| Complex64::new((k * x).cos(), 0.0));
            let rest = KGState::from_field_and_rate(&psi, &ComplexField::zeros(grid), lambda)?;
            let n0 = rest.l2_norm_sqr();
            let mut change = 0.0f64;
            for i in 1..=64 {
                let t = kg.t_final.max(1.0) * i as f64 / 64.0;
                change = change.max((evolve_exact(&rest, &h, t)?.l2_norm_sqr() - n0).abs() / n0);
            }
            l2_change = l2_change.min(change);
        }
    }
    let mut s = Summary::new(ExperimentKind::KgCheck.name());
    s.value("pseudo_hermiticity_defect", defect);
    s.value("max_eigenvalue_imag", imag);
    s.value("max_eigenvalue_error", eig_err);
    s.value("metric_norm_drift", drift);
    s.value("min_plain_norm_change", l2_change);
    s.check(Check::at_most("pseudo_hermiticity_defect", defect, 1e-12));
    s.check(Check::at_most("max_eigenvalue_imag", imag, 1e-12));
    s.check(Check::at_most("max_eigenvalue_error", eig_err, 1e-10));
    if kg.states > 0 {
        s.check(Check::at_most("metric_norm_drift", drift, 1e-10));
    }
    s.check(Check::above("min_plain_norm_change", l2_change, 1e-6));
    Ok(Outcome { summary: s, tables: Vec::new() })
}

fn scan_checks(s: &mut Summary, config: &ExperimentConfig) -> Result<Table> {
    let scan = &config.scan;
    let grid = scan.z_grid()?;
    let r = scan_lambda(&scan.lambdas, scan.tau, &grid)?;
    let floor = harmonic_residual(scan.tau, &grid)?;
    let mut table = Table::new(&["lambda", "residual"]);
    for (l, res) in r.lambdas.iter().zip(&r.residuals) {
        table.push(vec![*l, *res]);
    }
    s.value("slope", r.slope);
    s.value("intercept", r.intercept);
    s.value("fit_quality", r.fit_quality);
    s.value("harmonic_floor", floor);
    let (lo, hi) = INVERSE_SQUARE_SLOPE;
    s.check(Check::within("slope", r.slope, lo, hi));
    s.check(Check::at_least("fit_quality", r.fit_quality, MIN_FIT_QUALITY));
    s.check(Check::at_most("harmonic_floor", floor, 1e-6));
    Ok(table)
}

fn residual_scan(config: &ExperimentConfig) -> Result<Outcome> {
    let mut s = Summary::new(ExperimentKind::ResidualScan.name());
    let table = scan_checks(&mut s, config)?;
    Ok(Outcome { summary: s, tables: vec![(RESULT_FILE.into(), table)] })
}

fn limits(config: &ExperimentConfig) -> Result<Outcome> {
    let lim = &config.limits;
    ensure!(!lim.lambdas.is_empty(), "limits.lambdas must not be empty");
    let params = config.params.build()?;
    let mut s = Summary::new(ExperimentKind::Limits.name());

    // small lambda, operator form
    let psi = GaussianTestFunction { center: 0.1, width: 0.5, omega: lim.omega, static_amp: 1.0, wave_amp: 0.7 };
    let x_grid = Grid1D::new(2001, -5.0, 5.0, Boundary::Absorbing)?;
    let mut worst = 0.0f64;
    for &lambda in &lim.lambdas {
        worst = worst.max(bs_limit_defect(&psi, &params, lambda, &x_grid, 0.3)?.relative_difference);
    }
    let l0 = lim.lambdas[0];
    let ratio = bs_limit_defect(&psi, &params, l0, &x_grid, 0.3)?.lhs
        / bs_limit_defect(&psi, &params, 0.5 * l0, &x_grid, 0.3)?.lhs;
    s.value("operator_identity_error", worst);
    s.value("defect_halving_ratio", ratio);
    s.check(Check::at_most("operator_identity_error", worst, 1e-6));
    s.check(Check::at_most("defect_halving_ratio_error", (ratio - 2.0).abs(), 1e-3));

    // small lambda, telegraph against the heat kernel
    let grid = config.grid.build()?;
    let k = params.diffusivity();
    let tau0 = lim.width * lim.width / (2.0 * k);
    let tau = config.time.tau_final;
    let start = AnalyticDensity::heat(k, tau0, 0.0)?;
    let target = AnalyticDensity::heat(k, tau0 + tau, 0.0)?;
    let initial = TelegraphState::at_rest(start.sample(&grid));
    let finals = lambda_sweep(&initial, &params, &lim.lambdas, tau, None)?;
    let oracle = target.sample(&grid);
    let distances: Vec<f64> = finals.iter().map(|f| l1_distance(f.u(), &oracle)).collect::<Result<_, _>>()?;
    for (l, d) in lim.lambdas.iter().zip(&distances) {
        s.value(&format!("heat_l1_lambda_{l:e}"), *d);
    }
    let last = *distances.last().expect("non-empty");
    s.check(Check::at_most("heat_l1_smallest_lambda", last, 2e-2));
    s.check(Check::flag("heat_l1_decreasing", distances.windows(2).all(|w| w[1] < w[0])));

    // large lambda
    scan_checks(&mut s, config)?;
    let gauge_gap = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&l| {
            let x = 1.0 / (2.0 * l);
            (gauge_factor(1.0, l) - 1.0).abs() - (x + x * x)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    s.check(Check::at_most("gauge_factor_excess", gauge_gap, 0.0));
    Ok(Outcome { summary: s, tables: Vec::new() })
}

fn martingale(config: &ExperimentConfig) -> Result<Outcome> {
    let m = &config.martingale;
    let grid = config.grid.build()?;
    let params = config.params.build()?;
    let mut s = Summary::new(ExperimentKind::Martingale.name());
    let report = match m.density {
        MartingaleDensity::Heat => {
            martingale_defect(&AnalyticDensity::heat(params.diffusivity(), m.scale, m.center)?.sample(&grid), m.x0)?
        }
        MartingaleDensity::Cauchy => martingale_defect(&AnalyticDensity::cauchy(m.scale, m.center)?.sample(&grid), m.x0)?,
        MartingaleDensity::Kg => {
            let w = m.scale;
            let field = |x: f64| Complex64::new((-(x - m.center).powi(2) / (2.0 * w * w)).exp(), 0.0);
            let rate = |x: f64| Complex64::new(0.0, 0.5 * (-(x - m.center).powi(2) / (w * w)).exp());
            let psi = ComplexField::from_fn(grid, field);
            let psi_dot = ComplexField::from_fn(grid, rate);
            let state = KGState::from_field_and_rate(&psi, &psi_dot, params.lambda())?;
            // the Fourier inverse is periodic, so the quadrature sees the
            // periodic extension of the rate
            let length = grid.extent();
            let wrapped = |y: f64| rate(grid.x_min() + (y - grid.x_min()).rem_euclid(length));
            let fourier = apply_inverse_d(&psi_dot, params.mu())?;
            let gap = (0..grid.len())
                .step_by(8)
                .map(|i| (fourier.values()[i] - green_convolution_quadrature(wrapped, grid.coordinate(i), params.mu())).norm())
                .fold(0.0, f64::max);
            s.value("green_convolution_gap", gap);
            s.check(Check::at_most("green_convolution_gap", gap, 1e-8));
            martingale_from_kg(&state, &params, m.x0)?
        }
    };
    s.value("mass", report.mass);
    s.value("expectation", report.expectation);
    s.value("defect", report.defect);
    s.value("tail_beyond_grid", report.tail_beyond_grid);
    if let (Some(a), Some(b)) = (report.field_term, report.rate_term) {
        s.value("field_term", a);
        s.value("rate_term", b);
    }
    match m.density {
        MartingaleDensity::Cauchy => s.check(Check::flag("heavy_tail_truncated", report.heavy_tail_truncated)),
        _ => {
            s.check(Check::at_most("defect_vs_offset", (report.defect - (m.center - m.x0)).abs(), 1e-8));
            s.check(Check::flag("light_tails", !report.heavy_tail_truncated));
        }
    }
    Ok(Outcome { summary: s, tables: Vec::new() })
}
