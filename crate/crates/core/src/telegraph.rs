//! Explicit finite-difference solver for the Wick-rotated hyperbolic diffusion
//! equation
//!
//! ```text
//! lambda u_tt + u_t = K u_xx - mu^2 u
//! ```
//!
//! marched as the pair `(u, v = u_t)`.
//!
//! The density update is the second-order Taylor step
//!
//! ```text
//! u' = u + (dt - dt^2 / 2 lambda) v + (K dt^2 / 2 lambda) L u - (mu^2 dt^2 / 2 lambda) u
//! ```
//!
//! obtained by substituting `u_tt = (K L u - v - mu^2 u) / lambda`. The rate is
//! advanced with the trapezoid rule on the same acceleration, which makes the
//! pair a damped velocity-Verlet scheme:
//!
//! ```text
//! v' (1 + h) = v (1 - h) + h (K L u - mu^2 u + K L u' - mu^2 u'),   h = dt / 2 lambda
//! ```
//!
//! Von Neumann analysis of this pair gives amplification factors of modulus at
//! most one whenever `dt <= 0.9 * 2 / omega_max` and `dt <= 2 lambda`, where
//! `omega_max^2 = (4 K / dx^2 + mu^2) / lambda`. For `mu = 0` the first bound is
//! the CFL condition `sqrt(K / lambda) dt / dx <= 0.9`. At `dt = 2 lambda` the
//! rate term drops out and the density update is exactly the forward Euler
//! step of the heat equation, which is how small relaxation times reach the
//! diffusive limit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{same_grid, total_mass, Field, Grid1D};
use crate::measures::DensitySeries;
use crate::params::ModelParams;

/// Safety factor applied to the von Neumann bound.
pub const CFL_SAFETY: f64 = 0.9;

/// Density `u` and its Wick-time derivative `v` at time `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphState {
    u: Field,
    v: Field,
    tau: f64,
}

impl TelegraphState {
    pub fn new(u: Field, v: Field, tau: f64) -> Result<Self> {
        same_grid(u.grid(), v.grid())?;
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::ParameterDomain(format!("tau must be >= 0, got {tau}")));
        }
        Ok(Self { u, v, tau })
    }

    /// State with `v = 0` at `tau = 0`.
    pub fn at_rest(u: Field) -> Self {
        let v = Field::zeros(*u.grid());
        Self { u, v, tau: 0.0 }
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn v(&self) -> &Field {
        &self.v
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> &Grid1D {
        self.u.grid()
    }

    pub fn mass(&self) -> f64 {
        total_mass(&self.u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub dt: f64,
    pub dt_max: f64,
    /// `sqrt(K / lambda)`.
    pub wave_speed: f64,
    /// `wave_speed * dt / dx`.
    pub cfl_ratio: f64,
    pub stable: bool,
}

pub fn check_stability(grid: &Grid1D, params: &ModelParams, dt: f64) -> StabilityReport {
    let dx = grid.spacing();
    let wave_speed = params.wave_speed();
    let dt_max = max_stable_dt(grid, params);
    let cfl_ratio = wave_speed * dt / dx;
    let stable = dt.is_finite() && dt > 0.0 && dt <= dt_max * (1.0 + 1e-12);
    StabilityReport { dt, dt_max, wave_speed, cfl_ratio, stable }
}

/// Largest step accepted by [`check_stability`].
pub fn max_stable_dt(grid: &Grid1D, params: &ModelParams) -> f64 {
    let dx = grid.spacing();
    let omega_max_sq = (4.0 * params.diffusivity() / (dx * dx) + params.mu_squared()) / params.lambda();
    let wave_bound = CFL_SAFETY * 2.0 / omega_max_sq.sqrt();
    wave_bound.min(2.0 * params.lambda())
}

/// Weights `(dt - dt^2 / 2 lambda, K dt^2 / 2 lambda)` multiplying `v` and
/// `L u` in the density update.
pub fn fd_weights(params: &ModelParams, dt: f64) -> (f64, f64) {
    let a = dt * dt / (2.0 * params.lambda());
    (dt - a, params.diffusivity() * a)
}

/// One explicit step of size `dt`.
pub fn step(state: &TelegraphState, params: &ModelParams, dt: f64) -> Result<TelegraphState> {
    let report = check_stability(state.grid(), params, dt);
    if !report.stable {
        return Err(Error::Unstable(report));
    }
    advance(state, params, dt, state.tau + dt, 1)
}

fn advance(
    state: &TelegraphState,
    params: &ModelParams,
    dt: f64,
    tau_next: f64,
    step_index: usize,
) -> Result<TelegraphState> {
    let grid = *state.grid();
    let k = params.diffusivity();
    let mu2 = params.mu_squared();
    let (v_weight, lap_weight) = fd_weights(params, dt);
    let mass_weight = mu2 * dt * dt / (2.0 * params.lambda());
    let h = dt / (2.0 * params.lambda());

    let u = state.u.values();
    let v = state.v.values();
    let lu = state.u.laplacian();
    let lu = lu.values();

    let u_next: Vec<f64> = (0..u.len())
        .map(|i| u[i] + v_weight * v[i] + lap_weight * lu[i] - mass_weight * u[i])
        .collect();
    let u_next = Field::from_parts(grid, u_next);
    let lu_next = u_next.laplacian();
    let (un, lun) = (u_next.values(), lu_next.values());
    let v_next: Vec<f64> = (0..u.len())
        .map(|i| {
            let accel = k * lu[i] - mu2 * u[i] + k * lun[i] - mu2 * un[i];
            (v[i] * (1.0 - h) + h * accel) / (1.0 + h)
        })
        .collect();
    let v_next = Field::from_parts(grid, v_next);

    if !(u_next.all_finite() && v_next.all_finite()) {
        return Err(Error::NumericalBlowup { step: step_index });
    }
    Ok(TelegraphState { u: u_next, v: v_next, tau: tau_next })
}

/// Step count and uniform step size covering `[tau0, tau_final]` with steps no
/// larger than `dt`.
fn schedule(tau0: f64, tau_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::ParameterDomain(format!("dt must be > 0, got {dt}")));
    }
    if !(tau_final.is_finite() && tau_final >= tau0) {
        return Err(Error::ParameterDomain(format!(
            "tau_final {tau_final} precedes the initial time {tau0}"
        )));
    }
    let span = tau_final - tau0;
    if span == 0.0 {
        return Ok((0, dt));
    }
    let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, span / steps as f64))
}

/// March to `tau_final` and return only the final state.
pub fn march(
    initial: &TelegraphState,
    params: &ModelParams,
    tau_final: f64,
    dt: f64,
) -> Result<TelegraphState> {
    let mut last = initial.clone();
    run(initial, params, tau_final, dt, |_, s| last = s.clone())?;
    Ok(last)
}

/// March to `tau_final`, recording a snapshot every `snapshot_every` steps.
/// The initial and final states are always recorded.
pub fn evolve(
    initial: &TelegraphState,
    params: &ModelParams,
    tau_final: f64,
    dt: f64,
    snapshot_every: usize,
) -> Result<DensitySeries> {
    let stride = snapshot_every.max(1);
    let mut series = DensitySeries::new();
    series.push(initial.tau, initial.u.clone())?;
    let mut pending = None;
    let total = run(initial, params, tau_final, dt, |i, s| {
        if i % stride == 0 {
            pending = None;
            series.push(s.tau, s.u.clone()).expect("snapshot times increase");
        } else {
            pending = Some(s.clone());
        }
    })?;
    if let Some(s) = pending {
        series.push(s.tau, s.u)?;
    }
    debug_assert!(total == 0 || series.times().last() == Some(&tau_final));
    Ok(series)
}

fn run(
    initial: &TelegraphState,
    params: &ModelParams,
    tau_final: f64,
    dt: f64,
    mut observe: impl FnMut(usize, &TelegraphState),
) -> Result<usize> {
    let (steps, dt) = schedule(initial.tau, tau_final, dt)?;
    if steps == 0 {
        return Ok(0);
    }
    let report = check_stability(initial.grid(), params, dt);
    if !report.stable {
        return Err(Error::Unstable(report));
    }
    let mut state = initial.clone();
    for i in 1..=steps {
        let tau = if i == steps { tau_final } else { initial.tau + i as f64 * dt };
        state = advance(&state, params, dt, tau, i)?;
        observe(i, &state);
    }
    Ok(steps)
}

/// Evolve the same initial state under several relaxation times in parallel,
/// each with its own largest stable step (capped by `dt_cap`).
pub fn lambda_sweep(
    initial: &TelegraphState,
    params: &ModelParams,
    lambdas: &[f64],
    tau_final: f64,
    dt_cap: Option<f64>,
) -> Result<Vec<TelegraphState>> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda)?;
            let mut dt = max_stable_dt(initial.grid(), &p);
            if let Some(cap) = dt_cap {
                dt = dt.min(cap);
            }
            march(initial, &p, tau_final, dt)
        })
        .collect()
}
