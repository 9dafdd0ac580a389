//! Residual checks of the two limits of the relaxation time.
//!
//! Small `lambda`: the operator `L_lambda = lambda d^2/dt^2 + H` differs from
//! the Black-Scholes Hamiltonian `H = -(sigma^2/2) d^2/dx^2 + sigma^2/8` by
//! exactly `lambda psi_tt`, so `||L_lambda psi - H psi|| = lambda ||psi_tt||`.
//! [`bs_limit_defect`] evaluates both sides independently on a grid.
//!
//! Large `lambda`: after the gauge change, Wick rotation and the rescaling
//! `z = x sqrt(2 lambda / sigma^2)`, the massless equation reads
//! `g_tt + g_zz = g / (4 lambda^2)`. The Cauchy/Poisson kernel solves the
//! left-hand side exactly, so its residual is the right-hand side alone and
//! falls like `lambda^{-2}`. [`scan_lambda`] measures that rate.

use rayon::prelude::*;

use crate::closed_forms::{bs_mass_term, cauchy_poisson};
use crate::error::{Error, Result};
use crate::grid::{l2_norm, Field, Grid1D};
use crate::params::ModelParams;

/// Accepted log-log slope for an inverse-square law.
pub const INVERSE_SQUARE_SLOPE: (f64, f64) = (-2.3, -1.7);
pub const MIN_FIT_QUALITY: f64 = 0.99;
/// A residual is floor-dominated when the pure stencil error reaches this
/// share of it.
pub const FLOOR_SHARE: f64 = 0.1;

/// `exp(-(x - center)^2 / (2 width^2)) * (static_amp + wave_amp cos(omega t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTestFunction {
    pub center: f64,
    pub width: f64,
    pub omega: f64,
    pub static_amp: f64,
    pub wave_amp: f64,
}

impl GaussianTestFunction {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.envelope(x) * (self.static_amp + self.wave_amp * (self.omega * t).cos())
    }

    /// Analytic second time derivative.
    pub fn d2_dt2(&self, x: f64, t: f64) -> f64 {
        -self.envelope(x) * self.wave_amp * self.omega * self.omega * (self.omega * t).cos()
    }

    fn envelope(&self, x: f64) -> f64 {
        (-(x - self.center).powi(2) / (2.0 * self.width * self.width)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsLimitDefect {
    /// `||L_lambda psi - H psi||` from discretised operators.
    pub lhs: f64,
    /// `lambda ||psi_tt||` from the analytic derivative.
    pub rhs: f64,
    /// `|lhs - rhs| / rhs`, or `lhs` when `rhs` vanishes.
    pub relative_difference: f64,
}

/// Both sides of `||L_lambda psi - H psi|| = lambda ||psi_tt||` at time `t`,
/// with `mu^2 = sigma^2 / 8`.
pub fn bs_limit_defect(
    psi: &GaussianTestFunction,
    params: &ModelParams,
    lambda: f64,
    grid: &Grid1D,
    t: f64,
) -> Result<BsLimitDefect> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::ParameterDomain(format!("lambda must be > 0, got {lambda}")));
    }
    let half_var = 0.5 * params.sigma() * params.sigma();
    let mu2 = bs_mass_term(params.sigma());
    let h = 1e-3 * (1.0 / psi.omega.abs()).min(1.0);

    let now = Field::from_fn(*grid, |x| psi.value(x, t));
    let ahead = Field::from_fn(*grid, |x| psi.value(x, t + h));
    let behind = Field::from_fn(*grid, |x| psi.value(x, t - h));
    let lap = now.laplacian();

    let n = grid.len();
    let (p, pa, pb, lp) = (now.values(), ahead.values(), behind.values(), lap.values());
    let diff: Vec<f64> = (0..n)
        .map(|i| {
            let d2t = (pa[i] - 2.0 * p[i] + pb[i]) / (h * h);
            let l_lambda = lambda * d2t - half_var * lp[i] + mu2 * p[i];
            let hamiltonian = -half_var * lp[i] + mu2 * p[i];
            l_lambda - hamiltonian
        })
        .collect();
    let lhs = l2_norm(&Field::new(*grid, diff)?);
    let rhs = lambda * l2_norm(&Field::from_fn(*grid, |x| psi.d2_dt2(x, t)));
    let relative_difference = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { lhs };
    Ok(BsLimitDefect { lhs, rhs, relative_difference })
}

/// Gauge factor `exp(-i t / 2 lambda)` after the rotation `t = i tau`.
pub fn gauge_factor(tau: f64, lambda: f64) -> f64 {
    (tau / (2.0 * lambda)).exp()
}

/// Right-hand side `g / (4 lambda^2)` of the rescaled large-lambda equation.
pub fn cauchy_rhs(z: f64, tau: f64, lambda: f64) -> Result<f64> {
    Ok(cauchy_poisson(z, tau)? / (4.0 * lambda * lambda))
}

/// Node-symmetric midpoint of a grid; the Cauchy kernel is centred there.
fn grid_center(grid: &Grid1D) -> f64 {
    0.5 * (grid.coordinate(0) + grid.coordinate(grid.len() - 1))
}

fn kernel_residual(rhs_coeff: f64, tau: f64, grid: &Grid1D) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::ParameterDomain(format!("tau must be > 0, got {tau}")));
    }
    let dz = grid.spacing();
    if dz > tau / 20.0 {
        return Err(Error::Resolution(format!("dz = {dz} exceeds tau / 20 = {}", tau / 20.0)));
    }
    let center = grid_center(grid);
    let g = |z: f64, t: f64| t / (std::f64::consts::PI * ((z - center).powi(2) + t * t));
    // fourth-order five-point second differences in both directions
    let d2 = |f: [f64; 5], h: f64| (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
    let zs = grid.coordinates();
    let (mut res_sq, mut g_sq) = (0.0, 0.0);
    for i in 2..zs.len() - 2 {
        let z = zs[i];
        let g0 = g(z, tau);
        let g_tt = d2([-2.0, -1.0, 0.0, 1.0, 2.0].map(|k| g(z, tau + k * dz)), dz);
        let g_zz = d2([zs[i - 2], zs[i - 1], z, zs[i + 1], zs[i + 2]].map(|x| g(x, tau)), dz);
        let r = g_tt + g_zz - rhs_coeff * g0;
        res_sq += r * r;
        g_sq += g0 * g0;
    }
    Ok((res_sq / g_sq).sqrt())
}

/// `||(d_tt + d_zz) g - g / (4 lambda^2)|| / ||g||` for the Poisson kernel `g`
/// of scale `tau` centred on the grid, over nodes at least two cells from
/// either end.
pub fn cauchy_residual(lambda: f64, tau: f64, grid: &Grid1D) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::ParameterDomain(format!("lambda must be > 0, got {lambda}")));
    }
    kernel_residual(1.0 / (4.0 * lambda * lambda), tau, grid)
}

/// Stencil error on the harmonic part alone (the `lambda -> infinity` residual).
pub fn harmonic_residual(tau: f64, grid: &Grid1D) -> Result<f64> {
    kernel_residual(0.0, tau, grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-log fit.
    pub fit_quality: f64,
    pub floor: Option<f64>,
}

impl ScanResult {
    pub fn supports_inverse_square(&self) -> bool {
        let (lo, hi) = INVERSE_SQUARE_SLOPE;
        (lo..=hi).contains(&self.slope) && self.fit_quality >= MIN_FIT_QUALITY
    }
}

/// Least-squares fit of `log residual` against `log lambda`.
pub fn fit_scan(lambdas: &[f64], residuals: &[f64]) -> Result<ScanResult> {
    if lambdas.len() != residuals.len() || lambdas.len() < 2 {
        return Err(Error::Contract("need matching lambda and residual sequences of length >= 2".into()));
    }
    if !lambdas.windows(2).all(|w| w[1] > w[0]) || lambdas[0] <= 0.0 {
        return Err(Error::Contract("lambda values must be positive and strictly increasing".into()));
    }
    if !residuals.iter().all(|&r| r > 0.0 && r.is_finite()) {
        return Err(Error::Contract("residuals must be finite and strictly positive".into()));
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let fit_quality = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScanResult { lambdas: lambdas.to_vec(), residuals: residuals.to_vec(), slope, intercept, fit_quality, floor: None })
}

/// Cauchy residuals over increasing `lambdas` and their log-log slope.
pub fn scan_lambda(lambdas: &[f64], tau: f64, grid: &Grid1D) -> Result<ScanResult> {
    if lambdas.len() < 4 {
        return Err(Error::Contract(format!("need at least 4 lambda values, got {}", lambdas.len())));
    }
    let residuals: Vec<f64> =
        lambdas.par_iter().map(|&l| cauchy_residual(l, tau, grid)).collect::<Result<_>>()?;
    let floor = harmonic_residual(tau, grid)?;
    let at_floor = residuals.iter().filter(|&&r| floor >= FLOOR_SHARE * r).count();
    if 2 * at_floor > residuals.len() {
        return Err(Error::FloorDominated { count: at_floor, total: residuals.len() });
    }
    let mut result = fit_scan(lambdas, &residuals)?;
    result.floor = Some(floor);
    Ok(result)
}
