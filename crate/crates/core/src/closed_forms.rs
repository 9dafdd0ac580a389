//! Analytic reference solutions used as oracles by the solvers and tests.
//!
//! All prices are forward prices under zero rates.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};

/// Gaussian heat kernel `(4 pi K tau)^{-1/2} exp(-(x - x0)^2 / (4 K tau))`.
///
/// Solves `u_tau = K u_xx` with unit mass; its variance is `2 K tau`.
pub fn heat_kernel(x: f64, tau: f64, diffusivity: f64, x0: f64) -> Result<f64> {
    positive("tau", tau)?;
    positive("diffusivity", diffusivity)?;
    let four_kt = 4.0 * diffusivity * tau;
    Ok((-(x - x0).powi(2) / four_kt).exp() / (PI * four_kt).sqrt())
}

/// Poisson kernel of the half plane, identical to the Cauchy density with
/// scale `tau`: `(1/pi) tau / (z^2 + tau^2)`.
pub fn cauchy_poisson(z: f64, tau: f64) -> Result<f64> {
    positive("tau", tau)?;
    Ok(tau / (PI * (z * z + tau * tau)))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Zero-rate Black-Scholes call on a forward.
pub fn bs_call_price(spot: f64, strike: f64, sigma: f64, tau: f64) -> Result<f64> {
    positive("spot", spot)?;
    positive("strike", strike)?;
    positive("sigma", sigma)?;
    positive("tau", tau)?;
    let vol = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + 0.5 * vol * vol) / vol;
    let d2 = d1 - vol;
    Ok(spot * normal_cdf(d1) - strike * normal_cdf(d2))
}

/// The constant `sigma^2 / 8` of the Black-Scholes Hamiltonian
/// `-(sigma^2/2) d^2/dx^2 + sigma^2/8`; the small-relaxation limit recovers
/// Black-Scholes when `mu^2` takes this value.
pub fn bs_mass_term(sigma: f64) -> f64 {
    sigma * sigma / 8.0
}

/// Variance of the telegraph (Kac) density started from a point with zero
/// initial time derivative: `2 K (t - lambda (1 - exp(-t / lambda)))`.
pub fn telegraph_variance(lambda: f64, diffusivity: f64, t: f64) -> f64 {
    2.0 * diffusivity * (t + lambda * (-t / lambda).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticDensity {
    HeatKernel { diffusivity: f64, tau: f64, center: f64 },
    CauchyPoisson { scale: f64, center: f64 },
}

impl AnalyticDensity {
    pub fn heat(diffusivity: f64, tau: f64, center: f64) -> Result<Self> {
        positive("tau", tau)?;
        positive("diffusivity", diffusivity)?;
        Ok(Self::HeatKernel { diffusivity, tau, center })
    }

    pub fn cauchy(scale: f64, center: f64) -> Result<Self> {
        positive("scale", scale)?;
        Ok(Self::CauchyPoisson { scale, center })
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Self::HeatKernel { diffusivity, tau, center } => {
                let four_kt = 4.0 * diffusivity * tau;
                (-(x - center).powi(2) / four_kt).exp() / (PI * four_kt).sqrt()
            }
            Self::CauchyPoisson { scale, center } => {
                let z = x - center;
                scale / (PI * (z * z + scale * scale))
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::HeatKernel { diffusivity, tau, center } => {
                normal_cdf((x - center) / (2.0 * diffusivity * tau).sqrt())
            }
            Self::CauchyPoisson { scale, center } => 0.5 + ((x - center) / scale).atan() / PI,
        }
    }

    /// Exact mass on `[a, b]`.
    pub fn mass_within(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }

    pub fn sample(&self, grid: &Grid1D) -> Field {
        Field::from_fn(*grid, |x| self.density(x))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{name} must be > 0, got {v}")))
    }
}
