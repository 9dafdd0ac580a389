use crate::error::{Error, Result};

/// Model parameters shared by every solver.
///
/// `lambda` is the flux relaxation time, `sigma` the volatility, `mu` the mass
/// term and `diffusivity` the `K` of the hyperbolic diffusion law. Built from
/// `sigma` alone, the diffusivity is exactly `sigma^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    sigma: f64,
    mu: f64,
    diffusivity: f64,
}

impl ModelParams {
    /// Parameters with `K = sigma^2 / 2`.
    pub fn new(lambda: f64, sigma: f64, mu: f64) -> Result<Self> {
        Self::with_diffusivity(lambda, sigma, mu, 0.5 * sigma * sigma)
    }

    pub fn with_diffusivity(lambda: f64, sigma: f64, mu: f64, diffusivity: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::ParameterDomain(format!("lambda must be > 0, got {lambda}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::ParameterDomain(format!("sigma must be > 0, got {sigma}")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::ParameterDomain(format!("mu must be >= 0, got {mu}")));
        }
        if !(diffusivity.is_finite() && diffusivity > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "diffusivity must be > 0, got {diffusivity}"
            )));
        }
        Ok(Self { lambda, sigma, mu, diffusivity })
    }

    /// Parameters for the classical heat-type law `lambda u_tt + u_t = K u_xx`
    /// where only `K` is known; `sigma` is set to `sqrt(2K)` so the two
    /// parametrisations coincide.
    pub fn from_diffusivity(lambda: f64, diffusivity: f64) -> Result<Self> {
        Self::with_diffusivity(lambda, (2.0 * diffusivity).sqrt(), 0.0, diffusivity)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu_squared(&self) -> f64 {
        self.mu * self.mu
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Propagation speed `sqrt(K / lambda)`.
    pub fn wave_speed(&self) -> f64 {
        (self.diffusivity / self.lambda).sqrt()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::with_diffusivity(lambda, self.sigma, self.mu, self.diffusivity)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::with_diffusivity(self.lambda, self.sigma, mu, self.diffusivity)
    }
}
