//! Densities built from model states, their moment and quantile statistics,
//! and the Martingale defect `E[X | x0] - x0`.
//!
//! A Klein-Gordon state `(psi, psi_dot)` is turned into the two-term density
//!
//! ```text
//! p(x) = 1/2 |psi(x)|^2 + 1/2 |psi_dot(x) (G * psi_dot)(x)|
//! ```
//!
//! where `G * f = D^{-1} f` is convolution with the one-dimensional Green's
//! function `exp(-mu |u|) / (2 mu)` of `D = -d^2/dx^2 + mu^2`. Nothing forces
//! this density to carry unit mass, so its mass is reported and expectations
//! are taken against the normalised density.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{total_mass, weighted_sum, Field, Grid1D};
use crate::params::ModelParams;
use crate::quadrature::integrate_complex;
use crate::spectral_kg::{apply_inverse_d, KGState};

/// Tail mass beyond the grid edge above which a Martingale report is flagged
/// as truncating a heavy tail.
pub const TRUNCATION_FLAG_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// `None` when the density has no positive mass.
    pub median: Option<f64>,
    /// Share of `integral |p|` carried by negative values.
    pub negative_mass_fraction: f64,
}

impl Diagnostics {
    pub fn of(density: &Field) -> Self {
        let grid = density.grid();
        let xs = grid.coordinates();
        let p = density.values();
        let mass = total_mass(density);
        let first = weighted_sum(grid, xs.iter().zip(p).map(|(x, v)| x * v));
        let second = weighted_sum(grid, xs.iter().zip(p).map(|(x, v)| x * x * v));
        let (mean, variance) = if mass != 0.0 {
            let mean = first / mass;
            (mean, second / mass - mean * mean)
        } else {
            (f64::NAN, f64::NAN)
        };
        let abs_mass = weighted_sum(grid, p.iter().map(|v| v.abs()));
        let negative = weighted_sum(grid, p.iter().map(|v| (-v).max(0.0)));
        let negative_mass_fraction = if abs_mass > 0.0 { negative / abs_mass } else { 0.0 };
        let median = if mass > 0.0 { Cdf::new(density).ok().map(|c| c.quantile(0.5)) } else { None };
        Self { mass, mean, variance, median, negative_mass_fraction }
    }
}

/// Time-indexed densities with per-snapshot diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DensitySeries {
    times: Vec<f64>,
    densities: Vec<Field>,
    diagnostics: Vec<Diagnostics>,
}

impl DensitySeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, density: Field) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(time > last) {
                return Err(Error::Contract(format!("snapshot time {time} does not follow {last}")));
            }
        }
        self.diagnostics.push(Diagnostics::of(&density));
        self.times.push(time);
        self.densities.push(density);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn densities(&self) -> &[Field] {
        &self.densities
    }

    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().map(|&t| (t, self.densities.last().unwrap()))
    }
}

/// The two halves of the Klein-Gordon density and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct KgDensity {
    pub density: Field,
    /// `1/2 |psi|^2`
    pub field_term: Field,
    /// `1/2 |psi_dot (G * psi_dot)|`
    pub rate_term: Field,
}

impl KgDensity {
    pub fn mass(&self) -> f64 {
        total_mass(&self.density)
    }
}

pub fn density_from_kg(state: &KGState, params: &ModelParams) -> Result<KgDensity> {
    if !(params.mu() > 0.0) {
        return Err(Error::Singular("the Green's-function term needs mu > 0".into()));
    }
    let grid = *state.grid();
    let psi = state.psi();
    let rate = state.psi_dot();
    let smoothed = apply_inverse_d(&rate, params.mu())?;
    let field_term: Vec<f64> = psi.values().iter().map(|z| 0.5 * z.norm_sqr()).collect();
    let rate_term: Vec<f64> = rate.values().iter().zip(smoothed.values()).map(|(a, b)| 0.5 * (a * b).norm()).collect();
    let density = field_term.iter().zip(&rate_term).map(|(a, b)| a + b).collect();
    Ok(KgDensity {
        density: Field::new(grid, density)?,
        field_term: Field::new(grid, field_term)?,
        rate_term: Field::new(grid, rate_term)?,
    })
}

/// Green's function of `-d^2/dx^2 + mu^2` on the real line.
pub fn green_kernel(u: f64, mu: f64) -> f64 {
    (-mu * u.abs()).exp() / (2.0 * mu)
}

/// `integral G(x - y) f(y) dy` over the real line by direct quadrature.
///
/// The kink of `G` at zero is handled by integrating each half-line
/// separately; the integrand is smooth on both pieces.
pub fn green_convolution_quadrature(f: impl Fn(f64) -> Complex64, x: f64, mu: f64) -> Complex64 {
    let cutoff = 40.0 / mu;
    let panels = (cutoff * 8.0).ceil().max(64.0) as usize;
    let right = integrate_complex(|u| f(x - u) * green_kernel(u, mu), 0.0, cutoff, panels, 10);
    let left = integrate_complex(|u| f(x + u) * green_kernel(u, mu), 0.0, cutoff, panels, 10);
    left + right
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleReport {
    pub x0: f64,
    /// Unnormalised mass of the density.
    pub mass: f64,
    /// `integral x p / integral p`.
    pub expectation: f64,
    pub defect: f64,
    /// Contributions of the two density halves to `expectation`, when known.
    pub field_term: Option<f64>,
    pub rate_term: Option<f64>,
    /// Estimated mass beyond the grid edges (normalised).
    pub tail_beyond_grid: f64,
    pub heavy_tail_truncated: bool,
}

pub fn martingale_defect(density: &Field, x0: f64) -> Result<MartingaleReport> {
    let mass = total_mass(density);
    if !(mass > 0.0) {
        return Err(Error::DegenerateDensity { mass });
    }
    let expectation = first_moment(density) / mass;
    let tail_beyond_grid = edge_tail_estimate(density, mass)?;
    Ok(MartingaleReport {
        x0,
        mass,
        expectation,
        defect: expectation - x0,
        field_term: None,
        rate_term: None,
        tail_beyond_grid,
        heavy_tail_truncated: tail_beyond_grid > TRUNCATION_FLAG_THRESHOLD,
    })
}

/// Martingale report for a Klein-Gordon state, split by density term.
pub fn martingale_from_kg(state: &KGState, params: &ModelParams, x0: f64) -> Result<MartingaleReport> {
    let parts = density_from_kg(state, params)?;
    let mut report = martingale_defect(&parts.density, x0)?;
    report.field_term = Some(first_moment(&parts.field_term) / report.mass);
    report.rate_term = Some(first_moment(&parts.rate_term) / report.mass);
    Ok(report)
}

fn first_moment(density: &Field) -> f64 {
    let grid = density.grid();
    weighted_sum(grid, grid.coordinates().iter().zip(density.values()).map(|(x, p)| x * p))
}

/// Mass beyond each edge assuming an inverse-square tail through the edge
/// value: `p(edge) * |edge - median|`. Negligible for light tails, close to
/// the exact remainder for Cauchy-like ones.
fn edge_tail_estimate(density: &Field, mass: f64) -> Result<f64> {
    let grid = density.grid();
    let median = Cdf::new(density)?.quantile(0.5);
    let p = density.values();
    let n = p.len();
    let (lo, hi) = (grid.coordinate(0), grid.coordinate(n - 1));
    let left = p[0].max(0.0) * (median - lo).abs();
    let right = p[n - 1].max(0.0) * (hi - median).abs();
    Ok((left + right) / mass)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustStats {
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub iqr: f64,
    /// Multiple of the IQR used for `tail_mass`.
    pub tail_multiple: f64,
    /// Normalised mass outside `median +- tail_multiple * iqr`.
    pub tail_mass: f64,
}

/// Quantile statistics, robust to densities without moments.
pub fn robust_stats(density: &Field, tail_multiple: f64) -> Result<RobustStats> {
    let cdf = Cdf::new(density)?;
    let median = cdf.quantile(0.5);
    let lower_quartile = cdf.quantile(0.25);
    let upper_quartile = cdf.quantile(0.75);
    let iqr = upper_quartile - lower_quartile;
    let reach = tail_multiple * iqr;
    let tail_mass = cdf.at(median - reach) + (1.0 - cdf.at(median + reach));
    Ok(RobustStats { median, lower_quartile, upper_quartile, iqr, tail_multiple, tail_mass })
}

/// Normalised cumulative mass, piecewise linear between knots.
///
/// Non-periodic grids integrate the trapezoid interpolant between nodes; a
/// periodic grid assigns each node its own cell `[x - dx/2, x + dx/2)`.
#[derive(Debug, Clone)]
pub struct Cdf {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Cdf {
    pub fn new(density: &Field) -> Result<Self> {
        let mass = total_mass(density);
        if !(mass > 0.0) {
            return Err(Error::DegenerateDensity { mass });
        }
        let grid: &Grid1D = density.grid();
        let dx = grid.spacing();
        let p = density.values();
        let (knots, values) = if grid.is_periodic() {
            let mut knots = vec![grid.coordinate(0) - 0.5 * dx];
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for (i, v) in p.iter().enumerate() {
                acc += v * dx;
                knots.push(grid.coordinate(i) + 0.5 * dx);
                values.push(acc / mass);
            }
            (knots, values)
        } else {
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for w in p.windows(2) {
                acc += 0.5 * (w[0] + w[1]) * dx;
                values.push(acc / mass);
            }
            (grid.coordinates(), values)
        };
        Ok(Self { knots, values })
    }

    /// Cumulative mass at `x`, clamped to `[0, 1]` outside the knots.
    pub fn at(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0] {
            return 0.0;
        }
        if x >= k[k.len() - 1] {
            return 1.0;
        }
        let j = k.partition_point(|&t| t <= x);
        let (x0, x1) = (k[j - 1], k[j]);
        let (c0, c1) = (self.values[j - 1], self.values[j]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// Smallest `x` with cumulative mass `q`, by linear interpolation.
    pub fn quantile(&self, q: f64) -> f64 {
        let v = &self.values;
        let j = v.iter().position(|&c| c >= q).unwrap_or(v.len() - 1).max(1);
        let (c0, c1) = (v[j - 1], v[j]);
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        if c1 > c0 {
            x0 + (x1 - x0) * (q - c0) / (c1 - c0)
        } else {
            x0
        }
    }
}
