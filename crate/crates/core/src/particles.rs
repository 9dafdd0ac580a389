//! Kac persistent random walk, the particle picture of hyperbolic diffusion.
//!
//! Each particle moves at constant speed `c` and reverses direction at the
//! events of a Poisson process with rate `a`. Its density solves
//! `u_tt + 2 a u_t = c^2 u_xx`. Dividing `lambda u_tt + u_t = K u_xx` by
//! `lambda` and matching coefficients gives
//!
//! ```text
//! a = 1 / (2 lambda),    c = sqrt(K / lambda)
//! ```
//!
//! Flip times are drawn exactly from the exponential law, so the ensemble
//! carries sampling noise but no discretisation error. A fair coin picks each
//! initial direction, which makes the initial time derivative of the density
//! vanish.
//!
//! Every particle draws from its own ChaCha stream (`stream = particle index`)
//! under the master seed, so results do not depend on thread or shard count.

use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{total_mass, Boundary, Field, Grid1D};
use crate::params::ModelParams;

/// Law of the initial positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDistribution {
    Point(f64),
    Gaussian { center: f64, width: f64 },
    Uniform { low: f64, high: f64 },
}

impl InitialDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Point(x) if x.is_finite() => Ok(()),
            Self::Gaussian { center, width } if center.is_finite() && width > 0.0 && width.is_finite() => Ok(()),
            Self::Uniform { low, high } if low.is_finite() && high.is_finite() && high > low => Ok(()),
            other => Err(Error::ParameterDomain(format!("invalid initial distribution {other:?}"))),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Self::Point(x) => x,
            Self::Gaussian { center, width } => Normal::new(center, width).expect("validated").sample(rng),
            Self::Uniform { low, high } => rng.random_range(low..high),
        }
    }
}

/// `(flip rate, speed) = (1 / (2 lambda), sqrt(K / lambda))`.
pub fn kac_coefficients(params: &ModelParams) -> (f64, f64) {
    (0.5 / params.lambda(), params.wave_speed())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    velocities: Vec<f64>,
    t: f64,
    rng_seed: u64,
    speed: f64,
}

impl ParticleEnsemble {
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.positions.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample variance about the sample mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.positions.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (self.len() as f64 - 1.0).max(1.0)
    }

    /// Concatenate shards simulated under the same seed and parameters.
    pub fn merge(shards: Vec<ParticleEnsemble>) -> Result<Self> {
        let mut iter = shards.into_iter();
        let mut out = iter.next().ok_or_else(|| Error::Contract("no shards to merge".into()))?;
        for s in iter {
            if s.t != out.t || s.rng_seed != out.rng_seed || s.speed != out.speed {
                return Err(Error::Contract("shards differ in time, seed or speed".into()));
            }
            out.positions.extend(s.positions);
            out.velocities.extend(s.velocities);
        }
        Ok(out)
    }
}

/// Positions and velocity of one particle at each direction reversal, plus
/// the start and end points.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePath {
    pub events: Vec<(f64, f64)>,
    pub start: f64,
}

struct Walker {
    rng: ChaCha8Rng,
    flips: Exp<f64>,
}

impl Walker {
    fn new(seed: u64, index: u64, rate: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng, flips: Exp::new(rate).expect("rate > 0") }
    }

    /// Run to `t_final`, reporting `(time, displacement)` at every event.
    /// Displacement is `c (2 t_right - t)`, with `t_right <= t` the time spent
    /// moving right, so `|displacement| <= c t` holds in floating point too.
    fn run(&mut self, init: &InitialDistribution, speed: f64, t_final: f64, mut event: impl FnMut(f64, f64)) -> (f64, f64, f64) {
        let start = init.draw(&mut self.rng);
        let mut right = self.rng.random_bool(0.5);
        let (mut t, mut t_right) = (0.0_f64, 0.0_f64);
        while t < t_final {
            let wait = self.flips.sample(&mut self.rng);
            let seg = wait.min(t_final - t);
            if right {
                t_right += seg;
            }
            t = if wait < t_final - t { t + seg } else { t_final };
            t_right = t_right.min(t);
            if t < t_final {
                right = !right;
                event(t, speed * (2.0 * t_right - t));
            }
        }
        let sign = if right { 1.0 } else { -1.0 };
        (start, speed * (2.0 * t_right - t_final), sign * speed)
    }
}

fn validate(n_particles: usize, init: &InitialDistribution, t_final: f64) -> Result<()> {
    if n_particles == 0 {
        return Err(Error::ParameterDomain("need at least one particle".into()));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::ParameterDomain(format!("t_final must be >= 0, got {t_final}")));
    }
    init.validate()
}

pub fn simulate(
    n_particles: usize,
    init: &InitialDistribution,
    params: &ModelParams,
    t_final: f64,
    seed: u64,
) -> Result<ParticleEnsemble> {
    simulate_range(0..n_particles, init, params, t_final, seed)
}

/// Simulate the particles with indices in `range`; the union of disjoint
/// ranges equals one call over their hull.
pub fn simulate_range(
    range: Range<usize>,
    init: &InitialDistribution,
    params: &ModelParams,
    t_final: f64,
    seed: u64,
) -> Result<ParticleEnsemble> {
    validate(range.len(), init, t_final)?;
    let (rate, speed) = kac_coefficients(params);
    let (positions, velocities): (Vec<f64>, Vec<f64>) = range
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(seed, i as u64, rate);
            let (start, disp, vel) = w.run(init, speed, t_final, |_, _| {});
            (start + disp, vel)
        })
        .unzip();
    Ok(ParticleEnsemble { positions, velocities, t: t_final, rng_seed: seed, speed })
}

/// Full event history of particle `index`; identical to its trajectory inside
/// [`simulate`] with the same seed.
pub fn sample_path(
    index: usize,
    init: &InitialDistribution,
    params: &ModelParams,
    t_final: f64,
    seed: u64,
) -> Result<ParticlePath> {
    validate(1, init, t_final)?;
    let (rate, speed) = kac_coefficients(params);
    let mut w = Walker::new(seed, index as u64, rate);
    let mut events = Vec::new();
    let (start, disp, _) = w.run(init, speed, t_final, |t, d| events.push((t, d)));
    events.push((t_final, disp));
    Ok(ParticlePath { events: events.into_iter().map(|(t, d)| (t, start + d)).collect(), start })
}

/// Particle counts per grid node. Out-of-range particles wrap on periodic
/// grids and land in the end bins otherwise.
pub fn bin_counts(positions: &[f64], grid: &Grid1D) -> Vec<u64> {
    let n = grid.len();
    let dx = grid.spacing();
    let mut counts = vec![0u64; n];
    for &x in positions {
        let pos = ((x - grid.x_min()) / dx).round();
        let idx = match grid.boundary() {
            Boundary::Periodic => pos.rem_euclid(n as f64) as usize % n,
            _ => pos.clamp(0.0, (n - 1) as f64) as usize,
        };
        counts[idx] += 1;
    }
    counts
}

/// Empirical density normalised to unit [`total_mass`].
pub fn histogram(ensemble: &ParticleEnsemble, grid: &Grid1D) -> Field {
    counts_to_density(&bin_counts(&ensemble.positions, grid), grid)
}

pub fn counts_to_density(counts: &[u64], grid: &Grid1D) -> Field {
    let total: u64 = counts.iter().sum();
    let scale = 1.0 / (total as f64 * grid.spacing());
    let raw = Field::from_parts(*grid, counts.iter().map(|&c| c as f64 * scale).collect());
    let mass = total_mass(&raw);
    raw.scaled(1.0 / mass)
}
