//! Uniform one-dimensional grids, fields sampled on them and the three-point
//! second-difference operator used by every solver in the crate.
//!
//! Non-periodic grids include both end points and use trapezoid weights
//! (one half at each end) for every quadrature. With those weights the
//! mirrored-ghost Laplacian of a [`Boundary::Reflecting`] grid is symmetric and
//! sums to zero, the same discrete conservation identity that holds on a
//! periodic ring.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Index wrap; the point `x_max` is identified with `x_min` and not stored.
    Periodic,
    /// Mirror ghost values about the end nodes (zero normal derivative).
    Reflecting,
    /// Zero ghost values.
    Absorbing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(n_points: usize, x_min: f64, x_max: f64, boundary: Boundary) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::Contract(format!("grid needs at least 3 points, got {n_points}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Contract(format!("grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]")));
        }
        let grid = Self { n_points, x_min, x_max, boundary };
        if !(grid.spacing() > 0.0) {
            return Err(Error::Contract("grid spacing underflows to zero".into()));
        }
        Ok(grid)
    }

    pub fn periodic(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(n_points, x_min, x_max, Boundary::Periodic)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Length of the covered interval.
    pub fn extent(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn spacing(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.extent() / self.n_points as f64,
            _ => self.extent() / (self.n_points - 1) as f64,
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.n_points).map(|i| self.x_min + i as f64 * dx).collect()
    }

    /// Quadrature weight of node `i`, in units of the spacing.
    pub fn weight(&self, i: usize) -> f64 {
        if !self.is_periodic() && (i == 0 || i + 1 == self.n_points) {
            0.5
        } else {
            1.0
        }
    }

    /// Index of the node closest to `x`, or `None` when `x` lies outside the
    /// cells owned by the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let pos = ((x - self.x_min) / self.spacing()).round();
        if pos >= 0.0 && pos < self.n_points as f64 {
            Some(pos as usize)
        } else {
            None
        }
    }

    /// Same node count and boundary, coordinates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::ParameterDomain(format!("scale factor must be > 0, got {factor}")));
        }
        Self::new(self.n_points, self.x_min * factor, self.x_max * factor, self.boundary)
    }

    pub fn translated(&self, shift: f64) -> Result<Self> {
        Self::new(self.n_points, self.x_min + shift, self.x_max + shift, self.boundary)
    }
}

/// Scale factor `sqrt(2 lambda / sigma^2)` taking log-price `x` to `z`.
pub fn z_scale_factor(params: &ModelParams) -> f64 {
    (2.0 * params.lambda() / (params.sigma() * params.sigma())).sqrt()
}

/// Map an `x` grid onto the `z = x sqrt(2 lambda / sigma^2)` grid in which the
/// large-relaxation equation has lambda-free derivative coefficients.
///
/// Note: on a fixed `z` grid the implied `x` interval shrinks like
/// `lambda^{-1/2}`, so a fixed `z` window covers an ever narrower range of
/// log-prices as lambda grows.
pub fn rescale_to_z(grid: &Grid1D, params: &ModelParams) -> Result<Grid1D> {
    grid.scaled(z_scale_factor(params))
}

pub fn rescale_from_z(grid: &Grid1D, params: &ModelParams) -> Result<Grid1D> {
    grid.scaled(1.0 / z_scale_factor(params))
}

/// Scalar types a [`Field`] can hold.
pub trait Scalar:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Scalar for Complex64 {
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Samples of a real or complex function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T = f64> {
    grid: Grid1D,
    values: Vec<T>,
}

pub type ComplexField = Field<Complex64>;

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid1D, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "field has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite field value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![T::default(); grid.len()] }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> T) -> Self {
        let values = grid.coordinates().into_iter().map(f).collect();
        Self { grid, values }
    }

    /// Wrap values produced by an internal operation on the same grid.
    pub(crate) fn from_parts(grid: Grid1D, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(Scalar::is_finite)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// Discrete second derivative; see [`laplacian_values`].
    pub fn laplacian(&self) -> Self {
        let values = second_difference(&self.grid, &self.values);
        Self { grid: self.grid, values }
    }
}

/// `(f[i-1] - 2 f[i] + f[i+1]) / dx^2` with the grid's ghost-value rule.
pub fn laplacian_values<T: Scalar>(grid: &Grid1D, values: &[T]) -> Result<Vec<T>> {
    if values.len() != grid.len() {
        return Err(Error::Contract(format!(
            "laplacian of {} values on a {}-point grid",
            values.len(),
            grid.len()
        )));
    }
    Ok(second_difference(grid, values))
}

pub fn laplacian<T: Scalar>(f: &Field<T>) -> Field<T> {
    f.laplacian()
}

fn second_difference<T: Scalar>(grid: &Grid1D, f: &[T]) -> Vec<T> {
    let n = f.len();
    let inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
    let stencil = |l: T, c: T, r: T| (l - c * 2.0 + r) * inv_dx2;
    let mut out = Vec::with_capacity(n);
    let (left_ghost, right_ghost) = match grid.boundary() {
        Boundary::Periodic => (f[n - 1], f[0]),
        Boundary::Reflecting => (f[1], f[n - 2]),
        Boundary::Absorbing => (T::default(), T::default()),
    };
    out.push(stencil(left_ghost, f[0], f[1]));
    for w in f.windows(3) {
        out.push(stencil(w[0], w[1], w[2]));
    }
    out.push(stencil(f[n - 2], f[n - 1], right_ghost));
    out
}

/// `dx * sum_i w_i f[i]` with trapezoid end weights on non-periodic grids.
pub fn total_mass(f: &Field) -> f64 {
    weighted_sum(f.grid(), f.values().iter().copied())
}

pub(crate) fn weighted_sum(grid: &Grid1D, values: impl Iterator<Item = f64>) -> f64 {
    let sum: f64 = values.enumerate().map(|(i, v)| grid.weight(i) * v).sum();
    sum * grid.spacing()
}

/// Weighted inner product `dx * sum_i w_i f[i] g[i]`.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    same_grid(f.grid(), g.grid())?;
    Ok(weighted_sum(f.grid(), f.values().iter().zip(g.values()).map(|(a, b)| a * b)))
}

pub fn l2_norm(f: &Field) -> f64 {
    weighted_sum(f.grid(), f.values().iter().map(|v| v * v)).sqrt()
}

/// `integral |f - g| dx` with the grid's quadrature weights.
pub fn l1_distance(f: &Field, g: &Field) -> Result<f64> {
    same_grid(f.grid(), g.grid())?;
    Ok(weighted_sum(f.grid(), f.values().iter().zip(g.values()).map(|(a, b)| (a - b).abs())))
}

pub(crate) fn same_grid(a: &Grid1D, b: &Grid1D) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Contract(format!("fields live on different grids: {a:?} vs {b:?}")))
    }
}
