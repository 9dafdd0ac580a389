//! Two-component Klein-Gordon system in Fourier space.
//!
//! A scalar field `psi` with rate `psi_dot` is packed as
//! `Psi = (psi + i lambda psi_dot, psi - i lambda psi_dot)`, which evolves by
//! `i dPsi/dt = H Psi` with, per Fourier mode `k` and `D_k = k^2 + mu^2`,
//!
//! ```text
//! H_k = 1/2 [[ lambda D_k + 1/lambda,  lambda D_k - 1/lambda],
//!            [-lambda D_k + 1/lambda, -lambda D_k - 1/lambda]]
//! ```
//!
//! `H_k` is not Hermitian, but it is pseudo-Hermitian with respect to
//!
//! ```text
//! eta_k = 1/8 [[lambda^2 + 1/D_k, lambda^2 - 1/D_k],
//!              [lambda^2 - 1/D_k, lambda^2 + 1/D_k]]
//! ```
//!
//! i.e. `H_k^† eta_k = eta_k H_k`. Every block has trace zero and determinant
//! `-D_k`, hence `H_k^2 = D_k I` and eigenvalues `+-sqrt(D_k)`; the propagator
//! is `cos(w t) I - i sin(w t) / w H_k` with `w = sqrt(D_k)`.
//!
//! All operators act on periodic grids and use the exact Fourier symbol of
//! `-d^2/dx^2`, so `D^{-1}` is a per-mode division.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{same_grid, ComplexField, Field, Grid1D};
use crate::params::ModelParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block2(pub [[Complex64; 2]; 2]);

impl Block2 {
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        let r = |x| Complex64::new(x, 0.0);
        Self([[r(a), r(b)], [r(c), r(d)]])
    }

    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Roots of the characteristic polynomial.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = self.trace() * 0.5;
        let root = (half_tr * half_tr - self.det()).sqrt();
        [half_tr + root, half_tr - root]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

impl Mul for Block2 {
    type Output = Block2;
    fn mul(self, rhs: Block2) -> Block2 {
        let (a, b) = (&self.0, &rhs.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Block2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

impl Add for Block2 {
    type Output = Block2;
    fn add(self, rhs: Block2) -> Block2 {
        let (a, b) = (&self.0, &rhs.0);
        Block2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Block2 {
    type Output = Block2;
    fn sub(self, rhs: Block2) -> Block2 {
        self + rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Angular wavenumbers of a periodic grid in FFT order.
pub fn wavenumbers(grid: &Grid1D) -> Vec<f64> {
    let n = grid.len();
    let base = 2.0 * PI / grid.extent();
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            base * m
        })
        .collect()
}

fn require_periodic(grid: &Grid1D) -> Result<()> {
    if grid.is_periodic() {
        Ok(())
    } else {
        Err(Error::UnsupportedDomain(format!(
            "spectral operators need a periodic grid, got {:?}",
            grid.boundary()
        )))
    }
}

fn require_mass(params: &ModelParams) -> Result<()> {
    if params.mu() > 0.0 {
        Ok(())
    } else {
        Err(Error::Singular("D = -d^2/dx^2 + mu^2 is not invertible at k = 0 when mu = 0".into()))
    }
}

/// Per-mode symbols `D_k = k^2 + mu^2`.
pub fn d_symbols(grid: &Grid1D, mu: f64) -> Vec<f64> {
    wavenumbers(grid).into_iter().map(|k| k * k + mu * mu).collect()
}

pub(crate) fn fft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

pub(crate) fn ifft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let inv_n = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= inv_n);
    buf
}

/// `D^{-1} f` computed by dividing each Fourier coefficient by `k^2 + mu^2`.
/// This is the periodic convolution with the Green's function of `D`.
pub fn apply_inverse_d(f: &ComplexField, mu: f64) -> Result<ComplexField> {
    require_periodic(f.grid())?;
    if !(mu > 0.0) {
        return Err(Error::Singular("inverse of D requires mu > 0".into()));
    }
    let d = d_symbols(f.grid(), mu);
    let mut spec = fft(f.values());
    spec.iter_mut().zip(&d).for_each(|(z, dk)| *z /= *dk);
    Ok(Field::from_parts(*f.grid(), ifft(&spec)))
}

/// Klein-Gordon state in the two-component representation.
#[derive(Debug, Clone, PartialEq)]
pub struct KGState {
    psi1: ComplexField,
    psi2: ComplexField,
    lambda: f64,
}

impl KGState {
    pub fn from_components(psi1: ComplexField, psi2: ComplexField, lambda: f64) -> Result<Self> {
        same_grid(psi1.grid(), psi2.grid())?;
        require_periodic(psi1.grid())?;
        if !(lambda.is_finite() && lambda != 0.0) {
            return Err(Error::ParameterDomain(format!("lambda must be non-zero, got {lambda}")));
        }
        Ok(Self { psi1, psi2, lambda })
    }

    /// Pack `(psi, psi_dot)` as `(psi + i lambda psi_dot, psi - i lambda psi_dot)`.
    pub fn from_field_and_rate(psi: &ComplexField, psi_dot: &ComplexField, lambda: f64) -> Result<Self> {
        same_grid(psi.grid(), psi_dot.grid())?;
        let il = I * lambda;
        let psi1 = psi.values().iter().zip(psi_dot.values()).map(|(p, d)| p + il * d).collect();
        let psi2 = psi.values().iter().zip(psi_dot.values()).map(|(p, d)| p - il * d).collect();
        Self::from_components(Field::new(*psi.grid(), psi1)?, Field::new(*psi.grid(), psi2)?, lambda)
    }

    pub fn grid(&self) -> &Grid1D {
        self.psi1.grid()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn psi1(&self) -> &ComplexField {
        &self.psi1
    }

    pub fn psi2(&self) -> &ComplexField {
        &self.psi2
    }

    /// `(Psi1 + Psi2) / 2`.
    pub fn psi(&self) -> ComplexField {
        let v = self.psi1.values().iter().zip(self.psi2.values()).map(|(a, b)| (a + b) * 0.5).collect();
        Field::from_parts(*self.grid(), v)
    }

    /// `(Psi1 - Psi2) / (2 i lambda)`.
    pub fn psi_dot(&self) -> ComplexField {
        let denom = I * (2.0 * self.lambda);
        let v = self.psi1.values().iter().zip(self.psi2.values()).map(|(a, b)| (a - b) / denom).collect();
        Field::from_parts(*self.grid(), v)
    }

    /// Ordinary `L^2 (+) L^2` norm squared, `dx sum |Psi1|^2 + |Psi2|^2`.
    pub fn l2_norm_sqr(&self) -> f64 {
        let s: f64 = self.psi1.values().iter().chain(self.psi2.values()).map(|z| z.norm_sqr()).sum();
        s * self.grid().spacing()
    }

    fn spectra(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (fft(self.psi1.values()), fft(self.psi2.values()))
    }
}

/// Per-mode Hamiltonian blocks.
#[derive(Debug, Clone)]
pub struct KGOperator {
    grid: Grid1D,
    params: ModelParams,
    wavenumbers: Vec<f64>,
    d: Vec<f64>,
    blocks: Vec<Block2>,
}

impl KGOperator {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn d_symbols(&self) -> &[f64] {
        &self.d
    }

    pub fn blocks(&self) -> &[Block2] {
        &self.blocks
    }
}

pub fn hamiltonian_block(d: f64, lambda: f64) -> Block2 {
    let (ld, il) = (lambda * d, 1.0 / lambda);
    Block2::real(0.5 * (ld + il), 0.5 * (ld - il), 0.5 * (-ld + il), 0.5 * (-ld - il))
}

pub fn metric_block(d: f64, lambda: f64) -> Block2 {
    let (l2, id) = (lambda * lambda, 1.0 / d);
    Block2::real((l2 + id) / 8.0, (l2 - id) / 8.0, (l2 - id) / 8.0, (l2 + id) / 8.0)
}

pub fn build_hamiltonian(grid: &Grid1D, params: &ModelParams) -> Result<KGOperator> {
    require_periodic(grid)?;
    require_mass(params)?;
    let wavenumbers = wavenumbers(grid);
    let d = d_symbols(grid, params.mu());
    let blocks = d.iter().map(|&dk| hamiltonian_block(dk, params.lambda())).collect();
    Ok(KGOperator { grid: *grid, params: *params, wavenumbers, d, blocks })
}

/// Per-mode blocks of the positive-definite metric.
#[derive(Debug, Clone)]
pub struct KGMetric {
    grid: Grid1D,
    params: ModelParams,
    d: Vec<f64>,
    blocks: Vec<Block2>,
}

impl KGMetric {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn d_symbols(&self) -> &[f64] {
        &self.d
    }

    pub fn blocks(&self) -> &[Block2] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block2] {
        &mut self.blocks
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.eigenvalues())
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_metric(grid: &Grid1D, params: &ModelParams) -> Result<KGMetric> {
    require_periodic(grid)?;
    require_mass(params)?;
    let d = d_symbols(grid, params.mu());
    let blocks = d.iter().map(|&dk| metric_block(dk, params.lambda())).collect();
    Ok(KGMetric { grid: *grid, params: *params, d, blocks })
}

/// `max_k || H_k^† eta_k - eta_k H_k ||_F`.
pub fn check_pseudo_hermiticity(h: &KGOperator, eta: &KGMetric) -> Result<f64> {
    same_grid(&h.grid, &eta.grid)?;
    if h.params != eta.params {
        return Err(Error::Contract("operator and metric built from different parameters".into()));
    }
    Ok(h.blocks
        .iter()
        .zip(&eta.blocks)
        .map(|(&hk, &ek)| (hk.adjoint() * ek - ek * hk).frobenius_norm())
        .fold(0.0, f64::max))
}

/// Exact propagator `exp(-i H t)`, applied mode by mode.
pub fn evolve_exact(state: &KGState, h: &KGOperator, t: f64) -> Result<KGState> {
    same_grid(state.grid(), &h.grid)?;
    if state.lambda != h.params.lambda() {
        return Err(Error::Contract(format!(
            "state packed with lambda {} but operator uses {}",
            state.lambda,
            h.params.lambda()
        )));
    }
    let (mut s1, mut s2) = state.spectra();
    for (k, (&hk, &dk)) in h.blocks.iter().zip(&h.d).enumerate() {
        let w = dk.sqrt();
        let (c, s) = ((w * t).cos(), (w * t).sin());
        let u = Block2::identity().scale(Complex64::new(c, 0.0)) + hk.scale(-I * (s / w));
        let [a, b] = u.apply([s1[k], s2[k]]);
        s1[k] = a;
        s2[k] = b;
    }
    let grid = *state.grid();
    Ok(KGState {
        psi1: Field::from_parts(grid, ifft(&s1)),
        psi2: Field::from_parts(grid, ifft(&s2)),
        lambda: state.lambda,
    })
}

fn check_pair(a: &KGState, b: &KGState, eta: &KGMetric) -> Result<()> {
    same_grid(a.grid(), b.grid())?;
    same_grid(a.grid(), &eta.grid)?;
    if a.lambda != b.lambda || a.lambda != eta.params.lambda() {
        return Err(Error::Contract("states and metric use different lambda".into()));
    }
    Ok(())
}

/// `1/2 (<phi|psi> + <phi_dot | D^{-1} psi_dot>)`, the second term evaluated in
/// Fourier space. Real and positive for `a == b != 0`.
pub fn metric_inner_product(a: &KGState, b: &KGState, eta: &KGMetric) -> Result<Complex64> {
    check_pair(a, b, eta)?;
    let dx = a.grid().spacing();
    let n = a.grid().len() as f64;
    let direct: Complex64 = a.psi().values().iter().zip(b.psi().values()).map(|(x, y)| x.conj() * y).sum();
    let (fa, fb) = (fft(a.psi_dot().values()), fft(b.psi_dot().values()));
    let rate: Complex64 = fa.iter().zip(&fb).zip(&eta.d).map(|((x, y), dk)| x.conj() * y / *dk).sum();
    Ok(0.5 * (direct * dx + rate * (dx / n)))
}

/// `<Psi_a, eta Psi_b>` on the packed components. Equals
/// `lambda^2 * metric_inner_product(a, b)`.
pub fn block_metric_form(a: &KGState, b: &KGState, eta: &KGMetric) -> Result<Complex64> {
    check_pair(a, b, eta)?;
    let dx = a.grid().spacing();
    let n = a.grid().len() as f64;
    let (a1, a2) = a.spectra();
    let (b1, b2) = b.spectra();
    let sum: Complex64 = eta
        .blocks
        .iter()
        .enumerate()
        .map(|(k, ek)| {
            let eb = ek.apply([b1[k], b2[k]]);
            a1[k].conj() * eb[0] + a2[k].conj() * eb[1]
        })
        .sum();
    Ok(sum * (dx / n))
}
