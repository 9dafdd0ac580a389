use thiserror::Error;

use crate::telegraph::StabilityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller broke a shape or ordering contract (mismatched grids, lengths).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("time step {dt} violates stability (cfl ratio {cfl:.4}, dt_max {dt_max})", dt = .0.dt, cfl = .0.cfl_ratio, dt_max = .0.dt_max)]
    Unstable(StabilityReport),

    #[error("numerical blow-up: non-finite value after step {step}")]
    NumericalBlowup { step: usize },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("degenerate density: total mass {mass}")]
    DegenerateDensity { mass: f64 },

    #[error("grid does not resolve the kernel: {0}")]
    Resolution(String),

    #[error("{count} of {total} residuals sit at the discretization floor; refine the grid")]
    FloorDominated { count: usize, total: usize },
}
