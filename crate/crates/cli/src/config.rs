//! Experiment configuration, read from TOML in strict mode: unknown keys are
//! errors, missing keys take the defaults below.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hyperdiff::grid::Boundary;
use hyperdiff::telegraph::max_stable_dt;
use hyperdiff::{Grid1D, ModelParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Evolve,
    KgCheck,
    Mc,
    ResidualScan,
    Limits,
    Martingale,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::KgCheck => "kg-check",
            Self::Mc => "mc",
            Self::ResidualScan => "residual-scan",
            Self::Limits => "limits",
            Self::Martingale => "martingale",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Result tables as CSV plus the summary.
    #[default]
    Csv,
    /// Summary only.
    Summary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub kg: KgSpec,
    #[serde(default)]
    pub limits: LimitsSpec,
    #[serde(default)]
    pub martingale: MartingaleSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub lambda: f64,
    pub sigma: f64,
    pub mu: f64,
    /// Defaults to `sigma^2 / 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffusivity: Option<f64>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self { lambda: 0.5, sigma: 0.2, mu: 0.0, diffusivity: None }
    }
}

impl ParamsSpec {
    pub fn build(&self) -> Result<ModelParams> {
        let p = match self.diffusivity {
            Some(k) => ModelParams::with_diffusivity(self.lambda, self.sigma, self.mu, k),
            None => ModelParams::new(self.lambda, self.sigma, self.mu),
        };
        p.context("invalid [params]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySpec {
    Periodic,
    Reflecting,
    Absorbing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: BoundarySpec,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 512, x_min: -1.0, x_max: 1.0, boundary: BoundarySpec::Periodic }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D> {
        let boundary = match self.boundary {
            BoundarySpec::Periodic => Boundary::Periodic,
            BoundarySpec::Reflecting => Boundary::Reflecting,
            BoundarySpec::Absorbing => Boundary::Absorbing,
        };
        Grid1D::new(self.points, self.x_min, self.x_max, boundary).context("invalid [grid]")
    }
}

/// A step size or the keyword `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Keyword(String),
}

impl Default for DtSpec {
    fn default() -> Self {
        Self::Keyword("auto".into())
    }
}

impl DtSpec {
    /// `"auto"` picks the largest step the stability check accepts.
    pub fn resolve(&self, grid: &Grid1D, params: &ModelParams) -> Result<f64> {
        match self {
            Self::Fixed(dt) if dt.is_finite() && *dt > 0.0 => Ok(*dt),
            Self::Keyword(k) if k == "auto" => Ok(max_stable_dt(grid, params)),
            other => bail!("time.dt must be a positive number or \"auto\", got {other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub tau_final: f64,
    pub dt: DtSpec,
    /// Snapshot stride in steps; 0 keeps the initial and final states only.
    pub snapshot_every: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { tau_final: 1.0, dt: DtSpec::default(), snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Unit mass on the node nearest `center`.
    Point,
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub center: f64,
    /// Standard deviation for `gaussian`, half-width for `uniform`.
    pub width: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self { kind: InitialKind::Gaussian, center: 0.0, width: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub particles: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        Self { particles: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub lambdas: Vec<f64>,
    pub tau: f64,
    pub dz: f64,
    pub half_width: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self { lambdas: vec![2.0, 4.0, 8.0, 16.0], tau: 1.0, dz: 0.01, half_width: 20.0 }
    }
}

impl ScanSpec {
    pub fn z_grid(&self) -> Result<Grid1D> {
        if !(self.dz > 0.0 && self.half_width > 0.0) {
            bail!("scan.dz and scan.half_width must be positive");
        }
        let points = (2.0 * self.half_width / self.dz).round() as usize + 1;
        Grid1D::new(points, -self.half_width, self.half_width, Boundary::Absorbing).context("invalid [scan] grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KgSpec {
    pub modes: usize,
    pub length: f64,
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub t_final: f64,
    pub states: usize,
}

impl Default for KgSpec {
    fn default() -> Self {
        Self {
            modes: 64,
            length: 2.0 * std::f64::consts::PI,
            lambdas: vec![0.5, 1.0, 2.0],
            mus: vec![0.5, 1.0, 2.0],
            t_final: 10.0,
            states: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsSpec {
    /// Relaxation times compared against the heat kernel, largest first.
    pub lambdas: Vec<f64>,
    /// Standard deviation of the Gaussian start.
    pub width: f64,
    pub omega: f64,
}

impl Default for LimitsSpec {
    fn default() -> Self {
        Self { lambdas: vec![1.0, 1e-2, 1e-4], width: 0.1, omega: 1.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MartingaleDensity {
    Heat,
    Cauchy,
    Kg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MartingaleSpec {
    pub density: MartingaleDensity,
    pub center: f64,
    /// Heat-kernel time or Cauchy scale.
    pub scale: f64,
    pub x0: f64,
}

impl Default for MartingaleSpec {
    fn default() -> Self {
        Self { density: MartingaleDensity::Heat, center: 0.0, scale: 0.25, x0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Check the `experiment` key against the subcommand and fill it in.
    pub fn for_experiment(mut self, kind: ExperimentKind) -> Result<Self> {
        match self.experiment {
            Some(k) if k != kind => {
                bail!("config is for experiment {:?} but the subcommand is {:?}", k.name(), kind.name())
            }
            _ => self.experiment = Some(kind),
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
