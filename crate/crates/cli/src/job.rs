//! Job-file schema. Unknown keys are rejected at every level.

use crate::error::CliError;
use serde::Deserialize;
use spraylab::geometry::{geodesic_spray_of, Chart, ChristoffelConnection, Interval, PointedVector, Spray};
use spraylab::integrator::IntegratorOptions;
use spraylab::probes::{DisprisonmentConfig, ProbesConfig, PseudoconvexityConfig};
use spraylab::torsion::TorsionParams;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub dimension: usize,
    /// One `[lower, upper]` pair per axis; `null` marks an infinite end.
    #[serde(default)]
    pub bounds: Option<Vec<[Option<f64>; 2]>>,
    #[serde(default)]
    pub spray: Option<Vec<String>>,
    /// Christoffel form `Γᵏᵢ(x, y)`, one row per `k`.
    #[serde(default)]
    pub gamma: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub options: Option<IntegratorOptions>,
    #[serde(default)]
    pub output: Option<OutputBlock>,
    #[serde(default)]
    pub integrate: Option<IntegrateBlock>,
    #[serde(default)]
    pub plume: Option<PlumeBlock>,
    #[serde(default)]
    pub classify: Option<ClassifyBlock>,
    #[serde(default)]
    pub covderiv: Option<CovderivBlock>,
    #[serde(default)]
    pub curvature: Option<CurvatureBlock>,
    #[serde(default)]
    pub torsion: Option<TorsionBlock>,
    #[serde(default)]
    pub probe: Option<ProbeBlock>,
    #[serde(default)]
    pub connect: Option<ConnectBlock>,
    #[serde(default)]
    pub stability: Option<StabilityBlock>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Prepended to every output file name.
    #[serde(default)]
    pub prefix: Option<String>,
}

/// `t` for `[0, t]`, or an explicit `[t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Forward(f64),
    Range([f64; 2]),
}

impl Horizon {
    pub fn range(self) -> (f64, f64) {
        match self {
            Horizon::Forward(t) => (t.min(0.0), t.max(0.0)),
            Horizon::Range([a, b]) => (a, b),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateBlock {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub horizon: Horizon,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlumeBlock {
    pub p: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    #[serde(default)]
    pub a_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    /// `ε` values of the drawn a-curves.
    #[serde(default)]
    pub a_curve_eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyBlock {
    #[serde(default)]
    pub candidates: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovderivBlock {
    /// Direction field `U(x)`.
    pub u: Vec<String>,
    /// Differentiated field `W(x)`.
    pub w: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureBlock {
    pub u: Vec<String>,
    pub v: Vec<String>,
    pub w: Vec<String>,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    /// Random chart points, in addition to `points`; needs a seed.
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorsionBlock {
    #[serde(default)]
    pub points: Option<Vec<PointedVector>>,
    /// Random `(x, v)` pairs, in addition to `points`; needs a seed.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "default_radius")]
    pub velocity_radius: f64,
    #[serde(default)]
    pub params: Option<TorsionParams>,
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateBlock {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub span: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    #[serde(default)]
    pub disprisonment: Option<DisprisonmentConfig>,
    #[serde(default)]
    pub pseudoconvexity: Option<PseudoconvexityConfig>,
    #[serde(default)]
    pub conjugate: Option<ConjugateBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectBlock {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub epsilon: f64,
    #[serde(default = "default_starts")]
    pub multistart: usize,
}

fn default_starts() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    pub bump: Vec<String>,
    pub amplitudes: Vec<f64>,
    pub probes: ProbesConfig,
}

impl JobFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read job file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::input(format!("invalid job file: {e}")).at_line(e.line(), e.column())
        })
    }

    pub fn chart(&self) -> Result<Chart, CliError> {
        let bounds = self.bounds.as_ref().map(|b| {
            b.iter()
                .map(|[lo, hi]| Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
                .collect()
        });
        Ok(Chart::new(self.dimension, bounds)?)
    }

    pub fn connection(&self) -> Result<Option<ChristoffelConnection>, CliError> {
        match &self.gamma {
            Some(rows) => Ok(Some(ChristoffelConnection::parse(self.chart()?, rows)?)),
            None => Ok(None),
        }
    }

    /// The job's spray, or the geodesic spray of its connection.
    pub fn spray(&self) -> Result<Spray, CliError> {
        match (&self.spray, self.connection()?) {
            (Some(src), _) => Ok(Spray::parse(self.chart()?, src)?),
            (None, Some(conn)) => Ok(geodesic_spray_of(&conn)),
            (None, None) => Err(CliError::input("job needs a `spray` or a `gamma` entry")),
        }
    }

    pub fn require_connection(&self) -> Result<ChristoffelConnection, CliError> {
        self.connection()?
            .ok_or_else(|| CliError::input("this command needs a `gamma` entry"))
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        self.options.unwrap_or_default()
    }
}

pub fn block<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block
        .as_ref()
        .ok_or_else(|| CliError::input(format!("job is missing the `{name}` block")))
}
