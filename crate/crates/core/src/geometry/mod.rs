//! Charts, sprays and Christoffel connections.
//!
//! Everything lives in a single chart: an open axis-aligned box in ℝⁿ with
//! induced coordinates `(x, y)` on the tangent bundle.

pub(crate) mod classify;
mod connection;
mod spray;

pub use classify::{
    classify_connection, classify_spray_homogeneity, ConnectionFlags, ConnectionWitness,
    HomogeneityClass,
    HomogeneityReport, HomogeneityWitness,
};
pub use connection::{geodesic_spray_of, ChristoffelConnection};
pub use spray::{Homogeneity, HomogeneityKind, Spray};

use crate::expr::{EvalError, ParseError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bounds on axis {axis} are empty: lower {lower} is not below upper {upper}")]
    EmptyBounds { axis: usize, lower: f64, upper: f64 },
    #[error("component {component}: {source}")]
    Parse {
        component: String,
        #[source]
        source: ParseError,
    },
    #[error("component {component} uses a variable beyond dimension {dimension}")]
    VariableOutOfRange { component: String, dimension: usize },
    #[error("vector field component {component} depends on fiber variables")]
    FiberDependentField { component: String },
    #[error("declared homogeneity {declared} fails at x={x:?}, y={y:?}, a={a}")]
    DeclaredHomogeneity {
        declared: String,
        x: Vec<f64>,
        y: Vec<f64>,
        a: f64,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One axis of a chart box. Infinite endpoints are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower < value && value < self.upper
    }

    /// A draw from a bounded window inside the interval.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (true, true) => self.lower + (self.upper - self.lower) * (0.01 + 0.98 * u),
            (true, false) => self.lower + 0.1 + 2.9 * u,
            (false, true) => self.upper - 0.1 - 2.9 * u,
            (false, false) => -2.0 + 4.0 * u,
        }
    }
}

/// The coordinate domain: an open box in ℝⁿ (all of ℝⁿ when unbounded).
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    dimension: usize,
    bounds: Option<Vec<Interval>>,
}

impl Chart {
    pub fn euclidean(dimension: usize) -> Result<Self, GeometryError> {
        Chart::new(dimension, None)
    }

    pub fn new(dimension: usize, bounds: Option<Vec<Interval>>) -> Result<Self, GeometryError> {
        if dimension == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if let Some(b) = &bounds {
            if b.len() != dimension {
                return Err(GeometryError::DimensionMismatch {
                    expected: dimension,
                    found: b.len(),
                });
            }
            for (axis, iv) in b.iter().enumerate() {
                if !(iv.lower < iv.upper) {
                    return Err(GeometryError::EmptyBounds {
                        axis: axis + 1,
                        lower: iv.lower,
                        upper: iv.upper,
                    });
                }
            }
        }
        Ok(Chart { dimension, bounds })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> Option<&[Interval]> {
        self.bounds.as_deref()
    }

    pub fn axis(&self, i: usize) -> Interval {
        self.bounds
            .as_ref()
            .map(|b| b[i])
            .unwrap_or(Interval::REAL_LINE)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension
            && match &self.bounds {
                None => x.iter().all(|v| v.is_finite()),
                Some(b) => b.iter().zip(x).all(|(iv, v)| iv.contains(*v)),
            }
    }

    /// Random point from a bounded window of the chart, used by the sampled
    /// classifiers and probes.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dimension).map(|i| self.axis(i).sample(rng)).collect()
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<(), GeometryError> {
        if v.len() == self.dimension {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                expected: self.dimension,
                found: v.len(),
            })
        }
    }
}

/// A tangent vector `v` at a chart point `x`, i.e. a point of TM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointedVector {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PointedVector {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        PointedVector { x, v }
    }

    pub fn dimension(&self) -> usize {
        self.x.len()
    }
}

/// `count` seeded draws of `(x, v)` with `x` from the chart window and `v`
/// from the cube `[-radius, radius]ⁿ`.
pub fn sample_pointed_vectors(chart: &Chart, count: usize, radius: f64, seed: u64) -> Vec<PointedVector> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = chart.sample_point(&mut rng);
            let v = sample_vector(&mut rng, chart.dimension(), radius);
            PointedVector::new(x, v)
        })
        .collect()
}

/// Uniform draw from the cube `[-radius, radius]ⁿ`.
pub(crate) fn sample_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|_| radius * (2.0 * rng.gen::<f64>() - 1.0)).collect()
}
