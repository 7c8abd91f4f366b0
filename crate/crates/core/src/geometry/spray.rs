use super::{Chart, GeometryError};
use crate::expr::{parse, EvalError, Expr, VarKind};
use std::fmt;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityKind {
    /// `S(x, ay) = a^m S(x, y)` for every real `a` (and `a = 0` when `m ≥ 2`).
    Complete,
    /// The same identity for `a > 0` only.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Homogeneity {
    pub kind: HomogeneityKind,
    pub degree: f64,
}

impl fmt::Display for Homogeneity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.kind {
            HomogeneityKind::Complete => "completely",
            HomogeneityKind::Positive => "positively",
        };
        write!(f, "{prefix}_h({})", self.degree)
    }
}

/// Symbolic first derivatives of the spray components, built on first use.
#[derive(Debug)]
struct Derivatives {
    /// `dx[k][j] = ∂S^k/∂x_j`
    dx: Vec<Vec<Expr>>,
    /// `dy[k][j] = ∂S^k/∂y_j`
    dy: Vec<Vec<Expr>>,
}

/// A spray on a single chart: the second-order equation `ẍ = S(x, ẋ)`.
///
/// Cloning is cheap; components and the derivative cache are shared.
#[derive(Debug, Clone)]
pub struct Spray {
    chart: Chart,
    components: Arc<[Expr]>,
    declared: Option<Homogeneity>,
    derivatives: Arc<OnceLock<Derivatives>>,
}

impl Spray {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self, GeometryError> {
        let n = chart.dimension();
        if components.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: components.len(),
            });
        }
        for c in &components {
            if !c.fits_dimension(n) {
                return Err(GeometryError::VariableOutOfRange {
                    component: c.to_string(),
                    dimension: n,
                });
            }
        }
        Ok(Spray {
            chart,
            components: components.into(),
            declared: None,
            derivatives: Arc::new(OnceLock::new()),
        })
    }

    /// Parse one DSL string per component.
    pub fn parse<S: AsRef<str>>(chart: Chart, sources: &[S]) -> Result<Self, GeometryError> {
        let n = chart.dimension();
        let components = sources
            .iter()
            .map(|s| {
                parse(s.as_ref(), n).map_err(|source| GeometryError::Parse {
                    component: s.as_ref().to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Spray::new(chart, components)
    }

    /// Attach a declared homogeneity after verifying it by sampling at
    /// tolerance 1e-8.
    pub fn with_declared_homogeneity(mut self, declared: Homogeneity) -> Result<Self, GeometryError> {
        let report = super::classify::check_degree(&self, declared, 64, 1e-8, 0x5eed);
        if let Some(w) = report {
            return Err(GeometryError::DeclaredHomogeneity {
                declared: declared.to_string(),
                x: w.x,
                y: w.y,
                a: w.a,
            });
        }
        self.declared = Some(declared);
        Ok(self)
    }

    pub fn declared_homogeneity(&self) -> Option<Homogeneity> {
        self.declared
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dimension(&self) -> usize {
        self.chart.dimension()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// `S(x, y)` into `out`.
    pub fn eval_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(self.components.iter()) {
            *o = c.eval(x, y)?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut out = vec![0.0; self.dimension()];
        self.eval_into(x, y, &mut out)?;
        Ok(out)
    }

    fn derivatives(&self) -> &Derivatives {
        self.derivatives.get_or_init(|| {
            let n = self.dimension();
            Derivatives {
                dx: self
                    .components
                    .iter()
                    .map(|c| c.gradient(VarKind::Chart, n))
                    .collect(),
                dy: self
                    .components
                    .iter()
                    .map(|c| c.gradient(VarKind::Fiber, n))
                    .collect(),
            }
        })
    }

    /// Row-major Jacobians `(∂S/∂x, ∂S/∂y)` at `(x, y)`.
    pub fn jacobians(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
        let n = self.dimension();
        let d = self.derivatives();
        let mut jx = vec![0.0; n * n];
        let mut jy = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                jx[k * n + j] = d.dx[k][j].eval(x, y)?;
                jy[k * n + j] = d.dy[k][j].eval(x, y)?;
            }
        }
        Ok((jx, jy))
    }

    /// Symbolic `∂S^k/∂y_j`.
    pub fn fiber_derivative(&self, k: usize, j: usize) -> &Expr {
        &self.derivatives().dy[k][j]
    }

    /// `S + amplitude·bump`, componentwise. Amplitude zero returns `self`.
    pub fn perturbed(&self, bump: &[Expr], amplitude: f64) -> Result<Spray, GeometryError> {
        if bump.len() != self.dimension() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dimension(),
                found: bump.len(),
            });
        }
        if amplitude == 0.0 {
            return Ok(self.clone());
        }
        let components = self
            .components
            .iter()
            .zip(bump)
            .map(|(s, b)| Expr::add(s.clone(), Expr::mul(Expr::num(amplitude), b.clone())))
            .collect();
        Spray::new(self.chart.clone(), components)
    }
}
