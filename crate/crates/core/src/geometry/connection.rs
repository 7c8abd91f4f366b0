use super::{Chart, GeometryError, Spray};
use crate::expr::{parse, EvalError, Expr};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A (possibly nonlinear) connection in Christoffel form.
///
/// Entry `(k, i)` is `Γᵏᵢ(x, v)`, with the fiber variables `y` standing for
/// `v`. Horizontal vectors at `(x, v)` are `(u, Γ(x,v)u)`, and the covariant
/// derivative reads `(∇_u W)ᵏ = uⁱ∂ᵢWᵏ − Γᵏᵢ(W)uⁱ`.
#[derive(Debug, Clone)]
pub struct ChristoffelConnection {
    chart: Chart,
    /// Row-major, `n × n`.
    entries: Arc<[Expr]>,
}

impl ChristoffelConnection {
    pub fn new(chart: Chart, rows: Vec<Vec<Expr>>) -> Result<Self, GeometryError> {
        let n = chart.dimension();
        if rows.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for e in row {
                if !e.fits_dimension(n) {
                    return Err(GeometryError::VariableOutOfRange {
                        component: e.to_string(),
                        dimension: n,
                    });
                }
                entries.push(e);
            }
        }
        Ok(ChristoffelConnection {
            chart,
            entries: entries.into(),
        })
    }

    pub fn parse<S: AsRef<str>>(chart: Chart, rows: &[Vec<S>]) -> Result<Self, GeometryError> {
        let n = chart.dimension();
        let rows = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        parse(s.as_ref(), n).map_err(|source| GeometryError::Parse {
                            component: s.as_ref().to_string(),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        ChristoffelConnection::new(chart, rows)
    }

    /// The flat connection `Γ = 0`.
    pub fn flat(chart: Chart) -> Self {
        let n = chart.dimension();
        ChristoffelConnection {
            chart,
            entries: vec![Expr::num(0.0); n * n].into(),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dimension(&self) -> usize {
        self.chart.dimension()
    }

    pub fn entry(&self, k: usize, i: usize) -> &Expr {
        &self.entries[k * self.dimension() + i]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    /// `Γ(x, v)` as a matrix.
    pub fn gamma(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                m[(k, i)] = self.entry(k, i).eval(x, v)?;
            }
        }
        Ok(m)
    }

    /// `Γ(x, v)u`.
    pub fn apply(&self, x: &[f64], v: &[f64], u: &[f64]) -> Result<DVector<f64>, EvalError> {
        Ok(self.gamma(x, v)? * DVector::from_column_slice(u))
    }
}

/// The geodesic spray `Ŝᵏ(x,y) = Σᵢ Γᵏᵢ(x,y)·yᵢ`.
///
/// The sum is a plain left fold without simplification, so evaluating it
/// reproduces the direct floating-point sum bit for bit.
pub fn geodesic_spray_of(conn: &ChristoffelConnection) -> Spray {
    let n = conn.dimension();
    let components = (0..n)
        .map(|k| {
            let mut acc = Expr::mul(conn.entry(k, 0).clone(), Expr::y(1));
            for i in 1..n {
                acc = Expr::add(acc, Expr::mul(conn.entry(k, i).clone(), Expr::y(i + 1)));
            }
            acc
        })
        .collect();
    Spray::new(conn.chart().clone(), components).expect("connection entries fit the chart")
}
