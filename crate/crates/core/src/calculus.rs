//! Horizontal projector, connector, covariant derivative, horizontal lifts,
//! curvature and difference operators of a connection in Christoffel form.
//!
//! Conventions: `(∇_u W)ᵏ = uⁱ∂ᵢWᵏ − Γᵏᵢ(W)uⁱ`, geodesics satisfy
//! `c̈ᵏ = Γᵏᵢ(ċ)ċⁱ`. Classical Christoffel symbols therefore enter with the
//! opposite sign: `Γᵏᵢ(v) = −Γᵏᵢⱼ(classical)·vʲ`.

use crate::expr::diff::{add, mul, sub};
use crate::expr::{parse, EvalError, Expr, Var};
use crate::geometry::{sample_vector, Chart, ChristoffelConnection, GeometryError, PointedVector};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A vector field on the chart, with components depending on `x` only.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(dimension: usize, components: Vec<Expr>) -> Result<Self, GeometryError> {
        if components.len() != dimension {
            return Err(GeometryError::DimensionMismatch {
                expected: dimension,
                found: components.len(),
            });
        }
        for c in &components {
            if c.uses_fiber() {
                return Err(GeometryError::FiberDependentField {
                    component: c.to_string(),
                });
            }
            if !c.fits_dimension(dimension) {
                return Err(GeometryError::VariableOutOfRange {
                    component: c.to_string(),
                    dimension,
                });
            }
        }
        Ok(VectorField { components })
    }

    pub fn parse<S: AsRef<str>>(dimension: usize, sources: &[S]) -> Result<Self, GeometryError> {
        let components = sources
            .iter()
            .map(|s| {
                parse(s.as_ref(), dimension).map_err(|source| GeometryError::Parse {
                    component: s.as_ref().to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        VectorField::new(dimension, components)
    }

    /// The constant field `e_i` (0-based `i`).
    pub fn coordinate(dimension: usize, i: usize) -> Self {
        VectorField {
            components: (0..dimension)
                .map(|k| Expr::num(if k == i { 1.0 } else { 0.0 }))
                .collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| c.eval(x, &[])).collect()
    }
}

/// A tangent vector `(X, Y)` to TM at the point `base`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTMVector {
    pub base: PointedVector,
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
}

/// The projector `(X, Y) ↦ (X, Γ(x,v)X)` onto the horizontal space, as a
/// `2n × 2n` matrix.
pub fn horizontal_projector(
    conn: &ChristoffelConnection,
    at: &PointedVector,
) -> Result<DMatrix<f64>, EvalError> {
    let n = conn.dimension();
    let gamma = conn.gamma(&at.x, &at.v)?;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).fill_with_identity();
    h.view_mut((n, 0), (n, n)).copy_from(&gamma);
    Ok(h)
}

/// `κ(z) = Y − Γ(x,v)X`.
pub fn connector(conn: &ChristoffelConnection, z: &TTMVector) -> Result<Vec<f64>, EvalError> {
    let gx = conn.apply(&z.base.x, &z.base.v, &z.horizontal)?;
    Ok(z.vertical.iter().zip(gx.iter()).map(|(y, g)| y - g).collect())
}

/// `∇_u W` at `at`.
pub fn covariant_derivative(
    conn: &ChristoffelConnection,
    u: &[f64],
    field: &VectorField,
    at: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let n = conn.dimension();
    let w = field.eval(at)?;
    let gu = conn.apply(at, &w, u)?;
    let mut out = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, ui) in u.iter().enumerate() {
            if *ui != 0.0 {
                acc += ui * field.components[k].differentiate(Var::x(i + 1)).eval(at, &[])?;
            }
        }
        *o = acc - gu[k];
    }
    Ok(out)
}

/// `Ū = (U(x), Γ(x,v)U(x))` at `at`.
pub fn horizontal_lift(
    conn: &ChristoffelConnection,
    field: &VectorField,
    at: &PointedVector,
) -> Result<TTMVector, EvalError> {
    let u = field.eval(&at.x)?;
    let gu = conn.apply(&at.x, &at.v, &u)?;
    Ok(TTMVector {
        base: at.clone(),
        horizontal: u,
        vertical: gu.iter().copied().collect(),
    })
}

/// `∇_c̈` form of the geodesic defect: `κ` of the second-order lift of a
/// curve with velocity `v` and acceleration `acc` at `x`, i.e.
/// `acc − Γ(x,v)v`.
pub fn geodesic_defect(
    conn: &ChristoffelConnection,
    x: &[f64],
    v: &[f64],
    acc: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let gv = conn.apply(x, v, v)?;
    Ok(acc.iter().zip(gv.iter()).map(|(a, g)| a - g).collect())
}

/// Components of the lifted field `Ū` on TM as expressions in `(x, y)`.
fn lifted(conn: &ChristoffelConnection, field: &VectorField) -> Vec<Expr> {
    let n = conn.dimension();
    let mut out: Vec<Expr> = field.components.clone();
    for k in 0..n {
        let mut acc = Expr::num(0.0);
        for i in 0..n {
            acc = add(acc, mul(conn.entry(k, i).clone(), field.components[i].clone()));
        }
        out.push(acc);
    }
    out
}

fn tm_var(n: usize, beta: usize) -> Var {
    if beta < n {
        Var::x(beta + 1)
    } else {
        Var::y(beta - n + 1)
    }
}

/// Values and Jacobian (with respect to `(x, y)`) of a field on TM.
fn eval_with_jacobian(
    comps: &[Expr],
    n: usize,
    x: &[f64],
    y: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>), EvalError> {
    let m = comps.len();
    let mut val = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, 2 * n);
    for (a, c) in comps.iter().enumerate() {
        val[a] = c.eval(x, y)?;
        for beta in 0..2 * n {
            let d = c.differentiate(tm_var(n, beta));
            if !d.is_zero() {
                jac[(a, beta)] = d.eval(x, y)?;
            }
        }
    }
    Ok((val, jac))
}

/// `R(U,V)w = κ([V̄, Ū]_w)`, with the Lie bracket of the lifted fields
/// computed from symbolic derivatives.
pub fn curvature_bracket(
    conn: &ChristoffelConnection,
    u: &VectorField,
    v: &VectorField,
    w: &PointedVector,
) -> Result<Vec<f64>, EvalError> {
    let n = conn.dimension();
    let (ub, dub) = eval_with_jacobian(&lifted(conn, u), n, &w.x, &w.v)?;
    let (vb, dvb) = eval_with_jacobian(&lifted(conn, v), n, &w.x, &w.v)?;
    // [A, B] = DB·A − DA·B with A = V̄, B = Ū
    let bracket = &dub * &vb - &dvb * &ub;
    connector(
        conn,
        &TTMVector {
            base: w.clone(),
            horizontal: bracket.rows(0, n).iter().copied().collect(),
            vertical: bracket.rows(n, n).iter().copied().collect(),
        },
    )
}

fn directional(u: &[Expr], f: &Expr) -> Expr {
    let mut acc = Expr::num(0.0);
    for (i, ui) in u.iter().enumerate() {
        acc = add(acc, mul(ui.clone(), f.differentiate(Var::x(i + 1))));
    }
    acc
}

/// Symbolic `∇_U W` as a field on M.
fn nabla_field(conn: &ChristoffelConnection, u: &[Expr], w: &[Expr]) -> Vec<Expr> {
    let n = conn.dimension();
    (0..n)
        .map(|k| {
            let mut gamma_u = Expr::num(0.0);
            for (i, ui) in u.iter().enumerate() {
                let g = conn.entry(k, i).substitute(None, Some(w));
                gamma_u = add(gamma_u, mul(g, ui.clone()));
            }
            sub(directional(u, &w[k]), gamma_u)
        })
        .collect()
}

/// Symbolic derivative along `U` of a field `Z` regarded as vertical over the
/// section `W`: `U·∂Z − ∂_y(Γ(x,y)U)|_{y=W}·Z`.
fn nabla_along(conn: &ChristoffelConnection, u: &[Expr], z: &[Expr], w: &[Expr]) -> Vec<Expr> {
    let n = conn.dimension();
    (0..n)
        .map(|k| {
            let mut lin = Expr::num(0.0);
            for (i, ui) in u.iter().enumerate() {
                for (m, zm) in z.iter().enumerate() {
                    let d = conn.entry(k, i).differentiate(Var::y(m + 1));
                    if d.is_zero() {
                        continue;
                    }
                    let d = d.substitute(None, Some(w));
                    lin = add(lin, mul(mul(d, ui.clone()), zm.clone()));
                }
            }
            sub(directional(u, &z[k]), lin)
        })
        .collect()
}

fn lie_bracket(u: &[Expr], v: &[Expr]) -> Vec<Expr> {
    (0..u.len())
        .map(|k| sub(directional(u, &v[k]), directional(v, &u[k])))
        .collect()
}

fn eval_field(comps: &[Expr], at: &[f64]) -> Result<Vec<f64>, EvalError> {
    comps.iter().map(|c| c.eval(at, &[])).collect()
}

/// `R(U,V)W = ∇_U∇_V W − ∇_V∇_U W − ∇_{[U,V]}W` at `at`.
///
/// The inner derivatives `∇_V W`, `∇_U W` and `∇_{[U,V]}W` use the
/// connection itself. The outer derivatives act on `∇_V W` as a vertical
/// field over the section `W`, so they use the fiber derivative of `Γ` at
/// `W`. For connections linear in the fiber this is the ordinary
/// `∇_U(∇_V W)`, and in general it matches [`curvature_bracket`] at
/// `w = W(at)`. See [`curvature_via_nabla_literal`] for the reading that
/// treats `∇_V W` as a plain field on M.
pub fn curvature_via_nabla(
    conn: &ChristoffelConnection,
    u: &VectorField,
    v: &VectorField,
    w: &VectorField,
    at: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let (uc, vc, wc) = (&u.components, &v.components, &w.components);
    let nv = nabla_field(conn, vc, wc);
    let nu = nabla_field(conn, uc, wc);
    let first = eval_field(&nabla_along(conn, uc, &nv, wc), at)?;
    let second = eval_field(&nabla_along(conn, vc, &nu, wc), at)?;
    let third = eval_field(&nabla_field(conn, &lie_bracket(uc, vc), wc), at)?;
    Ok((0..first.len())
        .map(|k| first[k] - second[k] - third[k])
        .collect())
}

/// The same formula with every `∇` applied to fields on M, i.e. the outer
/// derivative evaluates `Γ` at `∇_V W` rather than linearizing at `W`.
/// Coincides with [`curvature_via_nabla`] for linear connections only.
pub fn curvature_via_nabla_literal(
    conn: &ChristoffelConnection,
    u: &VectorField,
    v: &VectorField,
    w: &VectorField,
    at: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let (uc, vc, wc) = (&u.components, &v.components, &w.components);
    let nv = nabla_field(conn, vc, wc);
    let nu = nabla_field(conn, uc, wc);
    let first = eval_field(&nabla_field(conn, uc, &nv), at)?;
    let second = eval_field(&nabla_field(conn, vc, &nu), at)?;
    let third = eval_field(&nabla_field(conn, &lie_bracket(uc, vc), wc), at)?;
    Ok((0..first.len())
        .map(|k| first[k] - second[k] - third[k])
        .collect())
}

/// `D(u, v) = ∇̄_u v − ∇_u v = (Γ(x,v) − Γ̄(x,v))u`, where `nabla` carries
/// `Γ` and `nabla_bar` carries `Γ̄`.
pub fn difference_operator(
    nabla: &ChristoffelConnection,
    nabla_bar: &ChristoffelConnection,
    u: &[f64],
    v: &PointedVector,
) -> Result<Vec<f64>, EvalError> {
    let g = nabla.apply(&v.x, &v.v, u)?;
    let gb = nabla_bar.apply(&v.x, &v.v, u)?;
    Ok(g.iter().zip(gb.iter()).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternatingReport {
    pub alternating: bool,
    /// Largest `‖D(v, v)‖∞` seen.
    pub max_defect: f64,
    /// First sampled `(x, v)` with `‖D(v, v)‖∞ > tol`.
    pub witness: Option<PointedVector>,
}

/// Samples `D(v, v)` at seeded random `(x, v)`; alternating when every
/// sample is within `tol`.
pub fn is_alternating(
    nabla: &ChristoffelConnection,
    nabla_bar: &ChristoffelConnection,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<AlternatingReport, EvalError> {
    let chart: &Chart = nabla.chart();
    let n = chart.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AlternatingReport {
        alternating: true,
        max_defect: 0.0,
        witness: None,
    };
    for _ in 0..samples {
        let x = chart.sample_point(&mut rng);
        let v = sample_vector(&mut rng, n, 2.0);
        let at = PointedVector::new(x, v.clone());
        let d = difference_operator(nabla, nabla_bar, &v, &at)?;
        let size = d.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        report.max_defect = report.max_defect.max(size);
        if size > tol && report.witness.is_none() {
            report.alternating = false;
            report.witness = Some(at);
        }
    }
    Ok(report)
}
