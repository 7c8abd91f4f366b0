//! The torsion-free connection of a spray and generalized torsion.
//!
//! At a nonzero `w ∈ T_pM` the horizontal space is assembled from `n`
//! generators. Along `w` itself the generator is the second-order lift of the
//! geodesic `c_w`, `(w, c̈_w(0))`. For directions `u ⊥ w` it is
//! `(u, ½ δẍ_u(0))`, where `δx_u` is the flow differential along `c_w` seeded
//! with the vertical lift of `u`. Both accelerations are recovered from the
//! numerical flow by symmetric differences with one Richardson step, and
//! `Γ̂` is read off the graph `{(X, Γ̂X)}`.

use crate::expmap::{eps_domain_on_grid, tight_options, ExpError};
use crate::expr::EvalError;
use crate::geometry::{geodesic_spray_of, Chart, ChristoffelConnection, GeometryError, PointedVector, Spray};
use crate::integrator::{integrate_flow_differentials, integrate_geodesic, IntegrationError, IntegratorOptions};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TorsionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Exp(#[from] ExpError),
    #[error("geodesic of {v:?} does not exist on [-{h}, {h}]")]
    ShortGeodesic { v: Vec<f64>, h: f64 },
    #[error("no admissible ε_v at v = {v:?}: the exponential domain estimate is empty")]
    NoAdmissibleEpsilon { v: Vec<f64> },
    #[error("spray does not vanish on the zero section (Ŝ(x,0) = {value:?}); no compatible Γ̂ extends to v = 0")]
    ZeroSection { value: Vec<f64> },
    #[error("horizontal generators at v = {v:?} are not a graph over the base (singular X-block); the difference step is too coarse")]
    SingularGenerators { v: Vec<f64> },
}

/// How `ε_v` is chosen; only its size matters, through the difference step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", deny_unknown_fields)]
pub enum EpsilonRule {
    /// `min(cap, fraction·ε̂)` with `ε̂` from the sampled exp domain at radius `‖v‖`.
    DomainFraction { cap: f64, fraction: f64 },
    Fixed { value: f64 },
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::DomainFraction {
            cap: 0.1,
            fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorsionParams {
    /// Difference step; `1e-3·(1+‖v‖)` when `None`. Always capped at `ε_v/4`.
    pub step: Option<f64>,
    pub epsilon: EpsilonRule,
    /// Apply one Richardson step over `h, h/2`.
    pub richardson: bool,
    pub probe_count: usize,
    pub seed: u64,
    pub options: IntegratorOptions,
}

impl Default for TorsionParams {
    fn default() -> Self {
        TorsionParams {
            step: None,
            epsilon: EpsilonRule::default(),
            richardson: true,
            probe_count: 2,
            seed: 0,
            options: tight_options(),
        }
    }
}

impl TorsionParams {
    fn epsilon_v(&self, spray: &Spray, x: &[f64], v: &[f64]) -> Result<f64, TorsionError> {
        match self.epsilon {
            EpsilonRule::Fixed { value } => Ok(value.abs()),
            EpsilonRule::DomainFraction { cap, fraction } => {
                let radius = norm(v);
                let grid_max = if fraction > 0.0 { cap / fraction } else { cap };
                let estimate = eps_domain_on_grid(spray, x, radius, self.probe_count, self.seed, grid_max, &self.options)?;
                Ok(cap.min(fraction * estimate))
            }
        }
    }

    fn difference_step(&self, spray: &Spray, x: &[f64], v: &[f64]) -> Result<f64, TorsionError> {
        let eps = self.epsilon_v(spray, x, v)?;
        if !(eps > 0.0) {
            return Err(TorsionError::NoAdmissibleEpsilon { v: v.to_vec() });
        }
        let base = self.step.unwrap_or(1e-3 * (1.0 + norm(v)));
        Ok(base.min(eps / 4.0))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Orthonormal completion of `w` by Gram–Schmidt against the coordinate basis.
fn complement(w: &[f64]) -> Vec<Vec<f64>> {
    let n = w.len();
    let scale = norm(w);
    let mut basis: Vec<Vec<f64>> = vec![w.iter().map(|c| c / scale).collect()];
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for b in &basis {
            let dot: f64 = e.iter().zip(b).map(|(a, b)| a * b).sum();
            e.iter_mut().zip(b).for_each(|(a, b)| *a -= dot * b);
        }
        let len = norm(&e);
        if len > 0.5 {
            e.iter_mut().for_each(|c| *c /= len);
            basis.push(e);
        }
    }
    basis.remove(0);
    basis
}

fn extrapolate(coarse: Vec<f64>, fine: Vec<f64>, richardson: bool) -> Vec<f64> {
    if !richardson {
        return fine;
    }
    coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

fn gamma_off_zero(spray: &Spray, x: &[f64], w: &[f64], params: &TorsionParams) -> Result<DMatrix<f64>, TorsionError> {
    let n = spray.dimension();
    let h = params.difference_step(spray, x, w)?;
    let mut options = params.options;
    options.max_step = Some(h / 8.0);
    let base = integrate_geodesic(spray, &PointedVector::new(x.to_vec(), w.to_vec()), (-h, h), &options)?;
    if base.t_minus() != -h || base.t_plus() != h {
        return Err(TorsionError::ShortGeodesic { v: w.to_vec(), h });
    }
    let steps = [h, h / 2.0];

    let velocity = |t: f64| base.state_at(t).expect("inside the base domain").1;
    let along: Vec<Vec<f64>> = steps
        .iter()
        .map(|&s| {
            let (plus, minus) = (velocity(s), velocity(-s));
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * s)).collect()
        })
        .collect();
    let mut columns_x = vec![w.to_vec()];
    let [coarse, fine]: [Vec<f64>; 2] = along.try_into().expect("two steps");
    let mut columns_y = vec![extrapolate(coarse, fine, params.richardson)];

    let complement = complement(w);
    let seeds: Vec<(Vec<f64>, Vec<f64>)> = complement.iter().map(|u| (vec![0.0; n], u.clone())).collect();
    let variations = integrate_flow_differentials(&base, &seeds)?;
    for (u, fd) in complement.into_iter().zip(variations) {
        let position = |t: f64| fd.at(t).expect("inside the base domain").0;
        let halves: Vec<Vec<f64>> = steps
            .iter()
            .map(|&s| {
                let (plus, minus) = (position(s), position(-s));
                plus.iter().zip(&minus).map(|(p, m)| (p + m) / (2.0 * s * s)).collect()
            })
            .collect();
        let [coarse, fine]: [Vec<f64>; 2] = halves.try_into().expect("two steps");
        columns_y.push(extrapolate(coarse, fine, params.richardson));
        columns_x.push(u);
    }

    let to_matrix = |cols: &[Vec<f64>]| DMatrix::from_fn(n, n, |r, c| cols[c][r]);
    let xs = to_matrix(&columns_x);
    let ys = to_matrix(&columns_y);
    let inverse = xs
        .try_inverse()
        .filter(|m| m.iter().all(|c| c.is_finite()))
        .ok_or_else(|| TorsionError::SingularGenerators { v: w.to_vec() })?;
    Ok(ys * inverse)
}

/// `Γ̂(x, v)` of the torsion-free connection of `spray`.
///
/// At `v = 0` the value is extrapolated linearly from `v = h·e₁, 2h·e₁`,
/// which requires `Ŝ(x, 0) = 0`.
pub fn torsion_free_gamma(spray: &Spray, at: &PointedVector, params: &TorsionParams) -> Result<DMatrix<f64>, TorsionError> {
    let chart = spray.chart();
    chart.check_len(&at.x)?;
    chart.check_len(&at.v)?;
    if !chart.contains(&at.x) {
        return Err(IntegrationError::OutsideChart { x: at.x.clone() }.into());
    }
    if norm(&at.v) > 0.0 {
        return gamma_off_zero(spray, &at.x, &at.v, params);
    }
    let n = spray.dimension();
    let value = spray.eval(&at.x, &vec![0.0; n])?;
    if value.iter().any(|c| c.abs() > 1e-12) {
        return Err(TorsionError::ZeroSection { value });
    }
    let h = params.difference_step(spray, &at.x, &at.v)?;
    let mut e = vec![0.0; n];
    e[0] = h;
    let near = gamma_off_zero(spray, &at.x, &e, params)?;
    e[0] = 2.0 * h;
    let far = gamma_off_zero(spray, &at.x, &e, params)?;
    Ok(near * 2.0 - far)
}

/// A connection given by its connection map `Γ(x, v)`.
pub trait Connection {
    fn chart(&self) -> &Chart;
    fn gamma(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>, TorsionError>;
    /// The spray whose geodesics are those of the connection.
    fn geodesic_spray(&self) -> Spray;
}

impl Connection for ChristoffelConnection {
    fn chart(&self) -> &Chart {
        ChristoffelConnection::chart(self)
    }

    fn gamma(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>, TorsionError> {
        Ok(ChristoffelConnection::gamma(self, x, v)?)
    }

    fn geodesic_spray(&self) -> Spray {
        geodesic_spray_of(self)
    }
}

/// The torsion-free connection of a spray, evaluated numerically on demand.
#[derive(Debug, Clone)]
pub struct NumericalConnection {
    spray: Spray,
    params: TorsionParams,
}

impl NumericalConnection {
    pub fn new(spray: Spray, params: TorsionParams) -> Self {
        NumericalConnection { spray, params }
    }

    pub fn spray(&self) -> &Spray {
        &self.spray
    }

    pub fn params(&self) -> &TorsionParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.spray.dimension()
    }

    /// `Γ̂(x, v)·u`.
    pub fn apply(&self, x: &[f64], v: &[f64], u: &[f64]) -> Result<DVector<f64>, TorsionError> {
        self.spray.chart().check_len(u)?;
        Ok(Connection::gamma(self, x, v)? * DVector::from_column_slice(u))
    }

    /// The induced spray value `Γ̂(x, y)·y`.
    pub fn spray_value(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, TorsionError> {
        Ok(self.apply(x, y, y)?.iter().copied().collect())
    }
}

impl Connection for NumericalConnection {
    fn chart(&self) -> &Chart {
        self.spray.chart()
    }

    fn gamma(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>, TorsionError> {
        torsion_free_gamma(&self.spray, &PointedVector::new(x.to_vec(), v.to_vec()), &self.params)
    }

    /// The source spray, which the connection induces by compatibility.
    fn geodesic_spray(&self) -> Spray {
        self.spray.clone()
    }
}

/// Generalized torsion `𝒯_u = 2(Γ̂ − Γ)u` at `at`, where `Γ̂` is the
/// torsion-free connection of the geodesic spray of `conn`.
pub fn torsion<C: Connection + ?Sized>(
    conn: &C,
    u: &[f64],
    at: &PointedVector,
    params: &TorsionParams,
) -> Result<Vec<f64>, TorsionError> {
    conn.chart().check_len(u)?;
    let spray = conn.geodesic_spray();
    let hat = torsion_free_gamma(&spray, at, params)?;
    let gamma = conn.gamma(&at.x, &at.v)?;
    let tu = (hat - gamma) * DVector::from_column_slice(u) * 2.0;
    Ok(tu.iter().copied().collect())
}

/// The torsion operator `u ↦ 𝒯_u` at `at` as a matrix.
pub fn torsion_matrix<C: Connection + ?Sized>(
    conn: &C,
    at: &PointedVector,
    params: &TorsionParams,
) -> Result<DMatrix<f64>, TorsionError> {
    let spray = conn.geodesic_spray();
    let hat = torsion_free_gamma(&spray, at, params)?;
    Ok((hat - conn.gamma(&at.x, &at.v)?) * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spray(src: &[&str]) -> Spray {
        Spray::parse(Chart::euclidean(src.len()).unwrap(), src).unwrap()
    }

    fn half_plane() -> Spray {
        let chart = Chart::new(
            2,
            Some(vec![
                crate::geometry::Interval::new(f64::NEG_INFINITY, f64::INFINITY),
                crate::geometry::Interval::new(0.0, f64::INFINITY),
            ]),
        )
        .unwrap();
        Spray::parse(chart, &["2*y1*y2/x2", "(y2^2 - y1^2)/x2"]).unwrap()
    }

    fn half_jacobian(s: &Spray, x: &[f64], v: &[f64]) -> DMatrix<f64> {
        let n = s.dimension();
        let (_, jy) = s.jacobians(x, v).unwrap();
        DMatrix::from_row_slice(n, n, &jy) * 0.5
    }

    #[test]
    fn zero_spray_gives_zero() {
        let s = spray(&["0", "0"]);
        for v in [[1.0, 0.5], [0.0, 0.0]] {
            let g = torsion_free_gamma(&s, &PointedVector::new(vec![0.3, -1.0], v.to_vec()), &Default::default()).unwrap();
            assert!(g.amax() < 1e-9, "{g}");
        }
    }

    #[test]
    fn quadratic_spray_gives_half_fiber_derivative() {
        let s = half_plane();
        for (x, v) in [([0.0, 1.0], [1.0, 0.0]), ([0.4, 2.0], [-0.3, 0.8])] {
            let g = torsion_free_gamma(&s, &PointedVector::new(x.to_vec(), v.to_vec()), &Default::default()).unwrap();
            let expected = half_jacobian(&s, &x, &v);
            assert!((g - &expected).amax() < 1e-6, "{expected}");
        }
    }

    #[test]
    fn inhomogeneous_spray_is_compatible() {
        let s = spray(&["pi*(1 + y1^2)"]);
        let at = PointedVector::new(vec![0.0], vec![0.3]);
        let g = torsion_free_gamma(&s, &at, &Default::default()).unwrap();
        let expected = std::f64::consts::PI * 1.09;
        assert!((g[(0, 0)] * 0.3 - expected).abs() < 1e-6);
        let halved = TorsionParams {
            step: Some(5e-4),
            ..Default::default()
        };
        let g2 = torsion_free_gamma(&s, &at, &halved).unwrap();
        assert!((g2[(0, 0)] - g[(0, 0)]).abs() < 1e-6);
        assert!(matches!(
            torsion_free_gamma(&s, &PointedVector::new(vec![0.0], vec![0.0]), &Default::default()),
            Err(TorsionError::ZeroSection { .. })
        ));
    }

    #[test]
    fn transverse_generators_match_half_fiber_derivative() {
        let s = spray(&["y1^2*y2 - x2*y2^3", "sin(x1)*y1^3 + y2^3"]);
        let (x, w) = ([0.2, 0.5], [0.7, -0.4]);
        let g = torsion_free_gamma(&s, &PointedVector::new(x.to_vec(), w.to_vec()), &Default::default()).unwrap();
        let b = half_jacobian(&s, &x, &w);
        let wv = DVector::from_column_slice(&w);
        let u = DVector::from_column_slice(&[0.4, 0.7]);
        assert!((&g * &u - &b * &u).amax() < 1e-6);
        let sv = DVector::from_vec(s.eval(&x, &w).unwrap());
        assert!((&g * &wv - sv).amax() < 1e-6);
    }

    #[test]
    fn classical_torsion_of_asymmetric_linear_connection() {
        let chart = Chart::euclidean(2).unwrap();
        let conn = ChristoffelConnection::parse(chart, &[vec!["y2", "0"], vec!["0", "0"]]).unwrap();
        let at = PointedVector::new(vec![0.0, 0.0], vec![0.0, 1.0]);
        let t = torsion(&conn, &[1.0, 0.0], &at, &Default::default()).unwrap();
        assert!((t[0] + 1.0).abs() < 1e-6 && t[1].abs() < 1e-6, "{t:?}");
    }

    #[test]
    fn numerical_connection_is_torsion_free() {
        let conn = NumericalConnection::new(half_plane(), Default::default());
        let at = PointedVector::new(vec![0.1, 1.5], vec![0.6, -0.2]);
        let t = torsion(&conn, &[1.0, 2.0], &at, &Default::default()).unwrap();
        assert_eq!(t, vec![0.0, 0.0]);
        let other = TorsionParams {
            epsilon: EpsilonRule::Fixed { value: 0.002 },
            ..Default::default()
        };
        let t = torsion(&conn, &[1.0, 2.0], &at, &other).unwrap();
        assert!(t.iter().all(|c| c.abs() < 1e-6), "{t:?}");
    }

    #[test]
    fn complement_is_orthonormal() {
        let w = [0.0, 3.0, 4.0];
        let us = complement(&w);
        assert_eq!(us.len(), 2);
        for (i, u) in us.iter().enumerate() {
            assert!((norm(u) - 1.0).abs() < 1e-14);
            assert!(u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-14);
            for v in &us[i + 1..] {
                assert!(u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-14);
            }
        }
    }
}
