//! Generalized exponential maps `exp^ε_p(v) = c_v(ε)` and related curves.
//!
//! `exp^0_p` is the constant map to `p`; for `ε ≠ 0` the map is evaluated by
//! integrating the geodesic with initial data `(p, v)` up to time `ε`.

use crate::geometry::{sample_vector, PointedVector, Spray};
use crate::integrator::{
    integrate_flow_differentials, integrate_geodesic, GeodesicSolution, IntegrationError,
    IntegratorOptions, Termination,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("exp^{epsilon} is undefined at v = {v:?}: geodesic ends at t = {reached} ({termination:?})")]
    OutsideDomain {
        v: Vec<f64>,
        epsilon: f64,
        reached: f64,
        termination: Termination,
    },
    #[error("exp^0 is the bundle projection and cannot be inverted")]
    ZeroEpsilon,
    #[error("singular Jacobian at v = {v:?} (near-conjugate configuration)")]
    SingularJacobian { v: Vec<f64> },
    #[error("Newton iteration stalled after {iterations} iterations with residual {residual:e} at v = {v:?}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        v: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpStatus {
    Ok,
    OutsideDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpEvaluation {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub epsilon: f64,
    /// `c_v(ε)`; `None` when outside the domain.
    pub value: Option<Vec<f64>>,
    #[serde(serialize_with = "serialize_rows")]
    pub jacobian: Option<DMatrix<f64>>,
    pub status: ExpStatus,
}

fn serialize_rows<S: serde::Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Option<Vec<Vec<f64>>> = m
        .as_ref()
        .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect());
    rows.serialize(s)
}

/// Tolerances used where exp is differentiated or inverted numerically.
pub fn tight_options() -> IntegratorOptions {
    IntegratorOptions::with_tolerances(1e-12, 1e-14)
}

fn horizon(epsilon: f64) -> (f64, f64) {
    (epsilon.min(0.0), epsilon.max(0.0))
}

fn solve(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    options: &IntegratorOptions,
) -> Result<GeodesicSolution, IntegrationError> {
    integrate_geodesic(
        spray,
        &PointedVector::new(p.to_vec(), v.to_vec()),
        horizon(epsilon),
        options,
    )
}

fn reached(sol: &GeodesicSolution, epsilon: f64) -> bool {
    if epsilon >= 0.0 {
        sol.t_plus() == epsilon
    } else {
        sol.t_minus() == epsilon
    }
}

fn outside(sol: &GeodesicSolution, v: &[f64], epsilon: f64) -> ExpError {
    let (reached, termination) = if epsilon >= 0.0 {
        (sol.t_plus(), sol.termination_plus())
    } else {
        (sol.t_minus(), sol.termination_minus())
    };
    ExpError::OutsideDomain {
        v: v.to_vec(),
        epsilon,
        reached,
        termination,
    }
}

/// Seeds `(0, e_j)`, whose `δx` columns form the derivative of exp.
pub(crate) fn unit_velocity_seeds(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            (vec![0.0; n], e)
        })
        .collect()
}

fn jacobian_from(sol: &GeodesicSolution, epsilon: f64) -> Result<DMatrix<f64>, ExpError> {
    let n = sol.dimension();
    let mut jac = DMatrix::zeros(n, n);
    for (j, fd) in integrate_flow_differentials(sol, &unit_velocity_seeds(n))?.iter().enumerate() {
        let (dx, _) = fd.at(epsilon).expect("flow differential covers the base domain");
        jac.set_column(j, &DVector::from_vec(dx));
    }
    Ok(jac)
}

/// Evaluates `exp^ε_p(v)`. With `with_jacobian`, also `d(exp^ε_p)_v`.
pub fn exp_eval(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    with_jacobian: bool,
    options: &IntegratorOptions,
) -> Result<ExpEvaluation, ExpError> {
    let n = spray.dimension();
    let mut eval = ExpEvaluation {
        p: p.to_vec(),
        v: v.to_vec(),
        epsilon,
        value: None,
        jacobian: None,
        status: ExpStatus::Ok,
    };
    if epsilon == 0.0 {
        spray.chart().check_len(p).map_err(IntegrationError::from)?;
        spray.chart().check_len(v).map_err(IntegrationError::from)?;
        if !spray.chart().contains(p) {
            return Err(IntegrationError::OutsideChart { x: p.to_vec() }.into());
        }
        eval.value = Some(p.to_vec());
        if with_jacobian {
            eval.jacobian = Some(DMatrix::zeros(n, n));
        }
        return Ok(eval);
    }
    let sol = solve(spray, p, v, epsilon, options)?;
    if !reached(&sol, epsilon) {
        eval.status = ExpStatus::OutsideDomain;
        return Ok(eval);
    }
    eval.value = sol.position_at(epsilon);
    if with_jacobian {
        eval.jacobian = Some(jacobian_from(&sol, epsilon)?);
    }
    Ok(eval)
}

/// `exp^ε_p(v)`; `status` reports whether the geodesic reaches `ε`.
pub fn exp_eps(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    options: &IntegratorOptions,
) -> Result<ExpEvaluation, ExpError> {
    exp_eval(spray, p, v, epsilon, false, options)
}

/// `exp^ε_p(v)` as a point, or an `OutsideDomain` error.
pub fn exp_point(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    options: &IntegratorOptions,
) -> Result<Vec<f64>, ExpError> {
    if epsilon == 0.0 {
        return Ok(exp_eps(spray, p, v, 0.0, options)?.value.expect("defined at ε = 0"));
    }
    let sol = solve(spray, p, v, epsilon, options)?;
    if !reached(&sol, epsilon) {
        return Err(outside(&sol, v, epsilon));
    }
    Ok(sol.position_at(epsilon).expect("ε inside the domain"))
}

/// The derivative of `v ↦ exp^ε_p(v)`: column `j` is `δx(ε)` of the flow
/// differential seeded with `(0, e_j)`.
pub fn exp_jacobian(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    options: &IntegratorOptions,
) -> Result<DMatrix<f64>, ExpError> {
    if epsilon == 0.0 {
        return Ok(DMatrix::zeros(spray.dimension(), spray.dimension()));
    }
    let sol = solve(spray, p, v, epsilon, options)?;
    if !reached(&sol, epsilon) {
        return Err(outside(&sol, v, epsilon));
    }
    jacobian_from(&sol, epsilon)
}

/// Largest `ε` on the grid `64·2^(−k/4)` such that `exp^{±ε}_p` is defined at
/// every probe vector of norm at most `radius`.
///
/// Probes are `±radius·e_i` and `probe_count` seeded random directions, each
/// at full and half radius. This is a sampled lower estimate.
pub fn estimate_eps_domain(
    spray: &Spray,
    p: &[f64],
    radius: f64,
    probe_count: usize,
    seed: u64,
    options: &IntegratorOptions,
) -> Result<f64, ExpError> {
    eps_domain_on_grid(spray, p, radius, probe_count, seed, 64.0, options)
}

/// `estimate_eps_domain` on the grid `grid_max·2^(−k/4)`.
pub(crate) fn eps_domain_on_grid(
    spray: &Spray,
    p: &[f64],
    radius: f64,
    probe_count: usize,
    seed: u64,
    grid_max: f64,
    options: &IntegratorOptions,
) -> Result<f64, ExpError> {
    let n = spray.dimension();
    let mut probes = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = sign * radius;
            probes.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probe_count {
        let mut d = sample_vector(&mut rng, n, 1.0);
        let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
        d.iter_mut().for_each(|c| *c *= radius / norm);
        probes.push(d.iter().map(|c| 0.5 * c).collect());
        probes.push(d);
    }
    let limits = probes
        .par_iter()
        .map(|v| {
            let sol = solve_both(spray, p, v, grid_max, options)?;
            let fwd = if sol.termination_plus().is_early() {
                sol.t_plus()
            } else {
                f64::INFINITY
            };
            let bwd = if sol.termination_minus().is_early() {
                -sol.t_minus()
            } else {
                f64::INFINITY
            };
            Ok(fwd.min(bwd))
        })
        .collect::<Result<Vec<f64>, IntegrationError>>()?;
    let limit = limits.into_iter().fold(f64::INFINITY, f64::min);
    let margin = 1e-6;
    Ok((0..=160)
        .map(|k| grid_max * 2f64.powf(-(k as f64) / 4.0))
        .find(|&eps| eps < limit - margin || limit.is_infinite())
        .unwrap_or(0.0))
}

fn solve_both(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    span: f64,
    options: &IntegratorOptions,
) -> Result<GeodesicSolution, IntegrationError> {
    integrate_geodesic(
        spray,
        &PointedVector::new(p.to_vec(), v.to_vec()),
        (-span, span),
        options,
    )
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

/// Solves `exp^ε_p(v) = target` by damped Newton iteration from `guess`.
///
/// Converged when the residual sup-norm is at most `1e-10`; at most 50
/// iterations, with step halving whenever a full step increases the residual
/// or leaves the domain of `exp^ε_p`.
pub fn exp_inverse(
    spray: &Spray,
    p: &[f64],
    epsilon: f64,
    target: &[f64],
    guess: &[f64],
    options: &IntegratorOptions,
) -> Result<Vec<f64>, ExpError> {
    const TOL: f64 = 1e-10;
    const MAX_ITER: usize = 50;
    if epsilon == 0.0 {
        return Err(ExpError::ZeroEpsilon);
    }
    let residual = |v: &[f64]| -> Result<Vec<f64>, ExpError> {
        let x = exp_point(spray, p, v, epsilon, options)?;
        Ok(x.iter().zip(target).map(|(a, b)| a - b).collect())
    };
    let mut v = guess.to_vec();
    let mut r = residual(&v)?;
    for _ in 0..MAX_ITER {
        let rn = max_norm(&r);
        if rn <= TOL {
            return Ok(v);
        }
        let jac = exp_jacobian(spray, p, &v, epsilon, options)?;
        let svd = jac.clone().svd(false, false);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        if !(smin > 1e-13 * smax.max(1e-300)) {
            return Err(ExpError::SingularJacobian { v });
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or_else(|| ExpError::SingularJacobian { v: v.clone() })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            match residual(&trial) {
                Ok(rt) if max_norm(&rt) < rn => {
                    v = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                Ok(_) | Err(ExpError::OutsideDomain { .. }) => lambda *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            return Err(ExpError::NoConvergence {
                iterations: MAX_ITER,
                residual: rn,
                v,
            });
        }
    }
    let residual = max_norm(&r);
    if residual <= TOL {
        Ok(v)
    } else {
        Err(ExpError::NoConvergence {
            iterations: MAX_ITER,
            residual,
            v,
        })
    }
}

/// `α_v(t) = (exp^{ε_v}_p)^{-1}(exp^t_p v)` on `t_grid`, by Newton with
/// continuation. `α_v(0) = 0` and `α_v(ε_v) = v` are returned exactly.
pub fn alpha_curve(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    eps_v: f64,
    t_grid: &[f64],
    options: &IntegratorOptions,
) -> Result<Vec<Vec<f64>>, ExpError> {
    if eps_v == 0.0 {
        return Err(ExpError::ZeroEpsilon);
    }
    let n = spray.dimension();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(t_grid.len());
    let mut previous: Option<Vec<f64>> = None;
    for &t in t_grid {
        let alpha = if t == 0.0 {
            vec![0.0; n]
        } else if t == eps_v {
            v.to_vec()
        } else {
            let target = exp_point(spray, p, v, t, options)?;
            let linear: Vec<f64> = v.iter().map(|c| c * t / eps_v).collect();
            let guess = match &previous {
                Some(prev) => {
                    let residual = |g: &[f64]| {
                        exp_point(spray, p, g, eps_v, options).map(|x| {
                            x.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                        })
                    };
                    match (residual(&linear), residual(prev)) {
                        (Ok(a), Ok(b)) if b < a => prev.clone(),
                        (Err(_), Ok(_)) => prev.clone(),
                        _ => linear,
                    }
                }
                None => linear,
            };
            exp_inverse(spray, p, eps_v, &target, &guess, options)?
        };
        previous = Some(alpha.clone());
        out.push(alpha);
    }
    Ok(out)
}

/// One evaluation of an a-curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ACurvePoint {
    pub a: f64,
    pub value: Option<Vec<f64>>,
    pub status: ExpStatus,
}

/// `a ↦ exp^ε_p(a·v)` on `a_grid`, evaluated in parallel, in grid order.
pub fn a_curve(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    a_grid: &[f64],
    options: &IntegratorOptions,
) -> Result<Vec<ACurvePoint>, ExpError> {
    a_grid
        .par_iter()
        .map(|&a| {
            let av: Vec<f64> = v.iter().map(|c| a * c).collect();
            let e = exp_eps(spray, p, &av, epsilon, options)?;
            Ok(ACurvePoint {
                a,
                value: e.value,
                status: e.status,
            })
        })
        .collect()
}

/// Largest distance between `exp^ε_p(a·v)` and the geodesic point
/// `c_v(ε·a)` over `a_grid`.
///
/// For homogeneous sprays `a` is a geodesic parameter and the two curves
/// coincide. Points where either side is undefined count as infinite
/// deviation.
pub fn a_curve_deviation(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    epsilon: f64,
    a_grid: &[f64],
    options: &IntegratorOptions,
) -> Result<f64, ExpError> {
    let curve = a_curve(spray, p, v, epsilon, a_grid, options)?;
    let (lo, hi) = a_grid
        .iter()
        .fold((0.0f64, 0.0f64), |(l, h), a| (l.min(epsilon * a), h.max(epsilon * a)));
    let geo = integrate_geodesic(
        spray,
        &PointedVector::new(p.to_vec(), v.to_vec()),
        (lo, hi),
        options,
    )?;
    let mut worst: f64 = 0.0;
    for point in curve {
        let d = match (point.value, geo.position_at(epsilon * point.a)) {
            (Some(x), Some(y)) => x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt(),
            _ => f64::INFINITY,
        };
        worst = worst.max(d);
    }
    Ok(worst)
}

/// `0.05, 0.10, …, 1.00`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveType {
    Geodesic,
    ACurve,
}

/// A polyline of a plume figure, parametrized by `ε` (geodesics) or `a`
/// (a-curves).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlumeCurve {
    pub curve_type: CurveType,
    pub curve_id: usize,
    /// The parameter held fixed: `a` on geodesics, `ε` on a-curves.
    pub fixed: f64,
    pub points: Vec<(f64, Vec<f64>)>,
}

/// Plume of geodesics `ε ↦ exp^ε_p(a·v)` for every `v` in `directions` and
/// `a` in `a_grid`, sampled at `eps_grid`, together with the a-curves
/// `a ↦ exp^ε_p(a·v)` for every `ε` in `a_curve_eps`.
///
/// Curves are truncated at the first undefined point.
pub fn plume(
    spray: &Spray,
    p: &[f64],
    directions: &[Vec<f64>],
    a_grid: &[f64],
    eps_grid: &[f64],
    a_curve_eps: &[f64],
    options: &IntegratorOptions,
) -> Result<Vec<PlumeCurve>, ExpError> {
    let all = || eps_grid.iter().chain(a_curve_eps);
    let eps_max = all().fold(0.0f64, |m, e| m.max(*e));
    let eps_min = all().fold(0.0f64, |m, e| m.min(*e));
    let jobs: Vec<(usize, usize)> = (0..directions.len())
        .flat_map(|d| (0..a_grid.len()).map(move |a| (d, a)))
        .collect();
    let geodesics = jobs
        .par_iter()
        .map(|&(d, ai)| {
            let av: Vec<f64> = directions[d].iter().map(|c| a_grid[ai] * c).collect();
            solve_range(spray, p, &av, (eps_min, eps_max), options)
        })
        .collect::<Result<Vec<_>, ExpError>>()?;

    let mut curves = Vec::new();
    let mut id = 0;
    for (sol, &(_, ai)) in geodesics.iter().zip(&jobs) {
        let mut points = Vec::new();
        for &eps in eps_grid {
            match sol.position_at(eps) {
                Some(x) => points.push((eps, x)),
                None => break,
            }
        }
        curves.push(PlumeCurve {
            curve_type: CurveType::Geodesic,
            curve_id: id,
            fixed: a_grid[ai],
            points,
        });
        id += 1;
    }
    for (d, _) in directions.iter().enumerate() {
        for &eps in a_curve_eps {
            let mut points = Vec::new();
            for (ai, &a) in a_grid.iter().enumerate() {
                match geodesics[d * a_grid.len() + ai].position_at(eps) {
                    Some(x) => points.push((a, x)),
                    None => break,
                }
            }
            curves.push(PlumeCurve {
                curve_type: CurveType::ACurve,
                curve_id: id,
                fixed: eps,
                points,
            });
            id += 1;
        }
    }
    Ok(curves)
}

fn solve_range(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    range: (f64, f64),
    options: &IntegratorOptions,
) -> Result<GeodesicSolution, ExpError> {
    Ok(integrate_geodesic(
        spray,
        &PointedVector::new(p.to_vec(), v.to_vec()),
        range,
        options,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    fn spray(src: &[&str]) -> Spray {
        Spray::parse(Chart::euclidean(src.len()).unwrap(), src).unwrap()
    }

    fn opts() -> IntegratorOptions {
        IntegratorOptions::default()
    }

    #[test]
    fn zero_epsilon_is_projection() {
        let s = spray(&["pi*(1+y1^2)"]);
        let e = exp_eps(&s, &[0.3], &[100.0], 0.0, &opts()).unwrap();
        assert_eq!(e.value, Some(vec![0.3]));
        assert_eq!(exp_jacobian(&s, &[0.3], &[1.0], 0.0, &opts()).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn free_motion() {
        let s = spray(&["0", "0"]);
        let e = exp_eps(&s, &[0.0, 0.0], &[1.0, 2.0], 0.5, &opts()).unwrap();
        let x = e.value.unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        let j = exp_jacobian(&s, &[0.0, 0.0], &[1.0, 2.0], 0.5, &opts()).unwrap();
        assert!((j - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-12);
        let v = exp_inverse(&s, &[0.0, 0.0], 0.5, &[0.5, 1.0], &[0.0, 0.0], &opts()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-9 && (v[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn blow_up_is_outside_domain() {
        let s = spray(&["pi*(1+y1^2)"]);
        let e = exp_eps(&s, &[0.0], &[1.0], 1.0, &opts()).unwrap();
        assert_eq!(e.status, ExpStatus::OutsideDomain);
        assert!(e.value.is_none());
    }

    #[test]
    fn jacobian_of_linear_ode() {
        let s = spray(&["x1"]);
        let j = exp_jacobian(&s, &[1.0], &[0.0], 1.0, &opts()).unwrap();
        assert!((j[(0, 0)] - 1f64.sinh()).abs() < 1e-6);
    }

    #[test]
    fn inverse_requires_nonzero_epsilon() {
        let s = spray(&["0"]);
        assert_eq!(
            exp_inverse(&s, &[0.0], 0.0, &[1.0], &[0.0], &opts()),
            Err(ExpError::ZeroEpsilon)
        );
    }

    #[test]
    fn domain_estimates() {
        let zero = spray(&["0"]);
        assert_eq!(estimate_eps_domain(&zero, &[0.0], 1.0, 4, 1, &opts()).unwrap(), 64.0);
        let blow = spray(&["pi*(1+y1^2)"]);
        let e = estimate_eps_domain(&blow, &[0.0], 1.0, 4, 1, &opts()).unwrap();
        assert!(e <= 0.25 && e > 0.1, "{e}");
        let lin = spray(&["x1"]);
        assert_eq!(estimate_eps_domain(&lin, &[1.0], 1.0, 4, 1, &opts()).unwrap(), 64.0);
    }

    #[test]
    fn alpha_endpoints_and_homogeneous_case() {
        let s = spray(&["y1^2", "y1*y2"]);
        let (p, v) = ([0.1, 0.2], [0.3, -0.2]);
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let alpha = alpha_curve(&s, &p, &v, 1.0, &grid, &tight_options()).unwrap();
        assert_eq!(alpha[0], vec![0.0, 0.0]);
        assert_eq!(alpha[4], v.to_vec());
        for (t, a) in grid.iter().zip(&alpha) {
            for k in 0..2 {
                assert!((a[k] - t * v[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn a_curves() {
        let zero = spray(&["0", "0"]);
        let pts = a_curve(&zero, &[0.0, 0.0], &[1.0, 1.0], 2.0, &default_a_grid(), &opts()).unwrap();
        for pt in &pts {
            let x = pt.value.as_ref().unwrap();
            assert!((x[0] - 2.0 * pt.a).abs() < 1e-12);
        }
        let quad = spray(&["y1^2", "y1*y2"]);
        let d = a_curve_deviation(&quad, &[0.0, 0.0], &[0.4, 0.3], 1.0, &default_a_grid(), &opts()).unwrap();
        assert!(d < 1e-6, "{d}");
        let blow = spray(&["pi*(1+y1^2)"]);
        let d = a_curve_deviation(&blow, &[0.0], &[1.0], 0.2, &default_a_grid(), &opts()).unwrap();
        assert!(d > 1e-3, "{d}");
    }

    #[test]
    fn plume_shapes() {
        let zero = spray(&["0", "0"]);
        let eps: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let curves = plume(&zero, &[0.0, 0.0], &[vec![1.0, 0.0]], &default_a_grid(), &eps, &eps, &opts()).unwrap();
        assert_eq!(curves.len(), 20 + eps.len());
        for c in &curves {
            let expected = match c.curve_type {
                CurveType::Geodesic => eps.len(),
                CurveType::ACurve => 20,
            };
            assert_eq!(c.points.len(), expected);
        }
    }
}
