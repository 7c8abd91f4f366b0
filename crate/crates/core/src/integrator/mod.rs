//! Adaptive integration of the geodesic equation `ẍ = S(x, ẋ)` and of its
//! variational equation.
//!
//! Integration runs forward and backward from `t = 0` and stops at the
//! requested horizon, at a detected blow-up, at a chart exit, or when steps
//! underflow. Blow-up detection is a heuristic: the state norm must exceed a
//! threshold while accepted steps fall below a floor.

mod dopri;
mod variational;

pub use variational::{integrate_flow_differential, integrate_flow_differentials, FlowDifferential};

use crate::expr::EvalError;
use crate::geometry::{GeometryError, PointedVector, Spray};
use dopri::{Dense, Stages};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("initial point {x:?} lies outside the chart")]
    OutsideChart { x: Vec<f64> },
    #[error("invalid integrator input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("right-hand side undefined at t = {t}: {source}")]
    Domain {
        t: f64,
        #[source]
        source: EvalError,
    },
    #[error("step limit {limit} reached at t = {t}")]
    MaxSteps { t: f64, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub blowup_threshold: f64,
    /// Step floor is `step_floor * max(1, |t|)`.
    pub step_floor: f64,
    pub max_steps: usize,
    /// Largest step size; unlimited when `None`.
    pub max_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-9,
            atol: 1e-12,
            blowup_threshold: 1e8,
            step_floor: 1e-12,
            max_steps: 200_000,
            max_step: None,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegratorOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), IntegrationError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rtol) || !positive(self.atol) {
            return Err(IntegrationError::InvalidInput(
                "tolerances must be positive and finite".into(),
            ));
        }
        if !(self.blowup_threshold > 0.0) || !positive(self.step_floor) {
            return Err(IntegrationError::InvalidInput(
                "blow-up threshold and step floor must be positive".into(),
            ));
        }
        if matches!(self.max_step, Some(h) if !positive(h)) {
            return Err(IntegrationError::InvalidInput("max_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    HorizonReached,
    BlowUp,
    ChartExit,
    StepUnderflow,
}

impl Termination {
    /// Whether the solution could not be continued further.
    pub fn is_early(self) -> bool {
        self != Termination::HorizonReached
    }
}

/// One accepted step: dense output over `[t0, t0 + h]`, possibly truncated
/// at `t_end` when the step left the chart.
#[derive(Debug, Clone)]
pub(crate) struct Segment {
    pub t0: f64,
    pub h: f64,
    pub t_end: f64,
    pub dense: Dense,
}

impl Segment {
    fn theta(&self, t: f64) -> f64 {
        ((t - self.t0) / self.h).clamp(0.0, 1.0)
    }
}

/// Steps taken in one direction from `t = 0`, in integration order.
#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub segments: Vec<Segment>,
    pub end: f64,
    pub termination: Termination,
}

impl Branch {
    fn empty() -> Self {
        Branch {
            segments: Vec::new(),
            end: 0.0,
            termination: Termination::HorizonReached,
        }
    }

    fn locate(&self, t: f64) -> Option<&Segment> {
        let forward = self.end >= 0.0;
        let idx = self.segments.partition_point(|s| {
            if forward {
                s.t_end < t
            } else {
                s.t_end > t
            }
        });
        self.segments.get(idx)
    }
}

/// A trajectory sample `(t, x, ẋ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Numerical solution of the geodesic equation on `[t_minus, t_plus]`.
#[derive(Debug, Clone)]
pub struct GeodesicSolution {
    spray: Spray,
    initial: PointedVector,
    options: IntegratorOptions,
    pub(crate) forward: Branch,
    pub(crate) backward: Branch,
}

impl GeodesicSolution {
    pub fn spray(&self) -> &Spray {
        &self.spray
    }

    pub fn initial(&self) -> &PointedVector {
        &self.initial
    }

    pub fn options(&self) -> &IntegratorOptions {
        &self.options
    }

    pub fn t_minus(&self) -> f64 {
        self.backward.end
    }

    pub fn t_plus(&self) -> f64 {
        self.forward.end
    }

    pub fn termination_minus(&self) -> Termination {
        self.backward.termination
    }

    pub fn termination_plus(&self) -> Termination {
        self.forward.termination
    }

    pub fn dimension(&self) -> usize {
        self.initial.dimension()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.t_minus() <= t && t <= self.t_plus()
    }

    fn segment_at(&self, t: f64) -> Option<&Segment> {
        if !self.contains_time(t) {
            return None;
        }
        if t >= 0.0 {
            self.forward.locate(t)
        } else {
            self.backward.locate(t)
        }
    }

    /// `(x(t), ẋ(t))` from the dense output, or `None` outside the domain.
    pub fn state_at(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dimension();
        if t == 0.0 {
            return Some((self.initial.x.clone(), self.initial.v.clone()));
        }
        let seg = self.segment_at(t)?;
        let mut z = vec![0.0; 2 * n];
        seg.dense.eval(seg.theta(t), &mut z);
        let v = z.split_off(n);
        Some((z, v))
    }

    pub fn position_at(&self, t: f64) -> Option<Vec<f64>> {
        self.state_at(t).map(|(x, _)| x)
    }

    /// Step nodes in increasing `t`, including `t = 0` and both endpoints.
    pub fn samples(&self) -> Vec<Sample> {
        let n = self.dimension();
        let node = |seg: &Segment| {
            let mut z = vec![0.0; 2 * n];
            seg.dense.eval(seg.theta(seg.t_end), &mut z);
            let v = z.split_off(n);
            Sample {
                t: seg.t_end,
                x: z,
                v,
            }
        };
        let mut out: Vec<Sample> = self.backward.segments.iter().rev().map(node).collect();
        out.push(Sample {
            t: 0.0,
            x: self.initial.x.clone(),
            v: self.initial.v.clone(),
        });
        out.extend(self.forward.segments.iter().map(node));
        out
    }

    pub(crate) fn branches(&self) -> [&Branch; 2] {
        [&self.forward, &self.backward]
    }

    /// Largest interpolation residual at step midpoints, measured as
    /// `|h|·‖d/dt ẋ_dense − S(x, ẋ)‖∞` relative to the local tolerance
    /// `atol + rtol·‖(x, ẋ)‖∞`.
    pub fn midpoint_residual_ratio(&self) -> Result<f64, EvalError> {
        let n = self.dimension();
        let mut worst: f64 = 0.0;
        let mut z = vec![0.0; 2 * n];
        let mut dz = vec![0.0; 2 * n];
        for branch in self.branches() {
            for seg in &branch.segments {
                let theta = 0.5 * seg.theta(seg.t_end);
                seg.dense.eval(theta, &mut z);
                seg.dense.eval_derivative(theta, &mut dz);
                let s = self.spray.eval(&z[..n], &z[n..])?;
                let scale = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let tol = self.options.atol + self.options.rtol * scale;
                let res = (0..n).fold(0.0f64, |m, k| m.max((dz[n + k] - seg.h * s[k]).abs()));
                worst = worst.max(res / tol);
            }
        }
        Ok(worst)
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

struct Rhs<'a> {
    spray: &'a Spray,
    n: usize,
}

impl Rhs<'_> {
    fn eval(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.n;
        out[..n].copy_from_slice(&z[n..]);
        self.spray.eval_into(&z[..n], &z[n..], &mut out[n..])
    }
}

fn initial_step(rhs: &Rhs, z0: &[f64], f0: &[f64], dir: f64, opts: &IntegratorOptions) -> f64 {
    let sc: Vec<f64> = z0.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let scaled = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let d0 = scaled(z0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let z1: Vec<f64> = z0.iter().zip(f0).map(|(z, f)| z + dir * h0 * f).collect();
    let mut f1 = vec![0.0; z0.len()];
    if rhs.eval(&z1, &mut f1).is_err() {
        return h0;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled(&diff) / h0;
    let d = d1.max(d2);
    let h1 = if d <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

fn integrate_branch(
    spray: &Spray,
    z0: &[f64],
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Branch, IntegrationError> {
    if horizon == 0.0 {
        return Ok(Branch::empty());
    }
    let n = spray.dimension();
    let chart = spray.chart();
    let rhs = Rhs { spray, n };
    let dir = horizon.signum();
    let span = horizon.abs();

    let mut st = Stages::new(2 * n);
    let mut z = z0.to_vec();
    let mut k1 = vec![0.0; 2 * n];
    rhs.eval(&z, &mut k1)
        .map_err(|source| IntegrationError::Domain { t: 0.0, source })?;

    let mut tau = 0.0;
    let mut h = initial_step(&rhs, &z, &k1, dir, opts);
    let mut segments = Vec::new();
    let mut steps = 0usize;
    let mut just_rejected = false;
    // last stage evaluation failure since the previous accepted step, with
    // whether the stage point was inside the chart
    let mut stage_failure: Option<(bool, EvalError)> = None;

    let termination = loop {
        if tau >= span {
            break Termination::HorizonReached;
        }
        let floor = opts.step_floor * tau.max(1.0);
        if h < floor {
            if norm(&z) > opts.blowup_threshold {
                break Termination::BlowUp;
            }
            match stage_failure {
                Some((false, _)) => break Termination::ChartExit,
                Some((true, source)) => {
                    return Err(IntegrationError::Domain { t: dir * tau, source })
                }
                None => break Termination::StepUnderflow,
            }
        }
        if steps >= opts.max_steps {
            return Err(IntegrationError::MaxSteps {
                t: dir * tau,
                limit: opts.max_steps,
            });
        }
        let remaining = span - tau;
        let mut h_eff = h.min(opts.max_step.unwrap_or(f64::INFINITY));
        let last = h_eff >= remaining;
        if last {
            h_eff = remaining;
        }
        let hs = dir * h_eff;
        st.k[0].copy_from_slice(&k1);
        let mut f = |_c: f64, zs: &[f64], out: &mut [f64]| rhs.eval(zs, out).map_err(|e| (zs[..n].to_vec(), e));
        if let Err((_, (xs, e))) = dopri::step(&mut f, &z, hs, &mut st) {
            stage_failure = Some((chart.contains(&xs), e));
            h = 0.25 * h_eff;
            just_rejected = true;
            continue;
        }
        let err = dopri::error_norm(&z, &st, hs, opts.rtol, opts.atol);
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h = h_eff * fac;
            just_rejected = true;
            continue;
        }
        stage_failure = None;
        steps += 1;
        let t0 = dir * tau;
        let t1 = if last { dir * span } else { dir * (tau + h_eff) };
        let dense = Dense::new(&z, &st, hs);
        if !chart.contains(&st.z1[..n]) {
            let mut lo = 0.0;
            let mut hi = 1.0;
            let mut zt = vec![0.0; 2 * n];
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                dense.eval(mid, &mut zt);
                if chart.contains(&zt[..n]) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_end = t0 + lo * hs;
            segments.push(Segment {
                t0,
                h: hs,
                t_end,
                dense,
            });
            return Ok(Branch {
                segments,
                end: t_end,
                termination: Termination::ChartExit,
            });
        }
        segments.push(Segment {
            t0,
            h: hs,
            t_end: t1,
            dense,
        });
        z.copy_from_slice(&st.z1);
        k1.copy_from_slice(&st.k[6]);
        tau = if last { span } else { tau + h_eff };
        if norm(&z) > opts.blowup_threshold && h_eff < opts.step_floor * tau.max(1.0) {
            break Termination::BlowUp;
        }
        let mut fac = if err == 0.0 {
            10.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 10.0)
        };
        if just_rejected {
            fac = fac.min(1.0);
        }
        just_rejected = false;
        if !last {
            h = h_eff * fac;
        }
    };
    Ok(Branch {
        segments,
        end: dir * tau,
        termination,
    })
}

/// Integrates `ẋ = y, ẏ = S(x, y)` from `initial` over `[horizon.0, horizon.1]`
/// (with `horizon.0 ≤ 0 ≤ horizon.1`).
pub fn integrate_geodesic(
    spray: &Spray,
    initial: &PointedVector,
    horizon: (f64, f64),
    options: &IntegratorOptions,
) -> Result<GeodesicSolution, IntegrationError> {
    options.validate()?;
    let chart = spray.chart();
    chart.check_len(&initial.x)?;
    chart.check_len(&initial.v)?;
    if !chart.contains(&initial.x) {
        return Err(IntegrationError::OutsideChart {
            x: initial.x.clone(),
        });
    }
    if initial.v.iter().any(|v| !v.is_finite()) {
        return Err(IntegrationError::InvalidInput("initial vector is not finite".into()));
    }
    let (lo, hi) = horizon;
    if !(lo <= 0.0 && hi >= 0.0) || lo.is_nan() || hi.is_nan() {
        return Err(IntegrationError::InvalidInput(format!(
            "horizon [{lo}, {hi}] must contain 0"
        )));
    }
    let z0: Vec<f64> = initial.x.iter().chain(&initial.v).copied().collect();
    let forward = integrate_branch(spray, &z0, hi, options)?;
    let backward = integrate_branch(spray, &z0, lo, options)?;
    Ok(GeodesicSolution {
        spray: spray.clone(),
        initial: initial.clone(),
        options: *options,
        forward,
        backward,
    })
}

/// Compares the geodesic `c̃` from `(c(b), a·ċ(b))` with `t ↦ c(at + b)`.
///
/// `c` is integrated over `horizon`, `c̃` over its preimage under
/// `t ↦ at + b`; the supremum distance of positions is taken over 401
/// equally spaced times of the common domain.
pub fn reparametrization_check(
    spray: &Spray,
    initial: &PointedVector,
    a: f64,
    b: f64,
    horizon: (f64, f64),
    tol: f64,
    options: &IntegratorOptions,
) -> Result<bool, IntegrationError> {
    if a == 0.0 || !a.is_finite() {
        return Err(IntegrationError::InvalidInput("scale a must be nonzero".into()));
    }
    let c = integrate_geodesic(spray, initial, horizon, options)?;
    let (xb, vb) = c.state_at(b).ok_or_else(|| {
        IntegrationError::InvalidInput(format!("shift b = {b} lies outside the solution domain"))
    })?;
    let (p, q) = ((c.t_minus() - b) / a, (c.t_plus() - b) / a);
    let (lo, hi) = (p.min(q).min(0.0), p.max(q).max(0.0));
    let shifted = PointedVector::new(xb, vb.iter().map(|v| a * v).collect());
    let ct = integrate_geodesic(spray, &shifted, (lo, hi), options)?;
    let (lo, hi) = (lo.max(ct.t_minus()), hi.min(ct.t_plus()));
    let mut worst: f64 = 0.0;
    for i in 0..=400 {
        let t = lo + (hi - lo) * i as f64 / 400.0;
        let s = (a * t + b).clamp(c.t_minus(), c.t_plus());
        let (Some(u), Some(w)) = (ct.position_at(t), c.position_at(s)) else {
            continue;
        };
        let d = u.iter().zip(&w).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    Ok(worst <= tol)
}
