//! Sampled probes for global properties of sprays: disprisonment,
//! pseudoconvexity, conjugate points, geodesic connectivity and stability
//! under bump perturbations.
//!
//! Verdicts are heuristics over finitely many seeded trajectories. Every
//! report is reproducible from its seed and parameters.

use crate::expmap::{exp_inverse, exp_point, unit_velocity_seeds, ExpError};
use crate::expr::Expr;
use crate::geometry::{sample_vector, GeometryError, PointedVector, Spray};
use crate::integrator::{
    integrate_flow_differentials, integrate_geodesic, GeodesicSolution, IntegrationError,
    IntegratorOptions, Termination,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Exp(#[from] ExpError),
    #[error("invalid probe input: {0}")]
    InvalidInput(String),
    #[error("geodesic ends at t = {reached} before the requested span {span}")]
    ShortGeodesic { span: f64, reached: f64 },
    #[error("all {attempts} shooting starts failed; best residual {best_residual:e} at v = {best_v:?}")]
    ConnectFailed {
        attempts: usize,
        best_residual: f64,
        best_v: Option<Vec<f64>>,
    },
}

/// A closed axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProbeError> {
        let region = Region { lower, upper };
        region.validate()?;
        Ok(region)
    }

    /// `[−r, r]ⁿ` shifted by `center`.
    pub fn around(center: &[f64], r: f64) -> Self {
        Region {
            lower: center.iter().map(|c| c - r).collect(),
            upper: center.iter().map(|c| c + r).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn validate(&self) -> Result<(), ProbeError> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(ProbeError::InvalidInput("box bounds must have equal, nonzero length".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(ProbeError::InvalidInput(format!(
                "box bounds must be finite with lower ≤ upper: {:?} {:?}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Sup-norm distance from the box; 0 inside.
    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Disprisonment,
    Pseudoconvexity,
    Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Escaped,
    BlewUp,
    Imprisoned,
    /// Pseudoconvexity: the segment back to the last return to K.
    Segment,
    Unresolved,
}

/// Per-trajectory evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryDiagnostics {
    pub index: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub outcome: Outcome,
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub termination_minus: Option<Termination>,
    pub termination_plus: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_forward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_backward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blow_up: Option<f64>,
    /// Largest sup-norm distance from the compact set along the trajectory
    /// (for pseudoconvexity: along the retained segment).
    pub max_excursion: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrajectoryDiagnostics {
    fn new(index: usize, x: Vec<f64>, v: Vec<f64>) -> Self {
        TrajectoryDiagnostics {
            index,
            x,
            v,
            outcome: Outcome::Unresolved,
            t_minus: None,
            t_plus: None,
            termination_minus: None,
            termination_plus: None,
            escape_forward: None,
            escape_backward: None,
            blow_up: None,
            max_excursion: 0.0,
            segment_end: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisprisonmentConfig {
    pub compact: Region,
    pub horizon: f64,
    pub budget: usize,
    /// Initial speeds are drawn from `[speed/4, speed]`.
    #[serde(default = "default_speed")]
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoconvexityConfig {
    pub compact: Region,
    /// Candidate boxes `K′ ⊇ K`, increasing.
    pub growth_schedule: Vec<Region>,
    pub horizon: f64,
    pub budget: usize,
    #[serde(default = "default_speed")]
    pub speed: f64,
}

fn default_speed() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    #[serde(default)]
    pub disprisonment: Option<DisprisonmentConfig>,
    #[serde(default)]
    pub pseudoconvexity: Option<PseudoconvexityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeParameters {
    Disprisonment(DisprisonmentConfig),
    Pseudoconvexity(PseudoconvexityConfig),
    Stability {
        bump: Vec<String>,
        amplitudes: Vec<f64>,
        probes: ProbesConfig,
    },
}

/// One amplitude of a stability experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub amplitude: f64,
    pub persists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disprisonment: Option<ProbeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudoconvexity: Option<ProbeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub verdict: Verdict,
    pub seed: u64,
    pub parameters: ProbeParameters,
    pub evidence: Vec<TrajectoryDiagnostics>,
    /// Index into `evidence` of the trajectory behind a fail verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
    /// Pseudoconvexity: index of the smallest `K′` containing every segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub containing_box: Option<usize>,
    /// Pseudoconvexity: `(trajectories used, max excursion)` for growing prefixes.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excursion_trend: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stability: Vec<StabilityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub largest_persistent_amplitude: Option<f64>,
    pub note: String,
}

impl ProbeReport {
    fn new(kind: ProbeKind, seed: u64, parameters: ProbeParameters) -> Self {
        ProbeReport {
            kind,
            verdict: Verdict::Inconclusive,
            seed,
            parameters,
            evidence: Vec::new(),
            witness: None,
            containing_box: None,
            excursion_trend: Vec::new(),
            stability: Vec::new(),
            largest_persistent_amplitude: None,
            note: String::new(),
        }
    }

    /// Initial data of the witness trajectory, if any.
    pub fn witness_initial(&self) -> Option<PointedVector> {
        let w = &self.evidence[self.witness?];
        Some(PointedVector::new(w.x.clone(), w.v.clone()))
    }
}

fn check_region(spray: &Spray, region: &Region) -> Result<(), ProbeError> {
    region.validate()?;
    spray.chart().check_len(&region.lower)?;
    let chart = spray.chart();
    let inside = (0..chart.dimension()).all(|i| {
        let axis = chart.axis(i);
        axis.contains(region.lower[i]) && axis.contains(region.upper[i])
    });
    if !inside {
        return Err(ProbeError::InvalidInput(format!(
            "box {:?}..{:?} is not inside the chart",
            region.lower, region.upper
        )));
    }
    Ok(())
}

fn check_budget(horizon: f64, budget: usize, speed: f64) -> Result<(), ProbeError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ProbeError::InvalidInput("horizon must be positive".into()));
    }
    if budget == 0 {
        return Err(ProbeError::InvalidInput("budget must be positive".into()));
    }
    if !(speed.is_finite() && speed > 0.0) {
        return Err(ProbeError::InvalidInput("speed must be positive".into()));
    }
    Ok(())
}

/// Nonzero initial velocity: uniform direction, speed in `[speed/4, speed]`.
fn sample_velocity<R: Rng + ?Sized>(rng: &mut R, n: usize, speed: f64) -> Vec<f64> {
    loop {
        let d = sample_vector(rng, n, 1.0);
        let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (1e-3..=1.0).contains(&norm) {
            let s = speed * (0.25 + 0.75 * rng.gen::<f64>());
            return d.iter().map(|c| c * s / norm).collect();
        }
    }
}

fn initial_conditions(region: &Region, budget: usize, speed: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget)
        .map(|_| {
            let x = region.sample(&mut rng);
            let v = sample_velocity(&mut rng, region.dimension(), speed);
            (x, v)
        })
        .collect()
}

const TRACE_POINTS: usize = 1024;

/// Positions on step nodes plus a uniform grid over `[t0, t1]`, in time order.
fn trace(sol: &GeodesicSolution, t0: f64, t1: f64) -> Vec<(f64, Vec<f64>)> {
    let mut times: Vec<f64> = sol.samples().into_iter().map(|s| s.t).filter(|t| (t0..=t1).contains(t)).collect();
    times.extend((0..=TRACE_POINTS).map(|i| t0 + (t1 - t0) * i as f64 / TRACE_POINTS as f64));
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .filter_map(|t| sol.position_at(t).map(|x| (t, x)))
        .collect()
}

/// First time, going away from 0 through `points`, at which the curve is outside `region`,
/// refined by bisection.
fn first_exit(sol: &GeodesicSolution, region: &Region, points: &[(f64, Vec<f64>)]) -> Option<f64> {
    let mut inside_t = 0.0;
    for (t, x) in points {
        if region.contains(x) {
            inside_t = *t;
            continue;
        }
        let (mut a, mut b) = (inside_t, *t);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            match sol.position_at(mid) {
                Some(x) if region.contains(&x) => a = mid,
                _ => b = mid,
            }
        }
        return Some(b);
    }
    None
}

fn disprisonment_one(
    spray: &Spray,
    region: &Region,
    horizon: f64,
    index: usize,
    x: Vec<f64>,
    v: Vec<f64>,
    options: &IntegratorOptions,
) -> TrajectoryDiagnostics {
    let mut diag = TrajectoryDiagnostics::new(index, x.clone(), v.clone());
    let sol = match integrate_geodesic(spray, &PointedVector::new(x, v), (-horizon, horizon), options) {
        Ok(sol) => sol,
        Err(e) => {
            diag.error = Some(e.to_string());
            return diag;
        }
    };
    diag.t_minus = Some(sol.t_minus());
    diag.t_plus = Some(sol.t_plus());
    diag.termination_minus = Some(sol.termination_minus());
    diag.termination_plus = Some(sol.termination_plus());
    let forward = trace(&sol, 0.0, sol.t_plus());
    let mut backward = trace(&sol, sol.t_minus(), 0.0);
    backward.reverse();
    diag.max_excursion = forward
        .iter()
        .chain(&backward)
        .map(|(_, x)| region.distance(x))
        .fold(0.0, f64::max);
    diag.escape_forward = first_exit(&sol, region, &forward);
    diag.escape_backward = first_exit(&sol, region, &backward);
    if sol.termination_plus() == Termination::BlowUp {
        diag.blow_up = Some(sol.t_plus());
    } else if sol.termination_minus() == Termination::BlowUp {
        diag.blow_up = Some(sol.t_minus());
    }
    let reached = sol.termination_plus() == Termination::HorizonReached
        && sol.termination_minus() == Termination::HorizonReached;
    diag.outcome = if diag.escape_forward.is_some() || diag.escape_backward.is_some() {
        Outcome::Escaped
    } else if diag.blow_up.is_some() {
        Outcome::BlewUp
    } else if reached {
        Outcome::Imprisoned
    } else {
        Outcome::Unresolved
    };
    diag
}

/// Samples geodesics from `compact × velocity shell` over `[−horizon, horizon]`.
///
/// Fails with a witness if a trajectory stays in the box for the whole window;
/// passes if every trajectory leaves the box or blows up.
pub fn disprisonment_probe(
    spray: &Spray,
    config: &DisprisonmentConfig,
    seed: u64,
    options: &IntegratorOptions,
) -> Result<ProbeReport, ProbeError> {
    check_region(spray, &config.compact)?;
    check_budget(config.horizon, config.budget, config.speed)?;
    let starts = initial_conditions(&config.compact, config.budget, config.speed, seed);
    let evidence: Vec<TrajectoryDiagnostics> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (x, v))| disprisonment_one(spray, &config.compact, config.horizon, i, x, v, options))
        .collect();
    let mut report = ProbeReport::new(
        ProbeKind::Disprisonment,
        seed,
        ProbeParameters::Disprisonment(config.clone()),
    );
    report.witness = evidence.iter().position(|d| d.outcome == Outcome::Imprisoned);
    let resolved = evidence
        .iter()
        .all(|d| matches!(d.outcome, Outcome::Escaped | Outcome::BlewUp));
    report.verdict = if report.witness.is_some() {
        Verdict::Fail
    } else if resolved {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    report.note = match report.verdict {
        Verdict::Fail => format!(
            "trajectory {} stays in the box on [-{h}, {h}]",
            report.witness.unwrap_or_default(),
            h = config.horizon
        ),
        Verdict::Pass => format!("all {} sampled geodesics leave the box or blow up", evidence.len()),
        Verdict::Inconclusive => "some trajectories neither escaped nor stayed for the full window".into(),
    };
    report.evidence = evidence;
    Ok(report)
}

fn pseudoconvexity_one(
    spray: &Spray,
    config: &PseudoconvexityConfig,
    index: usize,
    x: Vec<f64>,
    v: Vec<f64>,
    options: &IntegratorOptions,
) -> (TrajectoryDiagnostics, Option<usize>) {
    let mut diag = TrajectoryDiagnostics::new(index, x.clone(), v.clone());
    let sol = match integrate_geodesic(spray, &PointedVector::new(x, v), (0.0, config.horizon), options) {
        Ok(sol) => sol,
        Err(e) => {
            diag.error = Some(e.to_string());
            return (diag, None);
        }
    };
    diag.t_minus = Some(sol.t_minus());
    diag.t_plus = Some(sol.t_plus());
    diag.termination_minus = Some(sol.termination_minus());
    diag.termination_plus = Some(sol.termination_plus());
    if sol.termination_plus() == Termination::BlowUp {
        diag.blow_up = Some(sol.t_plus());
    }
    let points = trace(&sol, 0.0, sol.t_plus());
    let last = points
        .iter()
        .rposition(|(_, x)| config.compact.contains(x))
        .unwrap_or(0);
    let segment = &points[..=last];
    diag.segment_end = Some(segment[last].0);
    diag.max_excursion = segment
        .iter()
        .map(|(_, x)| config.compact.distance(x))
        .fold(0.0, f64::max);
    diag.outcome = Outcome::Segment;
    let level = config
        .growth_schedule
        .iter()
        .position(|k| segment.iter().all(|(_, x)| k.contains(x)));
    (diag, level)
}

/// Samples geodesic segments starting in `K` and ending at their last return
/// to `K`, and finds the first box of the schedule containing all of them.
///
/// Passes when such a box exists. Failure cannot be certified by sampling,
/// so otherwise the verdict is inconclusive and the report carries the growth
/// of the maximal excursion with the number of sampled trajectories.
pub fn pseudoconvexity_probe(
    spray: &Spray,
    config: &PseudoconvexityConfig,
    seed: u64,
    options: &IntegratorOptions,
) -> Result<ProbeReport, ProbeError> {
    check_region(spray, &config.compact)?;
    check_budget(config.horizon, config.budget, config.speed)?;
    for k in &config.growth_schedule {
        k.validate()?;
        if k.dimension() != config.compact.dimension() || !k.contains_region(&config.compact) {
            return Err(ProbeError::InvalidInput("every box of the growth schedule must contain K".into()));
        }
    }
    if config
        .growth_schedule
        .windows(2)
        .any(|w| !w[1].contains_region(&w[0]))
    {
        return Err(ProbeError::InvalidInput("growth schedule must be nested".into()));
    }
    let starts = initial_conditions(&config.compact, config.budget, config.speed, seed);
    let results: Vec<(TrajectoryDiagnostics, Option<usize>)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (x, v))| pseudoconvexity_one(spray, config, i, x, v, options))
        .collect();
    let mut report = ProbeReport::new(
        ProbeKind::Pseudoconvexity,
        seed,
        ProbeParameters::Pseudoconvexity(config.clone()),
    );
    let failed = results.iter().any(|(d, _)| d.error.is_some());
    let level = results
        .iter()
        .map(|(_, l)| *l)
        .try_fold(0usize, |acc, l| l.map(|l| acc.max(l)));
    let budget = results.len();
    let mut prefixes = vec![budget.div_ceil(4), budget.div_ceil(2), budget];
    prefixes.dedup();
    report.excursion_trend = prefixes
        .into_iter()
        .map(|m| {
            let worst = results[..m].iter().map(|(d, _)| d.max_excursion).fold(0.0, f64::max);
            (m, worst)
        })
        .collect();
    let growing = report.excursion_trend.windows(2).all(|w| w[1].1 > w[0].1) && report.excursion_trend.len() > 1;
    match level {
        Some(level) if !failed => {
            report.verdict = Verdict::Pass;
            report.containing_box = Some(level);
            report.note = format!("all {budget} sampled segments lie in schedule box {level}");
        }
        _ => {
            report.verdict = Verdict::Inconclusive;
            report.note = if failed {
                "some trajectories could not be integrated".into()
            } else if growing {
                "segments leave every box of the schedule and excursions keep growing with the budget".into()
            } else {
                "segments leave every box of the schedule".into()
            };
        }
    }
    report.evidence = results.into_iter().map(|(d, _)| d).collect();
    Ok(report)
}

/// Parameters `t` in `(0, span]` (or `[span, 0)`) where `det d(exp^t_p)_v`
/// changes sign, i.e. where `c_v(t)` is conjugate to `p` along `c_v`.
///
/// The determinant of the flow-differential matrix with seeds `(0, e_j)`
/// is sampled on `grid` equal steps and each sign change is refined by
/// bisection to `1e-6`.
pub fn conjugate_point_scan(
    spray: &Spray,
    p: &[f64],
    v: &[f64],
    span: f64,
    grid: usize,
    options: &IntegratorOptions,
) -> Result<Vec<f64>, ProbeError> {
    if !(span.is_finite() && span != 0.0) || grid == 0 {
        return Err(ProbeError::InvalidInput("span must be nonzero and the grid nonempty".into()));
    }
    let n = spray.dimension();
    let range = (span.min(0.0), span.max(0.0));
    let sol = integrate_geodesic(spray, &PointedVector::new(p.to_vec(), v.to_vec()), range, options)?;
    let reached = if span > 0.0 { sol.t_plus() } else { sol.t_minus() };
    if reached != span {
        return Err(ProbeError::ShortGeodesic { span, reached });
    }
    let fds = integrate_flow_differentials(&sol, &unit_velocity_seeds(n))?;
    let det = |t: f64| -> f64 {
        let mut m = DMatrix::zeros(n, n);
        for (j, fd) in fds.iter().enumerate() {
            let (dx, _) = fd.at(t).expect("inside the scanned span");
            for (i, c) in dx.into_iter().enumerate() {
                m[(i, j)] = c;
            }
        }
        m.determinant()
    };
    let mut found = Vec::new();
    let ts: Vec<f64> = (1..=grid)
        .map(|i| if i == grid { span } else { span * i as f64 / grid as f64 })
        .collect();
    let values: Vec<f64> = ts.iter().map(|&t| det(t)).collect();
    for i in 0..ts.len() {
        if values[i] == 0.0 {
            found.push(ts[i]);
            continue;
        }
        if i + 1 < ts.len() && values[i] * values[i + 1] < 0.0 {
            let (mut a, mut b) = (ts[i], ts[i + 1]);
            let sa = values[i].signum();
            while (b - a).abs() > 1e-7 {
                let mid = 0.5 * (a + b);
                if det(mid).signum() == sa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            found.push(0.5 * (a + b));
        }
    }
    Ok(found)
}

/// Result of a successful shooting solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub v: Vec<f64>,
    /// Euclidean norm of `exp^ε_p(v) − q` on re-evaluation.
    pub residual: f64,
    pub start: usize,
}

/// Finds `v` with `exp^ε_p(v) = q` by multistart damped Newton shooting.
///
/// Start 0 is `(q − p)/ε`; later starts perturb it randomly. Every candidate is
/// re-evaluated and accepted only when the residual is at most `1e-8`.
pub fn connect_geodesically(
    spray: &Spray,
    p: &[f64],
    q: &[f64],
    epsilon: f64,
    multistart_count: usize,
    seed: u64,
    options: &IntegratorOptions,
) -> Result<ShootingResult, ProbeError> {
    const ACCEPT: f64 = 1e-8;
    let chart = spray.chart();
    chart.check_len(p)?;
    chart.check_len(q)?;
    if !chart.contains(q) {
        return Err(ProbeError::InvalidInput(format!("target {q:?} lies outside the chart")));
    }
    if epsilon == 0.0 || !epsilon.is_finite() {
        return Err(ProbeError::InvalidInput("epsilon must be nonzero".into()));
    }
    let base: Vec<f64> = q.iter().zip(p).map(|(a, b)| (a - b) / epsilon).collect();
    let scale = base.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = multistart_count.max(1);
    let mut best: (f64, Option<Vec<f64>>) = (f64::INFINITY, None);
    let residual_of = |v: &[f64]| -> Option<f64> {
        let x = exp_point(spray, p, v, epsilon, options).ok()?;
        Some(x.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    };
    for start in 0..attempts {
        let guess: Vec<f64> = if start == 0 {
            base.clone()
        } else {
            let shift = sample_vector(&mut rng, base.len(), scale);
            base.iter().zip(shift).map(|(b, s)| b + s).collect()
        };
        let candidate = match exp_inverse(spray, p, epsilon, q, &guess, options) {
            Ok(v) => v,
            Err(ExpError::NoConvergence { v, .. }) | Err(ExpError::SingularJacobian { v }) => {
                if let Some(r) = residual_of(&v) {
                    if r < best.0 {
                        best = (r, Some(v));
                    }
                }
                continue;
            }
            Err(ExpError::OutsideDomain { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if let Some(r) = residual_of(&candidate) {
            if r <= ACCEPT {
                return Ok(ShootingResult {
                    v: candidate,
                    residual: r,
                    start,
                });
            }
            if r < best.0 {
                best = (r, Some(candidate));
            }
        }
    }
    Err(ProbeError::ConnectFailed {
        attempts,
        best_residual: best.0,
        best_v: best.1,
    })
}

/// Reruns the configured probes on `S + a·bump` for each amplitude with the
/// same seed, and reports the largest amplitude up to which both verdicts
/// agree with those of the unperturbed spray.
pub fn stability_experiment(
    spray: &Spray,
    bump: &[Expr],
    amplitudes: &[f64],
    probes: &ProbesConfig,
    seed: u64,
    options: &IntegratorOptions,
) -> Result<ProbeReport, ProbeError> {
    if probes.disprisonment.is_none() && probes.pseudoconvexity.is_none() {
        return Err(ProbeError::InvalidInput("at least one probe must be configured".into()));
    }
    if amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(ProbeError::InvalidInput("amplitudes must be finite".into()));
    }
    let run = |s: &Spray, amplitude: f64| -> Result<StabilityRow, ProbeError> {
        let disprisonment = probes
            .disprisonment
            .as_ref()
            .map(|c| disprisonment_probe(s, c, seed, options))
            .transpose()?;
        let pseudoconvexity = probes
            .pseudoconvexity
            .as_ref()
            .map(|c| pseudoconvexity_probe(s, c, seed, options))
            .transpose()?;
        Ok(StabilityRow {
            amplitude,
            persists: true,
            disprisonment,
            pseudoconvexity,
        })
    };
    let reference = run(spray, 0.0)?;
    let verdicts = |row: &StabilityRow| {
        (
            row.disprisonment.as_ref().map(|r| r.verdict),
            row.pseudoconvexity.as_ref().map(|r| r.verdict),
        )
    };
    let mut order: Vec<f64> = amplitudes.to_vec();
    order.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut rows = Vec::with_capacity(order.len());
    for &a in &order {
        let perturbed = spray.perturbed(bump, a)?;
        let mut row = run(&perturbed, a)?;
        row.persists = verdicts(&row) == verdicts(&reference);
        rows.push(row);
    }
    let mut report = ProbeReport::new(
        ProbeKind::Stability,
        seed,
        ProbeParameters::Stability {
            bump: bump.iter().map(|b| b.to_string()).collect(),
            amplitudes: amplitudes.to_vec(),
            probes: probes.clone(),
        },
    );
    report.largest_persistent_amplitude = rows
        .iter()
        .take_while(|r| r.persists)
        .last()
        .map(|r| r.amplitude.abs());
    let all = rows.iter().all(|r| r.persists);
    report.verdict = if all { Verdict::Pass } else { Verdict::Fail };
    report.witness = None;
    report.note = if all {
        format!("verdicts persist at all {} amplitudes", rows.len())
    } else {
        let first = rows.iter().find(|r| !r.persists).map(|r| r.amplitude).unwrap_or_default();
        format!("verdicts change at amplitude {first}")
    };
    report.stability = rows;
    Ok(report)
}
