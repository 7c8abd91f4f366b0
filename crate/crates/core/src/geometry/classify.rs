use super::{sample_vector, Chart, ChristoffelConnection, Homogeneity, HomogeneityKind, Spray};
use crate::expr::EvalError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A sampled point where a scaling identity `f(x, a·y) = aᵐ f(x, y)` fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityWitness {
    pub degree: f64,
    pub kind: HomogeneityKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityClass {
    Complete,
    Positive,
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// The strongest class any candidate degree reached.
    pub class: HomogeneityClass,
    /// Degrees passing the complete test.
    pub complete: Vec<f64>,
    /// Degrees passing the positive test (a superset of `complete`).
    pub positive: Vec<f64>,
    /// One witness per failed (degree, kind) pair.
    pub witnesses: Vec<HomogeneityWitness>,
}

impl HomogeneityReport {
    pub fn is_complete(&self, degree: f64) -> bool {
        self.complete.contains(&degree)
    }

    pub fn is_positive(&self, degree: f64) -> bool {
        self.positive.contains(&degree)
    }
}

fn close(lhs: &[f64], rhs: &[f64], tol: f64) -> bool {
    lhs.iter()
        .zip(rhs)
        .all(|(l, r)| (l - r).abs() <= tol * l.abs().max(r.abs()).max(1.0))
}

fn scale_factor<R: Rng>(rng: &mut R, sample: usize, h: Homogeneity) -> f64 {
    let magnitude = rng.gen_range(-1.5f64..1.5).exp();
    match h.kind {
        HomogeneityKind::Positive => magnitude,
        HomogeneityKind::Complete => {
            if sample == 0 && h.degree >= 2.0 {
                0.0
            } else if sample % 2 == 1 {
                -magnitude
            } else {
                magnitude
            }
        }
    }
}

/// Checks `f(x, a·y) = aᵐ·f(x, y)` at `samples` seeded random triples and
/// returns the first failure.
///
/// Points where `f(x, y)` itself cannot be evaluated are redrawn; a failure
/// to evaluate `f(x, a·y)` counts as a violation.
pub(crate) fn scaling_witness<F>(
    chart: &Chart,
    f: F,
    h: Homogeneity,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Option<HomogeneityWitness>
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>, EvalError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chart.dimension();
    let mut done = 0;
    let mut attempts = 0;
    while done < samples && attempts < 20 * samples.max(1) {
        attempts += 1;
        let x = chart.sample_point(&mut rng);
        let y = sample_vector(&mut rng, n, 2.0);
        let a = scale_factor(&mut rng, done, h);
        let Ok(base) = f(&x, &y) else { continue };
        done += 1;
        let ay: Vec<f64> = y.iter().map(|v| a * v).collect();
        let factor = a.powf(h.degree);
        let ok = factor.is_finite()
            && match f(&x, &ay) {
                Ok(scaled) => {
                    let expected: Vec<f64> = base.iter().map(|b| factor * b).collect();
                    close(&scaled, &expected, tol)
                }
                Err(_) => false,
            };
        if !ok {
            return Some(HomogeneityWitness {
                degree: h.degree,
                kind: h.kind,
                x,
                y,
                a,
            });
        }
    }
    None
}

pub(crate) fn check_degree(
    spray: &Spray,
    h: Homogeneity,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Option<HomogeneityWitness> {
    scaling_witness(spray.chart(), |x, y| spray.eval(x, y), h, samples, tol, seed)
}

/// Sampled homogeneity classification of a spray over candidate degrees.
///
/// The positive test draws `a > 0`; the complete test alternates the sign of
/// `a` and includes `a = 0` when `m ≥ 2`. For non-integer `m`, `aᵐ` is
/// undefined for negative `a`, so complete homogeneity fails there.
pub fn classify_spray_homogeneity(
    spray: &Spray,
    candidates: &[f64],
    samples: usize,
    tol: f64,
    seed: u64,
) -> HomogeneityReport {
    let mut report = HomogeneityReport {
        class: HomogeneityClass::Inhomogeneous,
        complete: Vec::new(),
        positive: Vec::new(),
        witnesses: Vec::new(),
    };
    for &degree in candidates {
        for kind in [HomogeneityKind::Positive, HomogeneityKind::Complete] {
            let h = Homogeneity { kind, degree };
            match check_degree(spray, h, samples, tol, seed) {
                None => match kind {
                    HomogeneityKind::Positive => report.positive.push(degree),
                    HomogeneityKind::Complete => report.complete.push(degree),
                },
                Some(w) => report.witnesses.push(w),
            }
        }
    }
    report.class = if !report.complete.is_empty() {
        HomogeneityClass::Complete
    } else if !report.positive.is_empty() {
        HomogeneityClass::Positive
    } else {
        HomogeneityClass::Inhomogeneous
    };
    report
}

/// A sampled counterexample to one of the connection properties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionWitness {
    pub property: String,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Scale factor, or the second fiber vector for additivity.
    pub detail: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionFlags {
    /// `Γ(x, ·)` linear in the fiber: `h(1)` entries plus additivity.
    pub linear: bool,
    /// `Γ(x, av) = aΓ(x, v)`: the horizontal distribution is invariant
    /// under fiber scaling.
    pub homogeneous: bool,
    /// Values of `m` with `Γ(x, av) = aᵐ⁻¹Γ(x, v)` entrywise.
    pub vh: Vec<f64>,
    pub zero_preserving: bool,
    pub strongly_nonlinear: bool,
    pub witnesses: Vec<ConnectionWitness>,
}

fn flattened(conn: &ChristoffelConnection, x: &[f64], v: &[f64]) -> Result<Vec<f64>, EvalError> {
    conn.entries().iter().map(|e| e.eval(x, v)).collect()
}

/// Sampled classification of a connection in Christoffel form.
///
/// A horizontal vector `(u, Γ(v)u)` at `v` scales under `(x,y,X,Y) ↦
/// (x,ay,aX,aᵐY)` to `(au, aᵐΓ(v)u)` at `av`; requiring it to be horizontal
/// there gives `Γ(x, av) = aᵐ⁻¹Γ(x, v)`, which is the `vh(m)` test. The
/// homogeneity identity scales `Y` by `a` instead, giving the `m = 2` case.
pub fn classify_connection(
    conn: &ChristoffelConnection,
    candidates: &[f64],
    samples: usize,
    tol: f64,
    seed: u64,
) -> ConnectionFlags {
    let chart = conn.chart();
    let n = chart.dimension();
    let f = |x: &[f64], v: &[f64]| flattened(conn, x, v);
    let mut witnesses = Vec::new();
    let mut record = |property: &str, w: HomogeneityWitness| {
        witnesses.push(ConnectionWitness {
            property: property.to_string(),
            x: w.x,
            v: w.y,
            detail: vec![w.a],
        });
    };

    let h1 = Homogeneity {
        kind: HomogeneityKind::Complete,
        degree: 1.0,
    };
    let homogeneous = match scaling_witness(chart, f, h1, samples, tol, seed) {
        None => true,
        Some(w) => {
            record("homogeneous", w);
            false
        }
    };

    let mut vh = Vec::new();
    for &m in candidates {
        let h = Homogeneity {
            kind: HomogeneityKind::Complete,
            degree: m - 1.0,
        };
        match scaling_witness(chart, f, h, samples, tol, seed) {
            None => vh.push(m),
            Some(w) => record(&format!("vh({m})"), w),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xadd1);
    let mut additive = true;
    for _ in 0..samples {
        let x = chart.sample_point(&mut rng);
        let v = sample_vector(&mut rng, n, 2.0);
        let w = sample_vector(&mut rng, n, 2.0);
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        let (Ok(gv), Ok(gw)) = (f(&x, &v), f(&x, &w)) else { continue };
        let expected: Vec<f64> = gv.iter().zip(&gw).map(|(a, b)| a + b).collect();
        let ok = matches!(f(&x, &sum), Ok(got) if close(&got, &expected, tol));
        if !ok {
            witnesses.push(ConnectionWitness {
                property: "additive".to_string(),
                x,
                v,
                detail: w,
            });
            additive = false;
            break;
        }
    }

    let mut zero_preserving = true;
    let mut strongly_nonlinear = false;
    let zero = vec![0.0; n];
    for _ in 0..samples {
        let x = chart.sample_point(&mut rng);
        match f(&x, &zero) {
            Ok(g) if g.iter().all(|e| e.abs() <= tol) => {}
            Ok(_) => {
                strongly_nonlinear = true;
                zero_preserving = false;
                witnesses.push(ConnectionWitness {
                    property: "zero_preserving".to_string(),
                    x,
                    v: zero.clone(),
                    detail: Vec::new(),
                });
                break;
            }
            // undefined at the zero section: neither property is witnessed
            Err(_) => zero_preserving = false,
        }
    }

    ConnectionFlags {
        linear: homogeneous && additive,
        homogeneous,
        vh,
        zero_preserving,
        strongly_nonlinear,
        witnesses,
    }
}
