use super::dopri::{self, Stages};
use super::{GeodesicSolution, IntegrationError, Segment};
use serde::Serialize;

const SUBSTEPS: usize = 2;
const MAX_SUBSTEPS: usize = 4096;

/// A node of the linearized flow: `(δx, δy)` and its time derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct Node {
    t: f64,
    dz: Vec<f64>,
    rate: Vec<f64>,
}

/// Solution of the variational equation
/// `δẋ = δy, δẏ = (∂S/∂x)δx + (∂S/∂y)δy` along a geodesic.
///
/// The fundamental solution is integrated on a refinement of the base step
/// grid, reading the base state from its dense output, and applied to the
/// seed. The result is linear in the seed up to rounding.
#[derive(Debug, Clone)]
pub struct FlowDifferential {
    n: usize,
    seed: (Vec<f64>, Vec<f64>),
    nodes: Vec<Node>,
}

impl FlowDifferential {
    pub fn seed(&self) -> (&[f64], &[f64]) {
        (&self.seed.0, &self.seed.1)
    }

    pub fn t_minus(&self) -> f64 {
        self.nodes.first().map_or(0.0, |n| n.t)
    }

    pub fn t_plus(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.t)
    }

    /// `(δx(t), δy(t))` by cubic Hermite interpolation between nodes.
    pub fn at(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        if !(self.t_minus() <= t && t <= self.t_plus()) {
            return None;
        }
        let idx = self.nodes.partition_point(|node| node.t < t);
        let right = &self.nodes[idx];
        let mut dz = if right.t == t || idx == 0 {
            right.dz.clone()
        } else {
            let left = &self.nodes[idx - 1];
            let h = right.t - left.t;
            let s = (t - left.t) / h;
            let (s2, s3) = (s * s, s * s * s);
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            (0..2 * self.n)
                .map(|i| {
                    h00 * left.dz[i]
                        + h10 * h * left.rate[i]
                        + h01 * right.dz[i]
                        + h11 * h * right.rate[i]
                })
                .collect()
        };
        let dy = dz.split_off(self.n);
        Some((dz, dy))
    }

    /// Node times and values `(t, δx, δy)` in increasing `t`.
    pub fn samples(&self) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        self.nodes
            .iter()
            .map(|node| {
                let (a, b) = node.dz.split_at(self.n);
                (node.t, a.to_vec(), b.to_vec())
            })
            .collect()
    }
}

fn linearized(
    base: &GeodesicSolution,
    seg: &Segment,
    t: f64,
    dz: &[f64],
    out: &mut [f64],
) -> Result<(), IntegrationError> {
    let n = base.dimension();
    let mut z = vec![0.0; 2 * n];
    seg.dense.eval(((t - seg.t0) / seg.h).clamp(0.0, 1.0), &mut z);
    let (jx, jy) = base
        .spray()
        .jacobians(&z[..n], &z[n..])
        .map_err(|source| IntegrationError::Domain { t, source })?;
    out[..n].copy_from_slice(&dz[n..]);
    for k in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += jx[k * n + j] * dz[j] + jy[k * n + j] * dz[n + j];
        }
        out[n + k] = acc;
    }
    Ok(())
}

/// Integrates one base segment with `substeps` equal steps. Returns the nodes
/// and the largest embedded error relative to `rtol·‖δz‖∞`, which is
/// invariant under scaling of the seed.
fn substep_segment(
    base: &GeodesicSolution,
    seg: &Segment,
    start: &Node,
    substeps: usize,
    st: &mut Stages,
) -> Result<(Vec<Node>, f64), IntegrationError> {
    let rtol = base.options().rtol;
    let h = (seg.t_end - seg.t0) / substeps as f64;
    let mut current = start.clone();
    let mut nodes = Vec::with_capacity(substeps);
    let mut worst = 0.0f64;
    for j in 0..substeps {
        let ts = seg.t0 + j as f64 * h;
        st.k[0].copy_from_slice(&current.rate);
        let mut f = |c: f64, z: &[f64], out: &mut [f64]| linearized(base, seg, ts + c * h, z, out);
        dopri::step(&mut f, &current.dz, h, st).map_err(|(_, e)| e)?;
        let scale = current.dz.iter().chain(&st.z1).fold(0.0f64, |m, c| m.max(c.abs()));
        if scale > 0.0 {
            worst = worst.max(dopri::error_norm(&current.dz, st, h, 0.0, rtol * scale));
        }
        let t = if j + 1 == substeps { seg.t_end } else { ts + h };
        current = Node {
            t,
            dz: st.z1.clone(),
            rate: st.k[6].clone(),
        };
        nodes.push(current.clone());
    }
    Ok((nodes, worst))
}

/// Integrates the unit seeds `e₁..e₂ₙ` on a common substep schedule: each
/// base step is split into `2^k ≥ 2` substeps until every column's embedded
/// error is within the base tolerance relative to its own `‖δz‖∞`.
fn fundamental_solution(base: &GeodesicSolution) -> Result<Vec<Vec<Node>>, IntegrationError> {
    let n = base.dimension();
    let first = base
        .forward
        .segments
        .first()
        .or(base.backward.segments.first());
    let mut origins = Vec::with_capacity(2 * n);
    for j in 0..2 * n {
        let mut z0 = vec![0.0; 2 * n];
        z0[j] = 1.0;
        let mut rate0 = vec![0.0; 2 * n];
        if let Some(seg) = first {
            linearized(base, seg, 0.0, &z0, &mut rate0)?;
        }
        origins.push(Node {
            t: 0.0,
            dz: z0,
            rate: rate0,
        });
    }

    let mut columns: Vec<Vec<Node>> = vec![Vec::new(); 2 * n];
    let mut st = Stages::new(2 * n);
    let mut sides: Vec<Vec<Vec<Node>>> = Vec::with_capacity(2);
    for branch in base.branches() {
        let mut side: Vec<Vec<Node>> = vec![Vec::new(); 2 * n];
        let mut current = origins.clone();
        for seg in &branch.segments {
            let mut substeps = SUBSTEPS;
            let accepted = loop {
                let mut trial = Vec::with_capacity(2 * n);
                let mut worst = 0.0f64;
                for node in &current {
                    let (nodes, err) = substep_segment(base, seg, node, substeps, &mut st)?;
                    worst = worst.max(err);
                    trial.push(nodes);
                }
                if worst <= 1.0 || substeps >= MAX_SUBSTEPS {
                    break trial;
                }
                substeps *= 2;
            };
            for (j, nodes) in accepted.into_iter().enumerate() {
                current[j] = nodes.last().expect("at least one substep").clone();
                side[j].extend(nodes);
            }
        }
        sides.push(side);
    }
    let backward = sides.pop().unwrap_or_default();
    let forward = sides.pop().unwrap_or_default();
    for (j, column) in columns.iter_mut().enumerate() {
        if let Some(b) = backward.get(j) {
            column.extend(b.iter().rev().cloned());
        }
        column.push(origins[j].clone());
        if let Some(f) = forward.get(j) {
            column.extend(f.iter().cloned());
        }
    }
    Ok(columns)
}

fn combine(columns: &[Vec<Node>], n: usize, dx: &[f64], dy: &[f64]) -> FlowDifferential {
    let z0: Vec<f64> = dx.iter().chain(dy).copied().collect();
    let nodes = (0..columns[0].len())
        .map(|i| {
            let mut dz = vec![0.0; 2 * n];
            let mut rate = vec![0.0; 2 * n];
            for (col, &c) in columns.iter().zip(&z0) {
                if c != 0.0 {
                    let node = &col[i];
                    for k in 0..2 * n {
                        dz[k] += c * node.dz[k];
                        rate[k] += c * node.rate[k];
                    }
                }
            }
            Node {
                t: columns[0][i].t,
                dz,
                rate,
            }
        })
        .collect();
    FlowDifferential {
        n,
        seed: (dx.to_vec(), dy.to_vec()),
        nodes,
    }
}

fn check_seed(n: usize, dx: &[f64], dy: &[f64]) -> Result<(), IntegrationError> {
    if dx.len() != n || dy.len() != n {
        return Err(IntegrationError::InvalidInput(format!(
            "seed must have two vectors of length {n}"
        )));
    }
    Ok(())
}

pub fn integrate_flow_differential(
    base: &GeodesicSolution,
    dx: &[f64],
    dy: &[f64],
) -> Result<FlowDifferential, IntegrationError> {
    let n = base.dimension();
    check_seed(n, dx, dy)?;
    let columns = fundamental_solution(base)?;
    Ok(combine(&columns, n, dx, dy))
}

/// [`integrate_flow_differential`] for several seeds along the same base,
/// sharing one integration of the fundamental solution.
pub fn integrate_flow_differentials(
    base: &GeodesicSolution,
    seeds: &[(Vec<f64>, Vec<f64>)],
) -> Result<Vec<FlowDifferential>, IntegrationError> {
    let n = base.dimension();
    for (dx, dy) in seeds {
        check_seed(n, dx, dy)?;
    }
    let columns = fundamental_solution(base)?;
    Ok(seeds.iter().map(|(dx, dy)| combine(&columns, n, dx, dy)).collect())
}
