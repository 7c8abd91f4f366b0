//! Dormand–Prince 5(4) tableau, one step with error estimate, and the
//! fourth-order continuous extension.

pub(crate) const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Stage derivatives and the fifth-order result of one step.
pub(crate) struct Stages {
    pub k: [Vec<f64>; 7],
    pub z1: Vec<f64>,
}

impl Stages {
    pub fn new(dim: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            z1: vec![0.0; dim],
        }
    }
}

/// Runs the seven stages from `z0` with step `h`. `k[0]` must already hold
/// `f(0, z0)`; `f(c, z, out)` evaluates the right-hand side at stage node `c`.
/// On success `z1` holds the new state and `k[6] = f(1, z1)`.
pub(crate) fn step<F, Err>(f: &mut F, z0: &[f64], h: f64, st: &mut Stages) -> Result<(), (usize, Err)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Err>,
{
    let dim = z0.len();
    let mut tmp = vec![0.0; dim];
    for s in 1..7 {
        for (i, t) in tmp.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, a) in A[s].iter().enumerate() {
                acc += a * st.k[j][i];
            }
            *t = z0[i] + h * acc;
        }
        f(C[s], &tmp, &mut st.k[s]).map_err(|e| (s, e))?;
        if s == 6 {
            st.z1.copy_from_slice(&tmp);
        }
    }
    Ok(())
}

/// Scaled RMS norm of the embedded error estimate.
pub(crate) fn error_norm(z0: &[f64], st: &Stages, h: f64, rtol: f64, atol: f64) -> f64 {
    let dim = z0.len();
    let mut sum = 0.0;
    for i in 0..dim {
        let mut e = 0.0;
        for (s, coef) in E.iter().enumerate() {
            e += coef * st.k[s][i];
        }
        let sc = atol + rtol * z0[i].abs().max(st.z1[i].abs());
        sum += (h * e / sc).powi(2);
    }
    (sum / dim as f64).sqrt()
}

/// Coefficients of the continuous extension over one step.
#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub r: [Vec<f64>; 5],
}

impl Dense {
    pub fn new(z0: &[f64], st: &Stages, h: f64) -> Self {
        let dim = z0.len();
        let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
        for i in 0..dim {
            let diff = st.z1[i] - z0[i];
            let bspl = h * st.k[0][i] - diff;
            r[0][i] = z0[i];
            r[1][i] = diff;
            r[2][i] = bspl;
            r[3][i] = diff - h * st.k[6][i] - bspl;
            let mut acc = 0.0;
            for (s, d) in D.iter().enumerate() {
                acc += d * st.k[s][i];
            }
            r[4][i] = h * acc;
        }
        Dense { r }
    }

    /// State at fraction `theta ∈ [0, 1]` of the step.
    pub fn eval(&self, theta: f64, out: &mut [f64]) {
        let s = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            let r = |j: usize| self.r[j][i];
            *o = r(0) + theta * (r(1) + s * (r(2) + theta * (r(3) + s * r(4))));
        }
    }

    /// Derivative with respect to `theta`; divide by `h` for the time derivative.
    pub fn eval_derivative(&self, theta: f64, out: &mut [f64]) {
        let s = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            let r = |j: usize| self.r[j][i];
            let a = r(3) + s * r(4);
            let da = -r(4);
            let b = r(2) + theta * a;
            let db = a + theta * da;
            let c = r(1) + s * b;
            let dc = -b + s * db;
            *o = c + theta * dc;
        }
    }
}
