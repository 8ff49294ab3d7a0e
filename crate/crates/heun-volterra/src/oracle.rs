//! Independent adaptive Runge-Kutta integrator for y'' = B1 y' + B2 y with
//! complex coefficients of a real variable. Every derived reference value in
//! the test suites is generated here, so this module must stay method
//! independent from the Volterra machinery.

use crate::C64;

/// Complex coefficient of a real variable.
pub type Coefficient = Box<dyn Fn(f64) -> C64 + Send + Sync>;

/// Second-order scalar problem y'' - B1 y' - B2 y = 0 with initial data at z0.
pub struct OdeProblem {
    pub b1: Coefficient,
    pub b2: Coefficient,
    pub z0: f64,
    pub y0: C64,
    pub dy0: C64,
}

impl OdeProblem {
    pub fn new(
        b1: impl Fn(f64) -> C64 + Send + Sync + 'static,
        b2: impl Fn(f64) -> C64 + Send + Sync + 'static,
        z0: f64,
        y0: C64,
        dy0: C64,
    ) -> Self {
        Self { b1: Box::new(b1), b2: Box::new(b2), z0, y0, dy0 }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Interpolate output points from the dense formula instead of clipping
    /// steps to land on them. Clipping is slower but avoids interpolation
    /// error entirely, so reference values are produced with this off.
    pub dense_output: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 1_000_000, dense_output: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("tolerances must lie in (0, 1): rel_tol = {rel}, abs_tol = {abs}")]
    BadTolerance { rel: f64, abs: f64 },
    #[error("max_steps must be at least 10, got {0}")]
    BadMaxSteps(usize),
    #[error("step size underflowed at z = {at} (h = {h:e}); singular point ahead")]
    StepUnderflow { at: f64, h: f64 },
    #[error("exceeded {max} steps at z = {at}")]
    MaxSteps { max: usize, at: f64 },
    #[error("output points must be monotone on one side of z0 = {z0}")]
    BadQueryPoints { z0: f64 },
    #[error("need at least 5 samples, got {0}")]
    TooFewSamples(usize),
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the embedded orders; contracts against k including FSAL.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients for the quartic interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

type State = [C64; 2];

fn axpy(y: &State, h: f64, ks: &[(f64, State)]) -> State {
    let mut out = *y;
    for (w, k) in ks {
        if *w != 0.0 {
            out[0] += h * *w * k[0];
            out[1] += h * *w * k[1];
        }
    }
    out
}

fn finite(s: &State) -> bool {
    s.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

struct Stepper<'a> {
    problem: &'a OdeProblem,
    cfg: &'a SolverConfig,
    t: f64,
    y: State,
    k0: State,
    h: f64,
    dir: f64,
    facold: f64,
    steps: usize,
}

impl<'a> Stepper<'a> {
    fn rhs(&self, z: f64, s: &State) -> State {
        [s[1], (self.problem.b1)(z) * s[1] + (self.problem.b2)(z) * s[0]]
    }

    fn scaled_err(&self, y: &State, ynew: &State, e: &State) -> f64 {
        let mut sum = 0.0;
        for i in 0..2 {
            for (ec, yc, nc) in [
                (e[i].re, y[i].re, ynew[i].re),
                (e[i].im, y[i].im, ynew[i].im),
            ] {
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * yc.abs().max(nc.abs());
                sum += (ec / sc) * (ec / sc);
            }
        }
        (sum / 4.0).sqrt()
    }

    /// Initial step size estimate from the scaled magnitudes of y and y'.
    fn initial_step(&self, span: f64) -> f64 {
        let sc = |v: f64| self.cfg.abs_tol + self.cfg.rel_tol * v.abs();
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..2 {
            for (fc, yc) in [
                (self.k0[i].re, self.y[i].re),
                (self.k0[i].im, self.y[i].im),
            ] {
                dnf += (fc / sc(yc)) * (fc / sc(yc));
                dny += (yc / sc(yc)) * (yc / sc(yc));
            }
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(span.abs());
        let y1 = axpy(&self.y, self.dir * h, &[(1.0, self.k0)]);
        let f1 = self.rhs(self.t + self.dir * h, &y1);
        let mut der2 = 0.0;
        for i in 0..2 {
            for (d, yc) in [
                ((f1[i].re - self.k0[i].re), self.y[i].re),
                ((f1[i].im - self.k0[i].im), self.y[i].im),
            ] {
                der2 += (d / sc(yc)) * (d / sc(yc));
            }
        }
        let der12 = (der2.sqrt() / h).max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        self.dir * (100.0 * h).min(h1).min(span.abs())
    }

    /// One accepted step; returns (t_new, y_new, k_stages) for dense output.
    fn step(&mut self, h_cap: f64) -> Result<(f64, State, [State; 7]), OracleError> {
        loop {
            self.steps += 1;
            if self.steps > self.cfg.max_steps {
                return Err(OracleError::MaxSteps { max: self.cfg.max_steps, at: self.t });
            }
            let mut h = self.h;
            if h.abs() > h_cap {
                h = self.dir * h_cap;
            }
            if h.abs() < 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(OracleError::StepUnderflow { at: self.t, h });
            }
            let mut k = [[C64::new(0.0, 0.0); 2]; 7];
            k[0] = self.k0;
            for s in 1..6 {
                let pairs: Vec<(f64, State)> =
                    (0..s).map(|j| (A[s - 1][j], k[j])).collect();
                let ys = axpy(&self.y, h, &pairs);
                k[s] = self.rhs(self.t + C[s] * h, &ys);
            }
            let pairs: Vec<(f64, State)> = (0..6).map(|j| (A[5][j], k[j])).collect();
            let ynew = axpy(&self.y, h, &pairs);
            k[6] = self.rhs(self.t + h, &ynew);
            let epairs: Vec<(f64, State)> = (0..7).map(|j| (E[j], k[j])).collect();
            let zero = [C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
            let edelta = axpy(&zero, h, &epairs);
            let err = if finite(&ynew) && finite(&edelta) {
                self.scaled_err(&self.y, &ynew, &edelta)
            } else {
                f64::INFINITY
            };

            let fac11 = if err.is_finite() { err.powf(0.17) } else { 10.0 };
            if err <= 1.0 {
                let fac = (fac11 / self.facold.powf(0.04) / 0.9).clamp(0.1, 5.0);
                self.facold = err.max(1e-4);
                let t_new = self.t + h;
                let out = (t_new, ynew, k);
                self.t = t_new;
                self.y = ynew;
                self.k0 = k[6];
                self.h = h / fac;
                return Ok(out);
            }
            self.h = h / (fac11 / 0.9).min(5.0);
        }
    }
}

/// Dense interpolant over one step; s in [0,1], returns the full state.
fn interpolate(y0: &State, ynew: &State, k: &[State; 7], h: f64, s: f64) -> State {
    let mut out = [C64::new(0.0, 0.0); 2];
    let s1 = 1.0 - s;
    for i in 0..2 {
        let cont0 = y0[i];
        let cont1 = ynew[i] - y0[i];
        let cont2 = h * k[0][i] - cont1;
        let cont3 = cont1 - h * k[6][i] - cont2;
        let mut d = C64::new(0.0, 0.0);
        for j in 0..7 {
            d += D[j] * k[j][i];
        }
        let cont4 = h * d;
        out[i] = cont0 + s * (cont1 + s1 * (cont2 + s * (cont3 + s1 * cont4)));
    }
    out
}

fn validate(cfg: &SolverConfig) -> Result<(), OracleError> {
    let ok = |t: f64| t > 0.0 && t < 1.0;
    if !ok(cfg.rel_tol) || !ok(cfg.abs_tol) {
        return Err(OracleError::BadTolerance { rel: cfg.rel_tol, abs: cfg.abs_tol });
    }
    if cfg.max_steps < 10 {
        return Err(OracleError::BadMaxSteps(cfg.max_steps));
    }
    Ok(())
}

/// Integrate the problem and report (y, y') at each requested point.
///
/// The points must be monotone and all on one side of z0 (either direction);
/// z0 itself may be included.
pub fn solve(
    problem: &OdeProblem,
    zs: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(C64, C64)>, OracleError> {
    validate(cfg)?;
    if zs.is_empty() {
        return Ok(Vec::new());
    }
    let z0 = problem.z0;
    let dir = if zs[zs.len() - 1] >= z0 { 1.0 } else { -1.0 };
    for w in zs.windows(2) {
        if dir * (w[1] - w[0]) < 0.0 {
            return Err(OracleError::BadQueryPoints { z0 });
        }
    }
    if dir * (zs[0] - z0) < 0.0 {
        return Err(OracleError::BadQueryPoints { z0 });
    }

    let y0: State = [problem.y0, problem.dy0];
    let mut out = Vec::with_capacity(zs.len());
    let mut idx = 0;
    while idx < zs.len() && (zs[idx] - z0).abs() == 0.0 {
        out.push((y0[0], y0[1]));
        idx += 1;
    }
    if idx == zs.len() {
        return Ok(out);
    }

    let z_end = zs[zs.len() - 1];
    let mut st = Stepper {
        problem,
        cfg,
        t: z0,
        y: y0,
        k0: [C64::new(0.0, 0.0); 2],
        h: 0.0,
        dir,
        facold: 1e-4,
        steps: 0,
    };
    st.k0 = st.rhs(z0, &y0);
    st.h = st.initial_step(z_end - z0);

    while idx < zs.len() {
        // Points within roundoff of the current abscissa need no step.
        while idx < zs.len() && (zs[idx] - st.t).abs() <= 1e-14 * st.t.abs().max(1.0) {
            out.push((st.y[0], st.y[1]));
            idx += 1;
        }
        if idx == zs.len() {
            break;
        }
        // Cap the step at the remaining span (dense mode) or the next
        // requested point (clip mode).
        let limit = if cfg.dense_output { z_end } else { zs[idx] };
        let t_prev = st.t;
        let y_prev = st.y;
        let (t_new, y_new, k) = st.step((limit - st.t).abs())?;
        let h = t_new - t_prev;
        while idx < zs.len() && dir * (zs[idx] - t_new) <= 0.0 {
            let z = zs[idx];
            if (z - t_new).abs() <= 1e-14 * t_new.abs().max(1.0) {
                out.push((y_new[0], y_new[1]));
            } else {
                let s = (z - t_prev) / h;
                let yi = interpolate(&y_prev, &y_new, &k, h, s);
                out.push((yi[0], yi[1]));
            }
            idx += 1;
        }
    }
    Ok(out)
}

/// Fixed-step advance with the fifth-order weights; no error control.
/// Exists so tests can measure the convergence order directly.
pub fn solve_fixed_step(problem: &OdeProblem, z_end: f64, n_steps: usize) -> (C64, C64) {
    let h = (z_end - problem.z0) / n_steps as f64;
    let rhs = |z: f64, s: &State| -> State {
        [s[1], (problem.b1)(z) * s[1] + (problem.b2)(z) * s[0]]
    };
    let mut t = problem.z0;
    let mut y: State = [problem.y0, problem.dy0];
    for _ in 0..n_steps {
        let mut k = [[C64::new(0.0, 0.0); 2]; 7];
        k[0] = rhs(t, &y);
        for s in 1..6 {
            let pairs: Vec<(f64, State)> = (0..s).map(|j| (A[s - 1][j], k[j])).collect();
            let ys = axpy(&y, h, &pairs);
            k[s] = rhs(t + C[s] * h, &ys);
        }
        let pairs: Vec<(f64, State)> = (0..6).map(|j| (A[5][j], k[j])).collect();
        y = axpy(&y, h, &pairs);
        t += h;
    }
    (y[0], y[1])
}

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion):
/// returns rows for derivative orders 0..=m evaluated at x0.
pub(crate) fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut w = vec![vec![0.0; n]; m + 1];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for kk in (1..=mn).rev() {
                    w[kk][i] = c1 * (kk as f64 * w[kk - 1][i - 1] - c5 * w[kk][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for kk in (1..=mn).rev() {
                w[kk][j] = (c4 * w[kk][j] - kk as f64 * w[kk - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Max-normalized defect of candidate samples (z, y) against the ODE:
/// max |y'' - B1 y' - B2 y| / max |y''|, derivatives from sliding 5-point
/// stencils. Large output means the samples do not solve the equation.
pub fn residual(problem: &OdeProblem, samples: &[(f64, C64)]) -> Result<f64, OracleError> {
    let n = samples.len();
    if n < 5 {
        return Err(OracleError::TooFewSamples(n));
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..n {
        let lo = i.saturating_sub(2).min(n - 5);
        let xs: Vec<f64> = (lo..lo + 5).map(|j| samples[j].0).collect();
        let w = fd_weights(samples[i].0, &xs, 2);
        let mut d1 = C64::new(0.0, 0.0);
        let mut d2 = C64::new(0.0, 0.0);
        for j in lo..lo + 5 {
            d1 += w[1][j - lo] * samples[j].1;
            d2 += w[2][j - lo] * samples[j].1;
        }
        let z = samples[i].0;
        let defect = d2 - (problem.b1)(z) * d1 - (problem.b2)(z) * samples[i].1;
        num = num.max(defect.norm());
        den = den.max(d2.norm());
    }
    if den == 0.0 {
        den = 1.0;
    }
    Ok(num / den)
}
