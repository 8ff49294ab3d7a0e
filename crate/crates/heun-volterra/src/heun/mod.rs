//! Heun-class coefficient functions, integral kernels, admissible intervals,
//! and evaluation of H(z) by resolvent reconstruction on either side of z0.
//!
//! All five classes share one canonical form y'' - B1 y' - B2 y = 0 and one
//! kernel pair: K1(z,z0) = 1 + int_{z0}^{z} e^{A(z)-A(zeta)} g(zeta) d zeta
//! with A' = B1 - 1 integrated in closed form per class, and K2(z,z0) =
//! g(z) e^{z-z0} - B2(z), where g = B1 + B2 - 1.

mod engine;

use std::sync::Arc;

use crate::quadrature::{integrate_adaptive, Grid, Interval, QuadConfig, QuadError};
use crate::util;
use crate::volterra::{DiscreteKernel, VolterraError};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeunClass {
    General,
    Confluent,
    Biconfluent,
    DoublyConfluent,
    Triconfluent,
}

impl std::fmt::Display for HeunClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HeunClass::General => "general",
            HeunClass::Confluent => "confluent",
            HeunClass::Biconfluent => "biconfluent",
            HeunClass::DoublyConfluent => "doubly-confluent",
            HeunClass::Triconfluent => "triconfluent",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for HeunClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "general" => Ok(HeunClass::General),
            "confluent" => Ok(HeunClass::Confluent),
            "biconfluent" => Ok(HeunClass::Biconfluent),
            "doubly-confluent" | "doublyconfluent" => Ok(HeunClass::DoublyConfluent),
            "triconfluent" => Ok(HeunClass::Triconfluent),
            other => Err(format!(
                "unknown class '{other}' (expected general|confluent|biconfluent|doubly-confluent|triconfluent)"
            )),
        }
    }
}

/// Parameters of the canonical equation for each class. The General class
/// stores only the product alpha*beta; the kernels never need the factors
/// separately.
#[derive(Clone, Copy, Debug)]
pub enum HeunParams {
    General { gamma: C64, delta: C64, epsilon: C64, alpha_beta: C64, q: C64, t: C64 },
    Confluent { gamma: C64, delta: C64, epsilon: C64, alpha: C64, q: C64 },
    Biconfluent { gamma: C64, delta: C64, epsilon: C64, alpha: C64, q: C64 },
    DoublyConfluent { gamma: C64, delta: C64, alpha: C64, q: C64 },
    Triconfluent { gamma: C64, delta: C64, epsilon: C64, alpha: C64, q: C64 },
}

impl HeunParams {
    pub fn class(&self) -> HeunClass {
        match self {
            HeunParams::General { .. } => HeunClass::General,
            HeunParams::Confluent { .. } => HeunClass::Confluent,
            HeunParams::Biconfluent { .. } => HeunClass::Biconfluent,
            HeunParams::DoublyConfluent { .. } => HeunClass::DoublyConfluent,
            HeunParams::Triconfluent { .. } => HeunClass::Triconfluent,
        }
    }

    fn fields(&self) -> Vec<C64> {
        match *self {
            HeunParams::General { gamma, delta, epsilon, alpha_beta, q, t } => {
                vec![gamma, delta, epsilon, alpha_beta, q, t]
            }
            HeunParams::Confluent { gamma, delta, epsilon, alpha, q }
            | HeunParams::Biconfluent { gamma, delta, epsilon, alpha, q }
            | HeunParams::Triconfluent { gamma, delta, epsilon, alpha, q } => {
                vec![gamma, delta, epsilon, alpha, q]
            }
            HeunParams::DoublyConfluent { gamma, delta, alpha, q } => {
                vec![gamma, delta, alpha, q]
            }
        }
    }
}

/// Initial conditions H(z0) = H0, H'(z0) = dH0 at a nonsingular real point.
#[derive(Clone, Copy, Debug)]
pub struct InitialData {
    pub z0: f64,
    pub h0: C64,
    pub dh0: C64,
}

pub type CoefficientFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// B1, B2 of the canonical form plus the closed-form kernel phase A(z)
/// satisfying A' = B1 - 1 (real logarithms; valid on one side of each
/// singular point, which is all the kernels ever compare).
pub struct CoefficientPair {
    pub b1: CoefficientFn,
    pub b2: CoefficientFn,
    pub singularities: Vec<f64>,
    pub(crate) phase: CoefficientFn,
}

impl CoefficientPair {
    /// g = B1 + B2 - 1, the weight inside K1 and the prefactor of K2.
    pub fn g(&self, z: f64) -> C64 {
        (self.b1)(z) + (self.b2)(z) - 1.0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HeunError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("initial point z0 = {z0} is a singular point of the equation")]
    SingularInitialPoint { z0: f64 },
    #[error("z = {z} lies outside the admissible interval ]{lo}, {hi}[")]
    OutsideInterval { z: f64, lo: f64, hi: f64 },
    #[error("grid crosses the singular point at z = {at}")]
    GridCrossesSingularity { at: f64 },
    #[error("kernel integral failed near z = {at}")]
    QuadratureFailure {
        at: f64,
        #[source]
        source: QuadError,
    },
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error(transparent)]
    Volterra(#[from] VolterraError),
}

fn require_finite(p: &HeunParams) -> Result<(), HeunError> {
    for v in p.fields() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(HeunError::BadParams("parameters must be finite".into()));
        }
    }
    Ok(())
}

fn check_class(class: HeunClass, p: &HeunParams) -> Result<(), HeunError> {
    if class != p.class() {
        return Err(HeunError::BadParams(format!(
            "class {class} does not match the parameter variant {}",
            p.class()
        )));
    }
    Ok(())
}

/// Build B1, B2, the singular-point list, and the kernel phase A for one
/// parameter set.
pub fn coefficients(class: HeunClass, p: &HeunParams) -> Result<CoefficientPair, HeunError> {
    check_class(class, p)?;
    require_finite(p)?;
    match *p {
        HeunParams::General { gamma, delta, epsilon, alpha_beta, q, t } => {
            if t.im != 0.0 {
                return Err(HeunError::BadParams(
                    "complex t is not supported: the real-line interval logic needs a real singular location".into(),
                ));
            }
            let tr = t.re;
            if (tr).abs() < 1e-12 || (tr - 1.0).abs() < 1e-12 {
                return Err(HeunError::BadParams(format!(
                    "t = {tr} collides with the fixed singular points 0 and 1"
                )));
            }
            let b1: CoefficientFn =
                Arc::new(move |z: f64| -(gamma / z + delta / (z - 1.0) + epsilon / (z - tr)));
            let b2: CoefficientFn = Arc::new(move |z: f64| {
                -(alpha_beta * z - q) / (z * (z - 1.0) * (z - tr))
            });
            let phase: CoefficientFn = Arc::new(move |z: f64| {
                -(gamma * z.abs().ln() + delta * (z - 1.0).abs().ln() + epsilon * (z - tr).abs().ln())
                    - z
            });
            let mut singularities = vec![0.0, 1.0, tr];
            singularities.sort_by(f64::total_cmp);
            Ok(CoefficientPair { b1, b2, singularities, phase })
        }
        HeunParams::Confluent { gamma, delta, epsilon, alpha, q } => {
            let b1: CoefficientFn =
                Arc::new(move |z: f64| -(gamma / z + delta / (z - 1.0) + epsilon));
            let b2: CoefficientFn = Arc::new(move |z: f64| -(alpha * z - q) / (z * (z - 1.0)));
            let phase: CoefficientFn = Arc::new(move |z: f64| {
                -(gamma * z.abs().ln() + delta * (z - 1.0).abs().ln() + epsilon * z) - z
            });
            Ok(CoefficientPair { b1, b2, singularities: vec![0.0, 1.0], phase })
        }
        HeunParams::Biconfluent { gamma, delta, epsilon, alpha, q } => {
            let b1: CoefficientFn = Arc::new(move |z: f64| -(gamma / z + delta + epsilon * z));
            let b2: CoefficientFn = Arc::new(move |z: f64| -(alpha * z - q) / z);
            let phase: CoefficientFn = Arc::new(move |z: f64| {
                -(gamma * z.abs().ln() + delta * z + epsilon * (z * z / 2.0)) - z
            });
            Ok(CoefficientPair { b1, b2, singularities: vec![0.0], phase })
        }
        HeunParams::DoublyConfluent { gamma, delta, alpha, q } => {
            let b1: CoefficientFn =
                Arc::new(move |z: f64| -(delta / (z * z) + gamma / z + 1.0));
            let b2: CoefficientFn = Arc::new(move |z: f64| -(alpha * z - q) / (z * z));
            let phase: CoefficientFn = Arc::new(move |z: f64| {
                -(-delta / z + gamma * z.abs().ln() + z) - z
            });
            Ok(CoefficientPair { b1, b2, singularities: vec![0.0], phase })
        }
        HeunParams::Triconfluent { gamma, delta, epsilon, alpha, q } => {
            let b1: CoefficientFn =
                Arc::new(move |z: f64| -(gamma + delta * z + epsilon * (z * z)));
            let b2: CoefficientFn = Arc::new(move |z: f64| -(alpha * z - q));
            let phase: CoefficientFn = Arc::new(move |z: f64| {
                -(gamma * z + delta * (z * z / 2.0) + epsilon * (z * z * z / 3.0)) - z
            });
            Ok(CoefficientPair { b1, b2, singularities: Vec::new(), phase })
        }
    }
}

/// Finite real singular points, sorted. The flag is true when a complex
/// singular location (General t with Im t != 0) had to be excluded.
pub fn singular_points(class: HeunClass, p: &HeunParams) -> (Vec<f64>, bool) {
    let _ = class;
    match *p {
        HeunParams::General { t, .. } => {
            if t.im != 0.0 {
                (vec![0.0, 1.0], true)
            } else {
                let mut s = vec![0.0, 1.0, t.re];
                s.sort_by(f64::total_cmp);
                s.dedup();
                (s, false)
            }
        }
        HeunParams::Confluent { .. } => (vec![0.0, 1.0], false),
        HeunParams::Biconfluent { .. } | HeunParams::DoublyConfluent { .. } => (vec![0.0], false),
        HeunParams::Triconfluent { .. } => (Vec::new(), false),
    }
}

/// Open interval around z0, possibly half-infinite. Ends are singular points
/// of the equation (or +-infinity).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl AdmissibleInterval {
    pub fn contains(&self, z: f64) -> bool {
        z > self.lo && z < self.hi
    }
}

/// The maximal open interval around z0 containing no singular point.
pub fn admissible_interval(
    class: HeunClass,
    p: &HeunParams,
    z0: f64,
) -> Result<AdmissibleInterval, HeunError> {
    check_class(class, p)?;
    let (sings, complex_excluded) = singular_points(class, p);
    if complex_excluded {
        return Err(HeunError::BadParams(
            "complex t is not supported: the real-line interval logic needs a real singular location".into(),
        ));
    }
    for &s in &sings {
        if (z0 - s).abs() <= 1e-12 * s.abs().max(z0.abs()).max(1.0) {
            return Err(HeunError::SingularInitialPoint { z0 });
        }
    }
    let lo = sings
        .iter()
        .copied()
        .filter(|&s| s < z0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = sings
        .iter()
        .copied()
        .filter(|&s| s > z0)
        .fold(f64::INFINITY, f64::min);
    Ok(AdmissibleInterval { lo, hi })
}

fn check_grid_clear(grid: &Grid, sings: &[f64]) -> Result<(), HeunError> {
    let lo = grid.nodes[0];
    let hi = grid.nodes[grid.len() - 1];
    for &s in sings {
        if s >= lo && s <= hi {
            return Err(HeunError::GridCrossesSingularity { at: s });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    K1,
    K2,
}

/// Pointwise kernel evaluator: K1 by adaptive quadrature of the generic
/// integrand, K2 by its closed form. One code path serves all five classes.
pub struct KernelSpec {
    pub which: KernelKind,
    pub class: HeunClass,
    pub params: HeunParams,
    coef: CoefficientPair,
    cfg: QuadConfig,
}

pub fn kernel_spec(
    class: HeunClass,
    p: &HeunParams,
    which: KernelKind,
    cfg: QuadConfig,
) -> Result<KernelSpec, HeunError> {
    let coef = coefficients(class, p)?;
    Ok(KernelSpec { which, class, params: *p, coef, cfg })
}

impl KernelSpec {
    /// K(z, z0) for z on either side of z0, both inside one admissible
    /// interval (no singular point between them).
    pub fn eval(&self, z: f64, z0: f64) -> Result<C64, HeunError> {
        for &s in &self.coef.singularities {
            if (s - z.min(z0)) >= 0.0 && (z.max(z0) - s) >= 0.0 {
                return Err(HeunError::GridCrossesSingularity { at: s });
            }
        }
        match self.which {
            KernelKind::K2 => {
                if z == z0 {
                    Ok((self.coef.b1)(z) - 1.0)
                } else {
                    Ok(self.coef.g(z) * C64::new(z - z0, 0.0).exp() - (self.coef.b2)(z))
                }
            }
            KernelKind::K1 => {
                if z == z0 {
                    return Ok(C64::new(1.0, 0.0));
                }
                let phase_z = (self.coef.phase)(z);
                let f = |zeta: f64| (phase_z - (self.coef.phase)(zeta)).exp() * self.coef.g(zeta);
                let iv = Interval::new(z.min(z0), z.max(z0)).expect("distinct endpoints");
                let (val, _) = integrate_adaptive(f, iv, &self.cfg)
                    .map_err(|source| HeunError::QuadratureFailure { at: z, source })?;
                let signed = if z >= z0 { val } else { -val };
                Ok(C64::new(1.0, 0.0) + signed)
            }
        }
    }
}

/// Discretize K1 on a grid. Segment integrals int_{x_{j-1}}^{x_j}
/// e^{A(x_j)-A(zeta)} g(zeta) d zeta are computed adaptively once and shared
/// by every row through exponential ratio carries, so the cost is n adaptive
/// integrals plus an O(n^2) sweep.
pub fn kernel_k1(
    class: HeunClass,
    p: &HeunParams,
    grid: Arc<Grid>,
    cfg: &QuadConfig,
) -> Result<DiscreteKernel, HeunError> {
    let coef = coefficients(class, p)?;
    check_grid_clear(&grid, &coef.singularities)?;
    let n = grid.len();
    let nodes = &grid.nodes;
    let a: Vec<C64> = nodes.iter().map(|&z| (coef.phase)(z)).collect();

    let idxs: Vec<usize> = (1..n).collect();
    let coef_ref = &coef;
    let a_ref = &a;
    let segs: Vec<Result<C64, QuadError>> = util::par_map(&idxs, |&j| {
        let f = |zeta: f64| (a_ref[j] - (coef_ref.phase)(zeta)).exp() * coef_ref.g(zeta);
        let iv = Interval::new(nodes[j - 1], nodes[j]).expect("grid nodes increase");
        integrate_adaptive(f, iv, cfg).map(|(v, _)| v)
    });
    let mut seg = Vec::with_capacity(n);
    seg.push(C64::new(0.0, 0.0));
    for (j, r) in idxs.iter().zip(segs) {
        seg.push(r.map_err(|source| HeunError::QuadratureFailure { at: nodes[*j], source })?);
    }
    // ratio[j] = e^{A_{j+1} - A_j}
    let ratio: Vec<C64> = (0..n - 1).map(|j| (a[j + 1] - a[j]).exp()).collect();

    let mut values = vec![C64::new(0.0, 0.0); n * (n + 1) / 2];
    for i in 0..n {
        values[i * (i + 1) / 2 + i] = C64::new(1.0, 0.0);
        let mut tail = C64::new(0.0, 0.0);
        let mut f = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            // f = e^{A_i - A_{j+1}} entering this iteration.
            tail += f * seg[j + 1];
            values[i * (i + 1) / 2 + j] = C64::new(1.0, 0.0) + tail;
            f *= ratio[j];
        }
    }
    DiscreteKernel::from_values(grid, values).map_err(HeunError::Volterra)
}

/// Discretize K2(z, z0) = g(z) e^{z-z0} - B2(z) pointwise; the diagonal is
/// B1(z) - 1 by construction.
pub fn kernel_k2(
    class: HeunClass,
    p: &HeunParams,
    grid: Arc<Grid>,
) -> Result<DiscreteKernel, HeunError> {
    let coef = coefficients(class, p)?;
    check_grid_clear(&grid, &coef.singularities)?;
    let k = DiscreteKernel::from_fn(grid, |z, z0| {
        if z == z0 {
            (coef.b1)(z) - 1.0
        } else {
            coef.g(z) * C64::new(z - z0, 0.0).exp() - (coef.b2)(z)
        }
    })?;
    Ok(k)
}

/// How the second basis solution is reconstructed from G2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReconstructionForm {
    /// e^{z-z0} - 1 + int (e^{z-zeta} - 1) G2 d zeta. The default; matches
    /// the ODE oracle.
    Corollary,
    /// int (e^{z-zeta} - 1)(1 + G2) d zeta, i.e. the corollary minus
    /// (z - z0). Kept for the discriminating cross-check only.
    TheoremU12,
}

/// Grid construction and series controls for `evaluate`.
#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Lobatto interior points per panel.
    pub interior_nodes: usize,
    /// Target integral of 1 + |B1 - 1| per panel; smaller means more panels.
    pub panel_budget: f64,
    pub min_panels: usize,
    pub max_panels: usize,
    pub reconstruction: ReconstructionForm,
    /// When set, Neumann evaluation stops early once increments drop below
    /// this and errors with NonConvergence if they never do.
    pub series_tol: Option<f64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            interior_nodes: 5,
            panel_budget: 1.0,
            min_panels: 24,
            max_panels: 6000,
            reconstruction: ReconstructionForm::Corollary,
            series_tol: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Method {
    Neumann { order: usize },
    VolterraDirect,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalPoint {
    pub z: f64,
    pub h: C64,
    pub err_est: f64,
}

/// The two basis solutions of the companion identity, sampled at `zs`:
/// u11 = 1 + int G1 (initial data (1,1)) and u12 (initial data (0,1)) in
/// both reconstruction forms.
pub struct BasisSolutions {
    pub zs: Vec<f64>,
    pub u11: Vec<C64>,
    pub u12_corollary: Vec<C64>,
    pub u12_theorem: Vec<C64>,
}

// Exponent above which e^{z-z0} factors overflow f64; the K2 branch cannot
// be represented then.
const EXP_SPAN_LIMIT: f64 = 700.0;

struct SideJob {
    side: f64,
    /// (index into the caller's zs, physical z, x = z0 + |z - z0|)
    points: Vec<(usize, f64, f64)>,
}

fn split_sides(z0: f64, zs: &[f64]) -> [SideJob; 2] {
    let mut right = SideJob { side: 1.0, points: Vec::new() };
    let mut left = SideJob { side: -1.0, points: Vec::new() };
    for (i, &z) in zs.iter().enumerate() {
        if z >= z0 {
            right.points.push((i, z, z));
        } else {
            left.points.push((i, z, z0 + (z0 - z)));
        }
    }
    right.points.sort_by(|a, b| a.2.total_cmp(&b.2));
    left.points.sort_by(|a, b| a.2.total_cmp(&b.2));
    [right, left]
}

fn forced_edges(z0: f64, job: &SideJob) -> Vec<f64> {
    let mut xs: Vec<f64> = job.points.iter().map(|p| p.2).collect();
    xs.push(z0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Evaluate H(z) at the requested points (any mix of sides of z0).
///
/// Output order matches the input order. err_est is the last Neumann
/// increment per point, or a half-density Richardson comparison for the
/// direct solve, inflated near singular interval ends.
pub fn evaluate(
    class: HeunClass,
    p: &HeunParams,
    init: &InitialData,
    zs: &[f64],
    method: Method,
    cfg: &EngineConfig,
) -> Result<Vec<EvalPoint>, HeunError> {
    let coef = coefficients(class, p)?;
    let interval = admissible_interval(class, p, init.z0)?;
    for &z in zs {
        if !interval.contains(z) {
            return Err(HeunError::OutsideInterval { z, lo: interval.lo, hi: interval.hi });
        }
    }
    if zs.is_empty() {
        return Ok(Vec::new());
    }

    let need1 = init.h0.norm() > 0.0;
    let delta_h = init.dh0 - init.h0;
    let need2 = delta_h.norm() > 0.0;
    let mut out = vec![EvalPoint { z: 0.0, h: C64::new(0.0, 0.0), err_est: 0.0 }; zs.len()];
    for (slot, &z) in out.iter_mut().zip(zs.iter()) {
        slot.z = z;
    }
    if !need1 && !need2 {
        return Ok(out);
    }

    if need2 {
        let span = zs
            .iter()
            .map(|&z| (z - init.z0).abs())
            .fold(0.0, f64::max);
        if span > EXP_SPAN_LIMIT {
            return Err(HeunError::NonConvergence(format!(
                "the e^{{z-z0}} branch overflows for |z-z0| = {span:.1} > {EXP_SPAN_LIMIT}"
            )));
        }
    }

    let jobs = split_sides(init.z0, zs);
    let results: Vec<Result<Vec<(usize, C64, f64)>, HeunError>> = util::par_map(&jobs, |job| {
        side_eval(&coef, &interval, init, job, method, cfg, need1, need2, delta_h)
    });
    for r in results {
        for (i, h, e) in r? {
            out[i].h = h;
            out[i].err_est = e;
        }
    }
    Ok(out)
}

/// The m-th Neumann approximant H^(m); m = 0 is the kernel-free limit
/// H0 + (dH0 - H0)(e^{z-z0} - 1).
pub fn evaluate_order_m(
    class: HeunClass,
    p: &HeunParams,
    init: &InitialData,
    zs: &[f64],
    m: usize,
    cfg: &EngineConfig,
) -> Result<Vec<EvalPoint>, HeunError> {
    let mut cfg = cfg.clone();
    cfg.series_tol = None;
    evaluate(class, p, init, zs, Method::Neumann { order: m }, &cfg)
}

#[allow(clippy::too_many_arguments)]
fn side_eval(
    coef: &CoefficientPair,
    interval: &AdmissibleInterval,
    init: &InitialData,
    job: &SideJob,
    method: Method,
    cfg: &EngineConfig,
    need1: bool,
    need2: bool,
    delta_h: C64,
) -> Result<Vec<(usize, C64, f64)>, HeunError> {
    if job.points.is_empty() {
        return Ok(Vec::new());
    }
    let z0 = init.z0;
    let xs = forced_edges(z0, job);
    let x_max = *xs.last().unwrap();
    if x_max <= z0 {
        // Every request sits exactly at z0.
        return Ok(job.points.iter().map(|&(i, _, _)| (i, init.h0, 0.0)).collect());
    }

    let eng = engine::Engine::build(coef, z0, job.side, &xs, cfg)?;
    let (h_nodes, err_nodes) = run_method(&eng, method, cfg, need1, need2, init.h0, delta_h)?;

    // Half-density comparison for the direct solve's error estimate.
    let err_half = if matches!(method, Method::VolterraDirect) {
        let mut coarse = cfg.clone();
        coarse.panel_budget = cfg.panel_budget * 2.0;
        coarse.min_panels = (cfg.min_panels / 2).max(4);
        let eng2 = engine::Engine::build(coef, z0, job.side, &xs, &coarse)?;
        let (h2, _) = run_method(&eng2, method, &coarse, need1, need2, init.h0, delta_h)?;
        Some((eng2, h2))
    } else {
        None
    };

    let mut out = Vec::with_capacity(job.points.len());
    for &(orig, z, x) in &job.points {
        let node = eng.node_index(x);
        let h = h_nodes[node];
        let mut err = match &err_half {
            Some((eng2, h2)) => (h - h2[eng2.node_index(x)]).norm(),
            None => err_nodes[node],
        };
        // Slow convergence near a finite singular end is reported through
        // the estimate, not as an error.
        let dist = (z - interval.lo).abs().min((interval.hi - z).abs());
        if dist.is_finite() && dist > 0.0 {
            err *= 1.0 + (eng.panel_width_at(node) / dist).min(1e3);
        }
        out.push((orig, h, err));
    }
    Ok(out)
}

fn run_method(
    eng: &engine::Engine,
    method: Method,
    cfg: &EngineConfig,
    need1: bool,
    need2: bool,
    h0: C64,
    delta_h: C64,
) -> Result<(Vec<C64>, Vec<f64>), HeunError> {
    let n = eng.len();
    let zero = vec![C64::new(0.0, 0.0); n];
    match method {
        Method::VolterraDirect => {
            let g1 = if need1 { eng.direct(engine::Kind::K1)? } else { zero.clone() };
            let g2 = if need2 { eng.direct(engine::Kind::K2)? } else { zero };
            let h = eng.reconstruct(&g1, &g2, h0, delta_h, cfg.reconstruction);
            let errs = vec![0.0; n];
            Ok((h, errs))
        }
        Method::Neumann { order } => {
            if order == 0 {
                let h = eng.reconstruct(&zero, &zero, h0, delta_h, cfg.reconstruction);
                return Ok((h, vec![f64::INFINITY; n]));
            }
            let (s1, p1, inc1) = if need1 {
                eng.neumann(engine::Kind::K1, order, cfg.series_tol)?
            } else {
                (zero.clone(), zero.clone(), 0.0)
            };
            let (s2, p2, inc2) = if need2 {
                eng.neumann(engine::Kind::K2, order, cfg.series_tol)?
            } else {
                (zero.clone(), zero.clone(), 0.0)
            };
            if let Some(tol) = cfg.series_tol {
                if inc1.max(inc2) > tol {
                    return Err(HeunError::NonConvergence(format!(
                        "after order {order} the largest increment is {:.3e} > {tol:.3e}",
                        inc1.max(inc2)
                    )));
                }
            }
            let h = eng.reconstruct(&s1, &s2, h0, delta_h, cfg.reconstruction);
            let h_prev = eng.reconstruct(&p1, &p2, h0, delta_h, cfg.reconstruction);
            let errs = h.iter().zip(h_prev.iter()).map(|(a, b)| (a - b).norm()).collect();
            Ok((h, errs))
        }
    }
}

/// Solve for the two basis solutions via the direct method.
pub fn solve_basis(
    class: HeunClass,
    p: &HeunParams,
    z0: f64,
    zs: &[f64],
    cfg: &EngineConfig,
) -> Result<BasisSolutions, HeunError> {
    let coef = coefficients(class, p)?;
    let interval = admissible_interval(class, p, z0)?;
    for &z in zs {
        if !interval.contains(z) {
            return Err(HeunError::OutsideInterval { z, lo: interval.lo, hi: interval.hi });
        }
    }
    let jobs = split_sides(z0, zs);
    let mut u11 = vec![C64::new(0.0, 0.0); zs.len()];
    let mut u12c = vec![C64::new(0.0, 0.0); zs.len()];
    let mut u12t = vec![C64::new(0.0, 0.0); zs.len()];
    let results: Vec<Result<Vec<(usize, C64, C64, C64)>, HeunError>> =
        util::par_map(&jobs, |job| {
            if job.points.is_empty() {
                return Ok(Vec::new());
            }
            let xs = forced_edges(z0, job);
            let x_max = *xs.last().unwrap();
            if x_max <= z0 {
                return Ok(job
                    .points
                    .iter()
                    .map(|&(i, _, _)| (i, C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)))
                    .collect());
            }
            let eng = engine::Engine::build(&coef, z0, job.side, &xs, cfg)?;
            let g1 = eng.direct(engine::Kind::K1)?;
            let g2 = eng.direct(engine::Kind::K2)?;
            let one = C64::new(1.0, 0.0);
            let u11_nodes =
                eng.reconstruct(&g1, &g2, one, C64::new(0.0, 0.0), ReconstructionForm::Corollary);
            let zeros = vec![C64::new(0.0, 0.0); eng.len()];
            let u12c_nodes =
                eng.reconstruct(&zeros, &g2, C64::new(0.0, 0.0), one, ReconstructionForm::Corollary);
            let u12t_nodes =
                eng.reconstruct(&zeros, &g2, C64::new(0.0, 0.0), one, ReconstructionForm::TheoremU12);
            Ok(job
                .points
                .iter()
                .map(|&(i, _, x)| {
                    let n = eng.node_index(x);
                    (i, u11_nodes[n], u12c_nodes[n], u12t_nodes[n])
                })
                .collect())
        });
    for r in results {
        for (i, a, b, c) in r? {
            u11[i] = a;
            u12c[i] = b;
            u12t[i] = c;
        }
    }
    Ok(BasisSolutions { zs: zs.to_vec(), u11, u12_corollary: u12c, u12_theorem: u12t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn general_reference() -> HeunParams {
        HeunParams::General {
            gamma: c(2.0, 0.0),
            delta: c(7.0, 0.0),
            epsilon: c(-1.0, 0.0),
            alpha_beta: c(1.5, 0.0),
            q: c(1.0, 0.0),
            t: c(4.0, 0.0),
        }
    }

    fn confluent_reference() -> HeunParams {
        HeunParams::Confluent {
            gamma: c(3.0, 0.0),
            delta: c(2.0 / 3.0, 0.0),
            epsilon: c(4.0, 0.0),
            alpha: c(5.0, 0.0),
            q: c(1.0, 0.0),
        }
    }

    fn biconfluent_reference() -> HeunParams {
        HeunParams::Biconfluent {
            gamma: c(0.1, 0.0),
            delta: c(1.0, 0.0),
            epsilon: c(6.0, 0.0),
            alpha: c(-1.0, 0.0),
            q: c(2.0, 0.0),
        }
    }

    fn triconfluent_reference() -> HeunParams {
        HeunParams::Triconfluent {
            gamma: c(2.0, 0.0),
            delta: c(-1.0, 0.0),
            epsilon: c(7.0, 0.0),
            alpha: c(1.0, 0.0),
            q: c(2.0, 1.0),
        }
    }

    #[test]
    fn coefficients_match_hand_reductions() {
        let coef = coefficients(HeunClass::Confluent, &confluent_reference()).unwrap();
        // B1(-5) = -(3/(-5) + (2/3)/(-6) + 4) = -148/45, B2(-5) = 13/15.
        assert!(((coef.b1)(-5.0) - c(-148.0 / 45.0, 0.0)).norm() < 1e-14);
        assert!(((coef.b2)(-5.0) - c(13.0 / 15.0, 0.0)).norm() < 1e-14);
        assert!((coef.g(-5.0) - c(-154.0 / 45.0, 0.0)).norm() < 1e-14);

        let coef = coefficients(HeunClass::General, &general_reference()).unwrap();
        // B2(6) = -(1.5 * 6 - 1)/(6 * 5 * 2) = -2/15.
        assert!(((coef.b2)(6.0) - c(-2.0 / 15.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_point_sets_follow_the_class() {
        let (s, excluded) = singular_points(HeunClass::General, &general_reference());
        assert_eq!(s, vec![0.0, 1.0, 4.0]);
        assert!(!excluded);

        let complex_t = HeunParams::General {
            gamma: c(1.0, 0.0),
            delta: c(1.0, 0.0),
            epsilon: c(1.0, 0.0),
            alpha_beta: c(1.0, 0.0),
            q: c(0.0, 0.0),
            t: c(2.0, 1.0),
        };
        let (s, excluded) = singular_points(HeunClass::General, &complex_t);
        assert_eq!(s, vec![0.0, 1.0]);
        assert!(excluded);

        assert_eq!(
            singular_points(HeunClass::Confluent, &confluent_reference()).0,
            vec![0.0, 1.0]
        );
        assert_eq!(
            singular_points(HeunClass::Biconfluent, &biconfluent_reference()).0,
            vec![0.0]
        );
        assert!(singular_points(HeunClass::Triconfluent, &triconfluent_reference())
            .0
            .is_empty());
    }

    #[test]
    fn admissible_intervals_bracket_z0() {
        let iv = admissible_interval(HeunClass::General, &general_reference(), 6.0).unwrap();
        assert_eq!(iv, AdmissibleInterval { lo: 4.0, hi: f64::INFINITY });
        assert!(iv.contains(5.0));
        assert!(!iv.contains(4.0));

        let iv =
            admissible_interval(HeunClass::Confluent, &confluent_reference(), -5.0).unwrap();
        assert_eq!(iv, AdmissibleInterval { lo: f64::NEG_INFINITY, hi: 0.0 });

        let iv = admissible_interval(HeunClass::Biconfluent, &biconfluent_reference(), 2.0 / 3.0)
            .unwrap();
        assert_eq!(iv, AdmissibleInterval { lo: 0.0, hi: f64::INFINITY });

        assert!(matches!(
            admissible_interval(HeunClass::General, &general_reference(), 4.0),
            Err(HeunError::SingularInitialPoint { .. })
        ));
    }

    #[test]
    fn kernel_one_matches_frozen_quadrature_values() {
        // int_6^7 e^{A(7)-A(zeta)} g(zeta) d zeta for the general reference,
        // evaluated independently with adaptive quadrature at 30 digits.
        let spec = kernel_spec(
            HeunClass::General,
            &general_reference(),
            KernelKind::K1,
            QuadConfig::default(),
        )
        .unwrap();
        let v = spec.eval(7.0, 6.0).unwrap();
        assert!((v - c(0.07587263547016026871662, 0.0)).norm() < 1e-12, "{v}");
        assert_eq!(spec.eval(6.0, 6.0).unwrap(), c(1.0, 0.0));

        let spec = kernel_spec(
            HeunClass::Biconfluent,
            &biconfluent_reference(),
            KernelKind::K1,
            QuadConfig::default(),
        )
        .unwrap();
        let v = spec.eval(1.0, 2.0 / 3.0).unwrap();
        assert!((v - c(0.4878922665654635086733, 0.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn kernel_one_grid_discretization_agrees_with_pointwise_eval() {
        let grid = Arc::new(
            crate::quadrature::build_grid(
                Interval::new(6.0, 7.0).unwrap(),
                16,
                crate::quadrature::Rule::GaussPanel(4),
            )
            .unwrap(),
        );
        let k = kernel_k1(
            HeunClass::General,
            &general_reference(),
            Arc::clone(&grid),
            &QuadConfig::default(),
        )
        .unwrap();
        let last = grid.len() - 1;
        assert!((k.get(last, 0) - c(0.07587263547016026871662, 0.0)).norm() < 1e-11);
        for i in 0..grid.len() {
            assert_eq!(k.get(i, i), c(1.0, 0.0));
        }
        // A middle column against the adaptive evaluator.
        let spec = kernel_spec(
            HeunClass::General,
            &general_reference(),
            KernelKind::K1,
            QuadConfig::default(),
        )
        .unwrap();
        let j = grid.len() / 2;
        let want = spec.eval(grid.nodes[last], grid.nodes[j]).unwrap();
        assert!((k.get(last, j) - want).norm() < 1e-11);
    }

    #[test]
    fn kernel_two_matches_its_closed_forms() {
        let spec = kernel_spec(
            HeunClass::Confluent,
            &confluent_reference(),
            KernelKind::K2,
            QuadConfig::default(),
        )
        .unwrap();
        // (3(5z - 1) - e^{z-z0}(3z + 4)(5z - 3))/(3(z - 1)z) at z = -2, z0 = -5.
        let (z, z0) = (-2.0f64, -5.0f64);
        let want = (3.0 * (5.0 * z - 1.0)
            - (z - z0).exp() * (3.0 * z + 4.0) * (5.0 * z - 3.0))
            / (3.0 * (z - 1.0) * z);
        assert!((spec.eval(z, z0).unwrap() - c(want, 0.0)).norm() < 1e-13);
        // Diagonal: B1(-5) - 1 = -193/45.
        assert!((spec.eval(-5.0, -5.0).unwrap() - c(-193.0 / 45.0, 0.0)).norm() < 1e-13);

        let p = triconfluent_reference();
        let spec =
            kernel_spec(HeunClass::Triconfluent, &p, KernelKind::K2, QuadConfig::default())
                .unwrap();
        let HeunParams::Triconfluent { gamma, delta, epsilon, alpha, q } = p else {
            unreachable!()
        };
        let (z, z0) = (1.25f64, -0.5f64);
        let want = -(epsilon * z * z + (alpha + delta) * z - q + gamma + 1.0)
            * c(z - z0, 0.0).exp()
            - (q - alpha * z);
        assert!((spec.eval(z, z0).unwrap() - want).norm() < 1e-12);

        // Constant B1 = k, B2 = 0 collapses K2 to (k - 1) e^{z-z0}.
        let k = 0.7;
        let p = HeunParams::Triconfluent {
            gamma: c(-k, 0.0),
            delta: c(0.0, 0.0),
            epsilon: c(0.0, 0.0),
            alpha: c(0.0, 0.0),
            q: c(0.0, 0.0),
        };
        let spec =
            kernel_spec(HeunClass::Triconfluent, &p, KernelKind::K2, QuadConfig::default())
                .unwrap();
        let v = spec.eval(2.0, 0.5).unwrap();
        assert!((v - (k - 1.0) * c(1.5, 0.0).exp()).norm() < 1e-13);
    }

    #[test]
    fn kernel_two_grid_uses_the_diagonal_closed_form() {
        let grid = Arc::new(
            crate::quadrature::build_grid(
                Interval::new(-7.0, -2.0).unwrap(),
                8,
                crate::quadrature::Rule::GaussPanel(3),
            )
            .unwrap(),
        );
        let coef = coefficients(HeunClass::Confluent, &confluent_reference()).unwrap();
        let k =
            kernel_k2(HeunClass::Confluent, &confluent_reference(), Arc::clone(&grid)).unwrap();
        for i in 0..grid.len() {
            let want = (coef.b1)(grid.nodes[i]) - 1.0;
            assert!((k.get(i, i) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_initial_data_evaluates_to_zero() {
        let init = InitialData { z0: -5.0, h0: c(0.0, 0.0), dh0: c(0.0, 0.0) };
        let out = evaluate(
            HeunClass::Confluent,
            &confluent_reference(),
            &init,
            &[-8.0, -5.0, -2.0],
            Method::VolterraDirect,
            &EngineConfig::default(),
        )
        .unwrap();
        for pt in out {
            assert_eq!(pt.h, c(0.0, 0.0));
            assert_eq!(pt.err_est, 0.0);
        }
    }

    #[test]
    fn order_zero_is_the_kernel_free_closed_form() {
        let init = InitialData { z0: -5.0, h0: c(0.3, -0.2), dh0: c(-1.0, 0.5) };
        let zs = [-7.5, -5.0, -3.25, -1.5];
        let out = evaluate_order_m(
            HeunClass::Confluent,
            &confluent_reference(),
            &init,
            &zs,
            0,
            &EngineConfig::default(),
        )
        .unwrap();
        for pt in &out {
            let want = init.h0 + (init.dh0 - init.h0) * ((pt.z - init.z0).exp() - 1.0);
            assert!((pt.h - want).norm() < 1e-12 * want.norm().max(1.0), "z = {}", pt.z);
        }
    }

    #[test]
    fn basis_solutions_start_from_the_identity_columns() {
        let zs = [0.3, 2.0 / 3.0, 0.9];
        let basis = solve_basis(
            HeunClass::Biconfluent,
            &biconfluent_reference(),
            2.0 / 3.0,
            &zs,
            &EngineConfig::default(),
        )
        .unwrap();
        // At z0 itself: u11 = 1, u12 = 0 in both forms.
        assert!((basis.u11[1] - 1.0).norm() < 1e-14);
        assert!(basis.u12_corollary[1].norm() < 1e-14);
        assert!(basis.u12_theorem[1].norm() < 1e-14);
        // The two u12 forms differ by exactly z - z0.
        for (i, &z) in zs.iter().enumerate() {
            let gap = basis.u12_corollary[i] - basis.u12_theorem[i];
            assert!((gap - (z - 2.0 / 3.0)).norm() < 1e-9, "z = {z}, gap = {gap}");
        }
    }

    #[test]
    fn error_paths_reject_bad_inputs() {
        let complex_t = HeunParams::General {
            gamma: c(1.0, 0.0),
            delta: c(1.0, 0.0),
            epsilon: c(1.0, 0.0),
            alpha_beta: c(1.0, 0.0),
            q: c(0.0, 0.0),
            t: c(2.0, 1.0),
        };
        assert!(matches!(
            coefficients(HeunClass::General, &complex_t),
            Err(HeunError::BadParams(_))
        ));

        assert!(matches!(
            coefficients(HeunClass::Confluent, &general_reference()),
            Err(HeunError::BadParams(_))
        ));

        let nan = HeunParams::Triconfluent {
            gamma: c(f64::NAN, 0.0),
            delta: c(0.0, 0.0),
            epsilon: c(0.0, 0.0),
            alpha: c(0.0, 0.0),
            q: c(0.0, 0.0),
        };
        assert!(matches!(
            coefficients(HeunClass::Triconfluent, &nan),
            Err(HeunError::BadParams(_))
        ));

        let init = InitialData { z0: 6.0, h0: c(1.0, 0.0), dh0: c(1.0, 0.0) };
        let err = evaluate(
            HeunClass::General,
            &general_reference(),
            &init,
            &[3.0],
            Method::VolterraDirect,
            &EngineConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, HeunError::OutsideInterval { z, .. } if z == 3.0));

        let spec = kernel_spec(
            HeunClass::General,
            &general_reference(),
            KernelKind::K1,
            QuadConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            spec.eval(7.0, 3.0),
            Err(HeunError::GridCrossesSingularity { at }) if at == 4.0
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // K2(z, z) = B1(z) - 1 for every class and parameter draw.
        #[test]
        fn kernel_two_diagonal_identity(
            g in -3.0..3.0f64,
            d in -3.0..3.0f64,
            e in -3.0..3.0f64,
            al in -3.0..3.0f64,
            qq in -3.0..3.0f64,
            z in 1.1..6.0f64,
        ) {
            let p = HeunParams::Confluent {
                gamma: c(g, 0.3),
                delta: c(d, -0.1),
                epsilon: c(e, 0.0),
                alpha: c(al, 0.2),
                q: c(qq, 0.0),
            };
            let coef = coefficients(HeunClass::Confluent, &p).unwrap();
            let spec = kernel_spec(
                HeunClass::Confluent,
                &p,
                KernelKind::K2,
                QuadConfig::default(),
            )
            .unwrap();
            let lhs = spec.eval(z, z).unwrap();
            prop_assert!((lhs - ((coef.b1)(z) - 1.0)).norm() < 1e-13);
        }

        // H depends linearly on the initial data.
        #[test]
        fn evaluation_is_linear_in_the_initial_data(
            ar in -2.0..2.0f64,
            ai in -2.0..2.0f64,
            br in -2.0..2.0f64,
            bi in -2.0..2.0f64,
        ) {
            let a = c(ar, ai);
            let b = c(br, bi);
            let zs = [1.0, 2.5, 4.0];
            let p = biconfluent_reference();
            let run = |h0: C64, dh0: C64| {
                evaluate(
                    HeunClass::Biconfluent,
                    &p,
                    &InitialData { z0: 2.0 / 3.0, h0, dh0 },
                    &zs,
                    Method::VolterraDirect,
                    &EngineConfig::default(),
                )
                .unwrap()
            };
            let first = run(c(1.0, 0.0), c(0.0, 0.0));
            let second = run(c(0.0, 0.0), c(1.0, 0.0));
            let mixed = run(a, b);
            for i in 0..zs.len() {
                let want = a * first[i].h + b * second[i].h;
                let scale = want.norm().max(1.0);
                prop_assert!(
                    (mixed[i].h - want).norm() < 1e-9 * scale,
                    "z = {}: {} vs {}",
                    zs[i],
                    mixed[i].h,
                    want
                );
            }
        }
    }
}
