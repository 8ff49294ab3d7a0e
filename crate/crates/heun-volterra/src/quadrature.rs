//! Complex-valued integration over real intervals.
//!
//! Two layers: an adaptive Gauss-Kronrod integrator for one-off inner
//! integrals, and panel grids (trapezoid or Gauss-Lobatto panels) carrying
//! cumulative-integral stencils for the kernel algebra built on top.

use crate::C64;

/// Closed finite interval of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, QuadError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(QuadError::BadInterval { lo, hi })
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Tolerances and recursion budget for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_depth: 48 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QuadError {
    #[error("adaptive quadrature stalled at depth {depth} with error {err:.3e}")]
    NonConvergence { depth: usize, err: f64 },
    #[error("integrand returned a non-finite value at x = {at}")]
    NonFinite { at: f64 },
    #[error("unsupported rule: gauss panel order {0} (supported 1..=12)")]
    BadRule(usize),
    #[error("need at least 2 panels, got {0}")]
    BadPanelCount(usize),
    #[error("sample count {got} does not match grid node count {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("interval [{lo}, {hi}] is empty or not finite")]
    BadInterval { lo: f64, hi: f64 },
}

// 15-point Kronrod extension of 7-point Gauss; positive half, symmetric.
const XK: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];
const WK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];
// Gauss weights attach to XK indices 0, 2, 4, 6.
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> Result<(C64, f64), QuadError> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<C64, QuadError> {
        let v = f(x);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { at: x })
        }
    };
    let center = eval(mid)?;
    let mut k15 = WK[0] * center;
    let mut g7 = WG[0] * center;
    for i in 1..8 {
        let lo = eval(mid - half * XK[i])?;
        let hi = eval(mid + half * XK[i])?;
        let pair = lo + hi;
        k15 += WK[i] * pair;
        if i % 2 == 0 {
            g7 += WG[i / 2] * pair;
        }
    }
    k15 *= half;
    g7 *= half;
    Ok((k15, (k15 - g7).norm()))
}

fn adapt<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    budget: f64,
    depth: usize,
) -> Result<(C64, f64), QuadError> {
    let (v, e) = gk15(f, a, b)?;
    // Bisection below machine width cannot improve anything.
    let width_floor = 8.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0);
    if e <= budget || (b - a) <= width_floor {
        return Ok((v, e));
    }
    if depth == 0 {
        return Err(QuadError::NonConvergence { depth: 0, err: e });
    }
    let mid = 0.5 * (a + b);
    let (vl, el) = adapt(f, a, mid, 0.5 * budget, depth - 1)?;
    let (vr, er) = adapt(f, mid, b, 0.5 * budget, depth - 1)?;
    Ok((vl + vr, el + er))
}

/// Adaptive Gauss-Kronrod integration of a complex-valued function over `iv`.
///
/// Returns the value and an error estimate; the estimate is guaranteed to be
/// at most `max(abs_tol, rel_tol * |value|)` or the call fails with
/// [`QuadError::NonConvergence`]. Deterministic for fixed inputs.
pub fn integrate_adaptive<F: Fn(f64) -> C64>(
    f: F,
    iv: Interval,
    cfg: &QuadConfig,
) -> Result<(C64, f64), QuadError> {
    // Scale the relative budget by a whole-interval estimate first, then
    // re-check against the refined value.
    let (rough, _) = gk15(&f, iv.lo, iv.hi)?;
    let budget = cfg.abs_tol.max(cfg.rel_tol * rough.norm());
    let (value, err) = adapt(&f, iv.lo, iv.hi, budget, cfg.max_depth)?;
    let allowed = cfg.abs_tol.max(cfg.rel_tol * value.norm());
    if err > allowed {
        return Err(QuadError::NonConvergence { depth: cfg.max_depth, err });
    }
    Ok((value, err))
}

/// Quadrature rule for [`build_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Trapezoid,
    /// Panels with `k` interior Gauss-Lobatto nodes plus shared endpoints.
    GaussPanel(usize),
}

impl Rule {
    fn interior_nodes(self) -> Result<usize, QuadError> {
        match self {
            Rule::Trapezoid => Ok(0),
            Rule::GaussPanel(k) if (1..=12).contains(&k) => Ok(k),
            Rule::GaussPanel(k) => Err(QuadError::BadRule(k)),
        }
    }
}

/// Panel grid with per-node quadrature weights and the Lagrange
/// partial-integral stencil used for cumulative integration.
///
/// Panels share their endpoints, so a grid of `P` panels with `k` interior
/// nodes holds `P*(k+1) + 1` strictly increasing nodes.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub edges: Vec<f64>,
    k: usize,
    /// Row-major (k+2)^2: stencil[r][c] = integral of Lagrange basis c over
    /// the reference panel from its left edge to reference node r.
    stencil: Vec<f64>,
}

impl Grid {
    /// Builds a grid from explicit panel edges (strictly increasing).
    pub fn from_edges(edges: Vec<f64>, rule: Rule) -> Result<Self, QuadError> {
        let k = rule.interior_nodes()?;
        if edges.len() < 2 {
            return Err(QuadError::BadPanelCount(edges.len().saturating_sub(1)));
        }
        for w in edges.windows(2) {
            if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(QuadError::BadInterval { lo: w[0], hi: w[1] });
            }
        }
        let loc = lobatto_reference_nodes(k);
        let nloc = k + 2;
        let stencil = lagrange_partial_integrals(&loc);
        let panels = edges.len() - 1;
        let mut nodes = Vec::with_capacity(panels * (k + 1) + 1);
        nodes.push(edges[0]);
        for p in 0..panels {
            let mid = 0.5 * (edges[p] + edges[p + 1]);
            let half = 0.5 * (edges[p + 1] - edges[p]);
            for t in &loc[1..] {
                nodes.push(mid + half * t);
            }
            // The shared endpoint must be exact so windows split cleanly.
            *nodes.last_mut().unwrap() = edges[p + 1];
        }
        let mut weights = vec![0.0; nodes.len()];
        for p in 0..panels {
            let half = 0.5 * (edges[p + 1] - edges[p]);
            let start = p * (k + 1);
            for c in 0..nloc {
                weights[start + c] += stencil[(nloc - 1) * nloc + c] * half;
            }
        }
        Ok(Self { nodes, weights, edges, k, stencil })
    }

    pub fn panels(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.edges[self.edges.len() - 1] - self.edges[0]
    }

    pub(crate) fn interior_per_panel(&self) -> usize {
        self.k
    }

    pub(crate) fn nloc(&self) -> usize {
        self.k + 2
    }

    pub(crate) fn half_width(&self, p: usize) -> f64 {
        0.5 * (self.edges[p + 1] - self.edges[p])
    }

    /// Global index of the first node of panel `p`.
    pub(crate) fn panel_start(&self, p: usize) -> usize {
        p * (self.k + 1)
    }

    pub(crate) fn stencil_row(&self, r: usize) -> &[f64] {
        let n = self.nloc();
        &self.stencil[r * n..(r + 1) * n]
    }

    /// Cumulative integral table: out[i] approximates the integral of the
    /// sampled function from nodes[0] to nodes[i]; out[0] = 0.
    pub fn cumulative(&self, samples: &[C64]) -> Result<Vec<C64>, QuadError> {
        if samples.len() != self.nodes.len() {
            return Err(QuadError::LengthMismatch { got: samples.len(), want: self.nodes.len() });
        }
        let nloc = self.nloc();
        let mut out = vec![C64::new(0.0, 0.0); samples.len()];
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..self.panels() {
            let start = self.panel_start(p);
            let h = self.half_width(p);
            for r in 1..nloc {
                let row = self.stencil_row(r);
                let mut s = C64::new(0.0, 0.0);
                for c in 0..nloc {
                    s += row[c] * samples[start + c];
                }
                out[start + r] = acc + s * h;
            }
            acc = out[start + nloc - 1];
        }
        Ok(out)
    }

    /// Product-integration weights for the window [nodes[j], nodes[i]],
    /// supported on nodes j..=i only: out[m] weights nodes[j + m].
    ///
    /// Complete panels inside the window use the full panel stencil; the
    /// partial panels at the ends use interpolatory sub-stencils on up to
    /// k+2 nodes drawn from inside the window. The same weights back both
    /// kernel composition and the second-kind solve, so their discrete fixed
    /// points coincide exactly.
    pub(crate) fn window_weights(&self, j: usize, i: usize, out: &mut Vec<f64>) {
        assert!(j <= i && i < self.nodes.len());
        out.clear();
        out.resize(i - j + 1, 0.0);
        if i == j {
            return;
        }
        let kp1 = self.k + 1;
        let nloc = self.nloc();
        let p_lo = j / kp1;
        let p_hi = (i - 1) / kp1;
        if p_lo == p_hi {
            // Window inside one panel: every node between j and i is usable.
            fragment_into(&self.nodes, j, i, j, i, j, out);
            return;
        }
        // Complete panels.
        let first_full = if j % kp1 == 0 { p_lo } else { p_lo + 1 };
        let last_full_excl = if i % kp1 == 0 { p_hi + 1 } else { p_hi };
        for p in first_full..last_full_excl {
            let start = self.panel_start(p);
            let h = self.half_width(p);
            let row = self.stencil_row(nloc - 1);
            for c in 0..nloc {
                out[start + c - j] += row[c] * h;
            }
        }
        // Head fragment from j up to its panel's right edge.
        if j % kp1 != 0 {
            let edge = (p_lo + 1) * kp1;
            let s1 = (j + nloc - 1).min(i);
            fragment_into(&self.nodes, j, s1, j, edge, j, out);
        }
        // Tail fragment from the last edge up to i.
        if i % kp1 != 0 {
            let edge = p_hi * kp1;
            let s0 = i.saturating_sub(nloc - 1).max(j);
            fragment_into(&self.nodes, s0, i, edge, i, j, out);
        }
    }
}

/// Adds interpolatory weights for integrating over [nodes[a], nodes[b]]
/// using support nodes s0..=s1; weights land in out[support - base].
fn fragment_into(nodes: &[f64], s0: usize, s1: usize, a: usize, b: usize, base: usize, out: &mut [f64]) {
    let n = s1 - s0 + 1;
    debug_assert!(n >= 2 && s0 <= a && b <= s1);
    let x0 = nodes[s0];
    let scale = nodes[s1] - x0;
    let ta = (nodes[a] - x0) / scale;
    let tb = (nodes[b] - x0) / scale;
    // Transposed Vandermonde: sum_c w_c t_c^d = (tb^{d+1} - ta^{d+1})/(d+1).
    let mut mat = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut pa = ta;
    let mut pb = tb;
    for d in 0..n {
        for (c, node) in nodes[s0..=s1].iter().enumerate() {
            mat[d * n + c] = ((node - x0) / scale).powi(d as i32);
        }
        rhs[d] = (pb - pa) / (d as f64 + 1.0);
        pa *= ta;
        pb *= tb;
    }
    let ok = solve_real(&mut mat, &mut rhs, n);
    debug_assert!(ok, "fragment stencil solve failed");
    for (c, w) in rhs.iter().enumerate() {
        out[s0 + c - base] += w * scale;
    }
}

fn solve_real(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            if a[r * n + col].abs() > best {
                best = a[r * n + col].abs();
                piv = r;
            }
        }
        if best == 0.0 {
            return false;
        }
        if piv != col {
            for c in col..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let m = a[r * n + col] / d;
            if m != 0.0 {
                for c in col + 1..n {
                    a[r * n + c] -= m * a[col * n + c];
                }
                b[r] -= m * b[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * b[c];
        }
        b[r] = s / a[r * n + r];
    }
    true
}

/// Uniform-panel grid over `iv`.
pub fn build_grid(iv: Interval, n_panels: usize, rule: Rule) -> Result<Grid, QuadError> {
    if n_panels < 2 {
        return Err(QuadError::BadPanelCount(n_panels));
    }
    let h = iv.length() / n_panels as f64;
    let mut edges: Vec<f64> = (0..=n_panels).map(|p| iv.lo + h * p as f64).collect();
    edges[n_panels] = iv.hi;
    Grid::from_edges(edges, rule)
}

/// Free-function alias matching the operation vocabulary.
pub fn cumulative_integral(samples: &[C64], g: &Grid) -> Result<Vec<C64>, QuadError> {
    g.cumulative(samples)
}

/// Reference nodes on [-1, 1]: endpoints plus the k roots of P'_{k+1}.
pub(crate) fn lobatto_reference_nodes(k: usize) -> Vec<f64> {
    let n = k + 1;
    let mut nodes = Vec::with_capacity(k + 2);
    nodes.push(-1.0);
    let mut interior = Vec::with_capacity(k);
    for i in 1..=k {
        // Chebyshev-style initial guess, then Newton on P'_n using
        // (1-x^2) P''_n = 2x P'_n - n(n+1) P_n.
        let mut x = (std::f64::consts::PI * i as f64 / n as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
            let step = dp / ddp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        interior.push(x);
    }
    interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.extend(interior);
    nodes.push(1.0);
    nodes
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    debug_assert!(n >= 1);
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let pj = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = pj;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Row r, column c: integral of the c-th Lagrange basis polynomial on the
/// given nodes, taken from nodes[0] to nodes[r]. Row-major (len n*n).
pub(crate) fn lagrange_partial_integrals(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n * n];
    for c in 0..n {
        // Numerator coefficients of prod_{j != c} (x - x_j), ascending powers.
        let mut coef = vec![0.0; n];
        coef[0] = 1.0;
        let mut deg = 0;
        let mut denom = 1.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if j == c {
                continue;
            }
            denom *= nodes[c] - xj;
            deg += 1;
            for d in (1..=deg).rev() {
                coef[d] = coef[d - 1] - xj * coef[d];
            }
            coef[0] *= -xj;
        }
        // Antiderivative evaluated at each node, relative to nodes[0].
        let anti = |x: f64| -> f64 {
            let mut s = 0.0;
            for d in (0..n).rev() {
                s = s * x + coef[d] / (d as f64 + 1.0);
            }
            s * x
        };
        let at0 = anti(nodes[0]);
        for r in 0..n {
            out[r * n + c] = (anti(nodes[r]) - at0) / denom;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn adaptive_constant_is_exact() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let (v, _) = integrate_adaptive(|_| C64::new(1.0, 0.0), iv, &cfg()).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn adaptive_exponential() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let (v, e) = integrate_adaptive(|x| C64::new(x.exp(), 0.0), iv, &cfg()).unwrap();
        assert!((v.re - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!(e <= 1e-12_f64.max(1e-12 * v.norm()));
    }

    #[test]
    fn adaptive_matches_exponential_integral_closed_form() {
        // integral of e^{(1+4p)z}(z-1)^2 over [2,3] with p=1; the closed form
        // via E_n is exercised in the special module against the same value.
        let iv = Interval::new(2.0, 3.0).unwrap();
        let (v, _) = integrate_adaptive(
            |z| C64::new((5.0 * z).exp() * (z - 1.0) * (z - 1.0), 0.0),
            iv,
            &cfg(),
        )
        .unwrap();
        let reference = 2141479.796993610865936; // (82 e^15 - 17 e^10)/125
        assert!((v.re - reference).abs() / reference < 1e-12);
        assert!(v.im.abs() < 1e-9);
    }

    #[test]
    fn adaptive_rejects_non_finite_probe() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let r = integrate_adaptive(
            |x| {
                if x > 0.9 {
                    C64::new(f64::NAN, 0.0)
                } else {
                    C64::new(1.0, 0.0)
                }
            },
            iv,
            &cfg(),
        );
        assert!(matches!(r, Err(QuadError::NonFinite { .. })));
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let tight = QuadConfig { abs_tol: 1e-14, rel_tol: 1e-14, max_depth: 1 };
        let r = integrate_adaptive(|x| C64::new((1000.0 * x).cos(), 0.0), iv, &tight);
        assert!(matches!(r, Err(QuadError::NonConvergence { .. })));
    }

    #[test]
    fn trapezoid_grid_nodes() {
        let g = build_grid(Interval::new(0.0, 1.0).unwrap(), 4, Rule::Trapezoid).unwrap();
        assert_eq!(g.nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = build_grid(Interval::new(-5.0, 0.0).unwrap(), 5, Rule::Trapezoid).unwrap();
        assert_eq!(g.nodes.len(), 6);
        assert!((g.nodes[1] + 4.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_panel_grid_counts_and_weight_sum() {
        let g = build_grid(Interval::new(1.0, 9.0).unwrap(), 64, Rule::GaussPanel(4)).unwrap();
        // 64 panels * (4 interior + 1 shared edge) + 1 = 321 nodes,
        // of which 65 are panel edges and 256 are interior.
        assert_eq!(g.len(), 321);
        assert_eq!(g.panels(), 64);
        let sum: f64 = g.weights.iter().sum();
        assert!((sum - 8.0).abs() < 1e-12 * 8.0);
        assert!(g.weights.iter().all(|w| *w > 0.0));
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_rules_are_rejected() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(matches!(build_grid(iv, 4, Rule::GaussPanel(0)), Err(QuadError::BadRule(0))));
        assert!(matches!(build_grid(iv, 4, Rule::GaussPanel(40)), Err(QuadError::BadRule(40))));
        assert!(matches!(build_grid(iv, 1, Rule::Trapezoid), Err(QuadError::BadPanelCount(1))));
    }

    #[test]
    fn cumulative_constant_reproduces_nodes() {
        let g = build_grid(Interval::new(0.0, 1.0).unwrap(), 4, Rule::Trapezoid).unwrap();
        let ones = vec![C64::new(1.0, 0.0); g.len()];
        let cum = g.cumulative(&ones).unwrap();
        for (c, x) in cum.iter().zip(g.nodes.iter()) {
            assert!((c.re - x).abs() < 1e-14 && c.im == 0.0);
        }
    }

    #[test]
    fn cumulative_linear_and_exponential() {
        let g = build_grid(Interval::new(0.0, 2.0).unwrap(), 8, Rule::Trapezoid).unwrap();
        let samples: Vec<C64> = g.nodes.iter().map(|x| C64::new(*x, 0.0)).collect();
        let cum = g.cumulative(&samples).unwrap();
        assert!((cum.last().unwrap().re - 2.0).abs() < 1e-12);

        let g = build_grid(Interval::new(0.0, 1.0).unwrap(), 64, Rule::GaussPanel(4)).unwrap();
        let samples: Vec<C64> = g.nodes.iter().map(|x| C64::new(x.exp(), 0.0)).collect();
        let cum = g.cumulative(&samples).unwrap();
        assert!((cum.last().unwrap().re - (1f64.exp() - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn cumulative_length_mismatch() {
        let g = build_grid(Interval::new(0.0, 1.0).unwrap(), 4, Rule::Trapezoid).unwrap();
        let r = g.cumulative(&[C64::new(1.0, 0.0); 3]);
        assert!(matches!(r, Err(QuadError::LengthMismatch { got: 3, want: 5 })));
    }

    #[test]
    fn trapezoid_halving_shows_second_order() {
        let err_at = |panels: usize| -> f64 {
            let g = build_grid(Interval::new(0.0, 1.0).unwrap(), panels, Rule::Trapezoid).unwrap();
            let samples: Vec<C64> = g.nodes.iter().map(|x| C64::new(x.exp(), 0.0)).collect();
            (g.cumulative(&samples).unwrap().last().unwrap().re - (1f64.exp() - 1.0)).abs()
        };
        let ratio = err_at(32) / err_at(64);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn window_weights_reproduce_polynomials_up_to_the_support_cap() {
        // A window from node j to node i only sees the samples between them,
        // so its rule can be exact at most for degree min(i - j, k + 1).
        let k = 3usize;
        let g = build_grid(Interval::new(0.3, 1.7).unwrap(), 8, Rule::GaussPanel(k)).unwrap();
        let mut buf = Vec::new();
        for j in 0..g.len() {
            for i in j..g.len() {
                g.window_weights(j, i, &mut buf);
                let cap = (i - j).min(k + 1);
                for d in 0..=cap as u32 {
                    let got: f64 = buf
                        .iter()
                        .zip(&g.nodes[j..=i])
                        .map(|(w, x)| w * x.powi(d as i32))
                        .sum();
                    let want = (g.nodes[i].powi(d as i32 + 1) - g.nodes[j].powi(d as i32 + 1))
                        / f64::from(d + 1);
                    assert!(
                        (got - want).abs() < 1e-12 * (1.0 + want.abs()),
                        "window ({j},{i}) degree {d}: got {got}, want {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn window_weights_integrate_smooth_functions() {
        // Windows that span at least a full panel keep the composite order.
        // Shorter windows drop to the interpolatory order of their own
        // support, so their error is only bounded by the node spacing cubed;
        // halving the panels must shrink the worst such error by about 2^3.
        let k = 3usize;
        let worst = |panels: usize| -> (f64, f64) {
            let g = build_grid(Interval::new(0.0, 1.0).unwrap(), panels, Rule::GaussPanel(k))
                .unwrap();
            let samples: Vec<f64> = g.nodes.iter().map(|x| x.exp()).collect();
            let mut buf = Vec::new();
            let mut long = 0.0f64;
            let mut short = 0.0f64;
            for j in 0..g.len() {
                for i in j..g.len() {
                    g.window_weights(j, i, &mut buf);
                    let got: f64 = buf.iter().zip(&samples[j..=i]).map(|(w, f)| w * f).sum();
                    let err = (got - (g.nodes[i].exp() - g.nodes[j].exp())).abs();
                    if i - j >= k + 1 {
                        long = long.max(err);
                    } else {
                        short = short.max(err);
                    }
                }
            }
            (long, short)
        };
        let (long8, short8) = worst(8);
        let (long16, short16) = worst(16);
        assert!(long8 < 1e-10, "long-window error {long8}");
        assert!(long16 < 1e-11, "long-window error {long16}");
        // Largest node gap d = 0.0409 at 8 panels; trapezoid error d^3/12 e.
        assert!(short8 < 2e-5, "short-window error {short8}");
        assert!(
            short8 / short16 > 5.0,
            "third-order refinement: {short8} vs {short16}"
        );
    }

    #[test]
    fn lobatto_nodes_match_known_values() {
        // k=4: interior nodes are the roots of P'_5.
        let loc = lobatto_reference_nodes(4);
        let expect = [-1.0, -0.765055323929465, -0.285231516480645, 0.285231516480645, 0.765055323929465, 1.0];
        for (a, b) in loc.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn adaptive_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let iv = Interval::new(0.0, 1.0).unwrap();
            let c = cfg();
            let f = |x: f64| C64::new(x.exp(), x.sin());
            let g = |x: f64| C64::new((3.0 * x).cos(), x * x);
            let (vf, _) = integrate_adaptive(f, iv, &c).unwrap();
            let (vg, _) = integrate_adaptive(g, iv, &c).unwrap();
            let (vc, _) = integrate_adaptive(|x| a * f(x) + b * g(x), iv, &c).unwrap();
            let err = (vc - (a * vf + b * vg)).norm();
            prop_assert!(err <= 1e-10 * (1.0 + a.abs() + b.abs()));
        }

        #[test]
        fn adaptive_is_pure(seed in 0u8..4) {
            let iv = Interval::new(0.0, 2.0).unwrap();
            let k = seed as f64 + 1.0;
            let f = move |x: f64| C64::new((k * x).sin(), (k * x).cos());
            let (v1, e1) = integrate_adaptive(f, iv, &cfg()).unwrap();
            let (v2, e2) = integrate_adaptive(f, iv, &cfg()).unwrap();
            prop_assert_eq!(v1.re.to_bits(), v2.re.to_bits());
            prop_assert_eq!(v1.im.to_bits(), v2.im.to_bits());
            prop_assert_eq!(e1.to_bits(), e2.to_bits());
        }
    }
}
