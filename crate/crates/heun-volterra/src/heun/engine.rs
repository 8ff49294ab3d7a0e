//! Graded-panel solver for the resolvent columns G1(x, x0), G2(x, x0).
//!
//! Work happens in a folded coordinate x >= x0 with physical
//! z = z0 + side (x - x0). The working kernels and columns carry a factor
//! `side`, which makes every x-space integral plain (no side factors), and
//! the reconstruction integrals of the physical columns equal the plain
//! cumulative / exponentially weighted integrals of the working ones.
//!
//! Exponentials never cross a panel without a ratio carry, so phases may
//! swing by thousands without overflowing intermediates.

use super::{CoefficientPair, EngineConfig, HeunError, ReconstructionForm};
use crate::quadrature::{Grid, QuadError, Rule};
use crate::util;
use crate::volterra::VolterraError;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Kind {
    K1,
    K2,
}

pub(super) struct Engine {
    grid: Grid,
    side: f64,
    x0: f64,
    /// g = B1 + B2 - 1 at the physical nodes.
    g: Vec<C64>,
    b2: Vec<C64>,
    /// Kernel phase A(z(x)), A' = B1 - 1 (drives K1).
    phase_a: Vec<C64>,
    /// side * x (drives K2 and the e^{z - z0} reconstruction weight).
    phase_x: Vec<C64>,
}

/// Inverse-CDF panel edges for the density 1 + |B1 - 1|, unioned with the
/// forced output abscissae (kept verbatim so lookups stay exact).
fn graded_edges(
    x_lo: f64,
    x_hi: f64,
    density: impl Fn(f64) -> f64,
    cfg: &EngineConfig,
    forced: &[f64],
) -> Vec<f64> {
    const SAMPLES: usize = 40_001;
    let span = x_hi - x_lo;
    let step = span / (SAMPLES - 1) as f64;
    let mut xs = Vec::with_capacity(SAMPLES);
    let mut cum = Vec::with_capacity(SAMPLES);
    let mut acc = 0.0;
    let mut prev = density(x_lo);
    xs.push(x_lo);
    cum.push(0.0);
    for i in 1..SAMPLES {
        let x = if i == SAMPLES - 1 { x_hi } else { x_lo + step * i as f64 };
        let d = density(x);
        acc += 0.5 * (prev + d) * (x - xs[i - 1]);
        xs.push(x);
        cum.push(acc);
        prev = d;
    }
    let total = acc;
    let panels = ((total / cfg.panel_budget).ceil() as usize)
        .clamp(cfg.min_panels.max(1), cfg.max_panels);

    let mut graded = Vec::with_capacity(panels + 1);
    for j in 0..=panels {
        if j == 0 {
            graded.push(x_lo);
            continue;
        }
        if j == panels {
            graded.push(x_hi);
            continue;
        }
        let target = total * j as f64 / panels as f64;
        let k = cum.partition_point(|&c| c < target).min(SAMPLES - 1).max(1);
        let (c0, c1) = (cum[k - 1], cum[k]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        graded.push(xs[k - 1] + frac * (xs[k] - xs[k - 1]));
    }

    let tol = 1e-9 * span;
    let mut edges: Vec<f64> = forced.to_vec();
    for &x in &graded {
        let pos = edges.partition_point(|&e| e < x);
        let near_left = pos > 0 && (x - edges[pos - 1]).abs() < tol;
        let near_right = pos < edges.len() && (edges[pos] - x).abs() < tol;
        if !near_left && !near_right {
            edges.insert(pos, x);
        }
    }
    edges
}

impl Engine {
    pub(super) fn build(
        coef: &CoefficientPair,
        z0: f64,
        side: f64,
        forced_xs: &[f64],
        cfg: &EngineConfig,
    ) -> Result<Engine, HeunError> {
        let x_lo = forced_xs[0];
        let x_hi = *forced_xs.last().unwrap();
        debug_assert!(x_lo == z0 && x_hi > x_lo);
        let phys = move |x: f64| if side > 0.0 { x } else { z0 - (x - z0) };
        let b1 = &coef.b1;
        let density = |x: f64| 1.0 + (b1(phys(x)) - 1.0).norm();
        let edges = graded_edges(x_lo, x_hi, density, cfg, forced_xs);
        let grid = Grid::from_edges(edges, Rule::GaussPanel(cfg.interior_nodes)).map_err(
            |e| match e {
                QuadError::BadRule(k) => {
                    HeunError::BadParams(format!("unsupported interior_nodes = {k}"))
                }
                other => HeunError::QuadratureFailure { at: z0, source: other },
            },
        )?;
        let n = grid.len();
        let mut g = Vec::with_capacity(n);
        let mut b2v = Vec::with_capacity(n);
        let mut phase_a = Vec::with_capacity(n);
        let mut phase_x = Vec::with_capacity(n);
        for &x in &grid.nodes {
            let z = phys(x);
            let b1z = (coef.b1)(z);
            let b2z = (coef.b2)(z);
            g.push(b1z + b2z - 1.0);
            b2v.push(b2z);
            phase_a.push((coef.phase)(z));
            phase_x.push(C64::new(side * x, 0.0));
        }
        Ok(Engine { grid, side, x0: z0, g, b2: b2v, phase_a, phase_x })
    }

    pub(super) fn len(&self) -> usize {
        self.grid.len()
    }

    /// Index of the node whose x coordinate is exactly `x` (a forced edge).
    pub(super) fn node_index(&self, x: f64) -> usize {
        let nodes = &self.grid.nodes;
        let pos = nodes.partition_point(|&v| v < x);
        if pos < nodes.len() && nodes[pos] == x {
            return pos;
        }
        // A forced edge always survives construction; tolerate roundoff
        // drift defensively.
        let best = (pos.saturating_sub(1)..(pos + 2).min(nodes.len()))
            .min_by(|&a, &b| (nodes[a] - x).abs().total_cmp(&(nodes[b] - x).abs()))
            .expect("nonempty grid");
        assert!(
            (nodes[best] - x).abs() <= 1e-9 * self.grid.span().max(1.0),
            "requested point x = {x} is not a grid node"
        );
        best
    }

    pub(super) fn panel_width_at(&self, node: usize) -> f64 {
        let kp1 = self.grid.interior_per_panel() + 1;
        let p = (node / kp1).min(self.grid.panels() - 1);
        2.0 * self.grid.half_width(p)
    }

    fn phase(&self, kind: Kind) -> &[C64] {
        match kind {
            Kind::K1 => &self.phase_a,
            Kind::K2 => &self.phase_x,
        }
    }

    fn cumulative(&self, f: &[C64]) -> Vec<C64> {
        self.grid.cumulative(f).expect("engine arrays match the grid")
    }

    /// E[f; phi](x_i) = int_{x0}^{x_i} e^{phi_i - phi(u)} f(u) du, one panel
    /// at a time with ratio carries.
    fn expweighted(&self, f: &[C64], phase: &[C64]) -> Vec<C64> {
        let n = self.len();
        let nloc = self.grid.nloc();
        let mut out = vec![C64::new(0.0, 0.0); n];
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..self.grid.panels() {
            let s = self.grid.panel_start(p);
            let h = self.grid.half_width(p);
            for r in 1..nloc {
                let row = self.grid.stencil_row(r);
                let mut sum = C64::new(0.0, 0.0);
                for c in 0..nloc {
                    if row[c] != 0.0 {
                        sum += row[c] * (phase[s + r] - phase[s + c]).exp() * f[s + c];
                    }
                }
                out[s + r] = (phase[s + r] - phase[s]).exp() * acc + sum * h;
            }
            acc = out[s + nloc - 1];
        }
        out
    }

    /// First Neumann column: the working kernel's own first column
    /// K~(x, x0).
    pub(super) fn k_first(&self, kind: Kind) -> Vec<C64> {
        let sgn = self.side;
        match kind {
            Kind::K1 => {
                let e = self.expweighted(&self.g, &self.phase_a);
                e.into_iter().map(|v| sgn + v).collect()
            }
            Kind::K2 => (0..self.len())
                .map(|i| {
                    sgn * (self.g[i] * (self.phase_x[i] - self.phase_x[0]).exp() - self.b2[i])
                })
                .collect(),
        }
    }

    /// One Volterra application c -> K~ * c.
    pub(super) fn k_apply(&self, kind: Kind, c: &[C64]) -> Vec<C64> {
        let sgn = self.side;
        let cc = self.cumulative(c);
        match kind {
            Kind::K1 => {
                let gc: Vec<C64> = self.g.iter().zip(cc.iter()).map(|(a, b)| a * b).collect();
                let e = self.expweighted(&gc, &self.phase_a);
                (0..self.len()).map(|i| sgn * cc[i] + e[i]).collect()
            }
            Kind::K2 => {
                let e = self.expweighted(c, &self.phase_x);
                (0..self.len())
                    .map(|i| sgn * (self.g[i] * e[i] - self.b2[i] * cc[i]))
                    .collect()
            }
        }
    }

    /// Neumann partial sums: returns (S_m, S_{m-1}, sup|last increment|).
    pub(super) fn neumann(
        &self,
        kind: Kind,
        order: usize,
        stop_tol: Option<f64>,
    ) -> Result<(Vec<C64>, Vec<C64>, f64), HeunError> {
        assert!(order >= 1);
        let sup = |v: &[C64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut c = self.k_first(kind);
        let mut sum = c.clone();
        let mut prev = vec![C64::new(0.0, 0.0); self.len()];
        let mut inc = sup(&c);
        for _ in 2..=order {
            if stop_tol.map_or(false, |t| inc < t) {
                break;
            }
            c = self.k_apply(kind, &c);
            prev.copy_from_slice(&sum);
            for (s, d) in sum.iter_mut().zip(c.iter()) {
                *s += d;
            }
            inc = sup(&c);
        }
        Ok((sum, prev, inc))
    }

    /// Direct second-kind solve G~ = K~ + K~ * G~, one panel block at a
    /// time. Only the running integrals W0/W1 (K1) or W2 (K2) and the
    /// cumulative CG cross panels, always rescaled by phase ratios.
    pub(super) fn direct(&self, kind: Kind) -> Result<Vec<C64>, HeunError> {
        let n = self.len();
        let nloc = self.grid.nloc();
        let kp1 = nloc - 1;
        let sgn = self.side;
        let phase = self.phase(kind);
        let zero = C64::new(0.0, 0.0);
        let mut gcol = vec![zero; n];
        gcol[0] = match kind {
            Kind::K1 => C64::new(sgn, 0.0),
            Kind::K2 => sgn * (self.g[0] - self.b2[0]),
        };
        let mut cg = zero; // int_{x0}^{edge} G~
        let mut w0 = zero; // K1: int e^{phi_edge - phi} g
        let mut w1 = zero; // K1: int e^{phi_edge - phi} g CcG~
        let mut w2 = zero; // K2: int e^{phi_edge - phi} G~
        let mut jq = vec![zero; nloc * nloc];
        let mut kloc = vec![zero; nloc * nloc];
        let mut first = vec![zero; nloc];
        let mut rknown = vec![zero; nloc];
        let mut amat = vec![zero; kp1 * kp1];
        let mut rhs = vec![zero; kp1];

        for p in 0..self.grid.panels() {
            let s = self.grid.panel_start(p);
            let h = self.grid.half_width(p);
            let ph = &phase[s..s + nloc];
            let gl = &self.g[s..s + nloc];
            let b2l = &self.b2[s..s + nloc];

            match kind {
                Kind::K1 => {
                    // jq[r][c] = int_{edge}^{x_c} e^{ph_r - ph(u)} g(u) du
                    for r in 0..nloc {
                        for c in 0..nloc {
                            let row = self.grid.stencil_row(c);
                            let mut sum = zero;
                            for d in 0..nloc {
                                if row[d] != 0.0 {
                                    sum += row[d] * (ph[r] - ph[d]).exp() * gl[d];
                                }
                            }
                            jq[r * nloc + c] = sum * h;
                        }
                    }
                    for r in 0..nloc {
                        let diag = jq[r * nloc + r];
                        let lift = (ph[r] - ph[0]).exp();
                        for c in 0..nloc {
                            kloc[r * nloc + c] = sgn + diag - jq[r * nloc + c];
                        }
                        first[r] = sgn + lift * w0 + diag;
                        rknown[r] = sgn * cg + lift * w1 + diag * cg;
                    }
                }
                Kind::K2 => {
                    for r in 0..nloc {
                        for c in 0..nloc {
                            kloc[r * nloc + c] = sgn * (gl[r] * (ph[r] - ph[c]).exp() - b2l[r]);
                        }
                        first[r] = sgn * (gl[r] * (ph[r] - phase[0]).exp() - b2l[r]);
                        rknown[r] =
                            sgn * (gl[r] * (ph[r] - ph[0]).exp() * w2 - b2l[r] * cg);
                    }
                }
            }

            // Local collocation system over the panel's unknown nodes.
            for r in 1..nloc {
                let row = self.grid.stencil_row(r);
                rhs[r - 1] = first[r] + rknown[r] + row[0] * h * kloc[r * nloc] * gcol[s];
                for c in 1..nloc {
                    let mut a = -row[c] * h * kloc[r * nloc + c];
                    if c == r {
                        a += 1.0;
                    }
                    amat[(r - 1) * kp1 + (c - 1)] = a;
                }
            }
            if !util::solve_dense(&mut amat, &mut rhs, kp1) {
                return Err(HeunError::Volterra(VolterraError::SingularSystem {
                    node: s,
                    pivot: 0.0,
                }));
            }
            gcol[s + 1..s + nloc].copy_from_slice(&rhs[..kp1]);

            // Carries to the next panel.
            let gl_col = &gcol[s..s + nloc];
            let mut ccg_loc = vec![zero; nloc];
            for r in 0..nloc {
                let row = self.grid.stencil_row(r);
                let mut sum = zero;
                for d in 0..nloc {
                    if row[d] != 0.0 {
                        sum += row[d] * gl_col[d];
                    }
                }
                ccg_loc[r] = cg + sum * h;
            }
            let lift = (ph[nloc - 1] - ph[0]).exp();
            let last_row = self.grid.stencil_row(nloc - 1);
            match kind {
                Kind::K1 => {
                    let mut s0 = zero;
                    let mut s1 = zero;
                    for d in 0..nloc {
                        let rho = (ph[nloc - 1] - ph[d]).exp();
                        s0 += last_row[d] * rho * gl[d];
                        s1 += last_row[d] * rho * gl[d] * ccg_loc[d];
                    }
                    w0 = lift * w0 + s0 * h;
                    w1 = lift * w1 + s1 * h;
                }
                Kind::K2 => {
                    let mut s2 = zero;
                    for d in 0..nloc {
                        s2 += last_row[d] * (ph[nloc - 1] - ph[d]).exp() * gl_col[d];
                    }
                    w2 = lift * w2 + s2 * h;
                }
            }
            cg = ccg_loc[nloc - 1];
        }
        Ok(gcol)
    }

    /// H(x_i) = H0 (1 + int G1) + (H0' - H0)(e^{z-z0} - 1 + int (e^{z-zeta}
    /// - 1) G2), all integrals in x space.
    pub(super) fn reconstruct(
        &self,
        g1: &[C64],
        g2: &[C64],
        h0: C64,
        delta_h: C64,
        form: ReconstructionForm,
    ) -> Vec<C64> {
        let n = self.len();
        let mut out = vec![h0; n];
        if h0.norm() > 0.0 {
            let cc1 = self.cumulative(g1);
            for (o, c) in out.iter_mut().zip(cc1.iter()) {
                *o = h0 * (1.0 + c);
            }
        }
        if delta_h.norm() > 0.0 {
            let cc2 = self.cumulative(g2);
            let e2 = self.expweighted(g2, &self.phase_x);
            for i in 0..n {
                let dx = self.side * (self.grid.nodes[i] - self.x0);
                let mut term = C64::new(dx.exp_m1(), 0.0) + e2[i] - cc2[i];
                if form == ReconstructionForm::TheoremU12 {
                    term -= dx;
                }
                out[i] += delta_h * term;
            }
        }
        out
    }
}
