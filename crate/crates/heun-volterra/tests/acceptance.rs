// Acceptance gate. One test per criterion; every clause prints the measured
// value next to its target before any assertion fires, so a failing run
// still reports the full picture. Reference values come from the in-process
// adaptive ODE solver at tight tolerances, never from stored constants.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use heun_volterra::companion::ordered_exponential_oracle;
use heun_volterra::heun::{
    coefficients, evaluate, evaluate_order_m, kernel_k1, kernel_spec, solve_basis, EngineConfig,
    HeunClass, HeunParams, InitialData, KernelKind, Method,
};
use heun_volterra::oracle::{self, OdeProblem, SolverConfig};
use heun_volterra::quadrature::{build_grid, Interval, QuadConfig, Rule};
use heun_volterra::teukolsky::{
    asymptotics_horizon, evaluate_radial, fitted_log_slope, local_behavior,
    radial_equation_residual, reduce, BranchChoice, TeukolskyInput,
};
use heun_volterra::util::linear_fit;
use heun_volterra::volterra::{neumann_series, resolve_second_kind, DiscreteKernel};
use heun_volterra::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Clause bookkeeping: print measured vs target per clause, panic at the end
/// if anything failed so every measurement reaches the log first.
struct Gate {
    name: &'static str,
    failures: Vec<String>,
}

impl Gate {
    fn new(name: &'static str) -> Self {
        Gate { name, failures: Vec::new() }
    }

    fn clause(&mut self, tag: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("[{}.{}] {} => {}", self.name, tag, detail, verdict);
        if !pass {
            self.failures.push(format!("{tag}: {detail}"));
        }
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("[{}] => {}", self.name, verdict);
        assert!(
            self.failures.is_empty(),
            "{} failed clauses:\n{}",
            self.name,
            self.failures.join("\n")
        );
    }
}

fn ref_cfg() -> SolverConfig {
    SolverConfig { rel_tol: 1e-12, abs_tol: 1e-14, max_steps: 2_000_000, dense_output: false }
}

/// Reference values from the adaptive solver, points on either side of z0.
fn oracle_truth(class: HeunClass, p: &HeunParams, init: &InitialData, zs: &[f64]) -> Vec<C64> {
    let coef = coefficients(class, p).unwrap();
    let b1 = coef.b1.clone();
    let b2 = coef.b2.clone();
    let problem = OdeProblem::new(move |z| b1(z), move |z| b2(z), init.z0, init.h0, init.dh0);
    let cfg = ref_cfg();
    let mut out = vec![c(0.0, 0.0); zs.len()];
    let mut right: Vec<(usize, f64)> =
        zs.iter().copied().enumerate().filter(|&(_, z)| z >= init.z0).collect();
    let mut left: Vec<(usize, f64)> =
        zs.iter().copied().enumerate().filter(|&(_, z)| z < init.z0).collect();
    right.sort_by(|a, b| a.1.total_cmp(&b.1));
    left.sort_by(|a, b| b.1.total_cmp(&a.1));
    for batch in [right, left] {
        if batch.is_empty() {
            continue;
        }
        let pts: Vec<f64> = batch.iter().map(|&(_, z)| z).collect();
        let sol = oracle::solve(&problem, &pts, &cfg).unwrap();
        for (&(idx, _), &(h, _)) in batch.iter().zip(sol.iter()) {
            out[idx] = h;
        }
    }
    out
}

fn ex1() -> (HeunClass, HeunParams, InitialData) {
    (
        HeunClass::General,
        HeunParams::General {
            gamma: c(2.0, 0.0),
            delta: c(7.0, 0.0),
            epsilon: c(-1.0, 0.0),
            alpha_beta: c(1.5, 0.0),
            q: c(1.0, 0.0),
            t: c(4.0, 0.0),
        },
        InitialData { z0: 6.0, h0: c(1.0, 0.0), dh0: c(1.0, 0.0) },
    )
}

fn ex2() -> (HeunClass, HeunParams, InitialData) {
    (
        HeunClass::Confluent,
        HeunParams::Confluent {
            gamma: c(3.0, 0.0),
            delta: c(2.0 / 3.0, 0.0),
            epsilon: c(4.0, 0.0),
            alpha: c(5.0, 0.0),
            q: c(1.0, 0.0),
        },
        InitialData { z0: -5.0, h0: c(0.0, 0.0), dh0: c(1.0, 0.0) },
    )
}

fn ex3() -> (HeunClass, HeunParams, InitialData) {
    (
        HeunClass::Biconfluent,
        HeunParams::Biconfluent {
            gamma: c(0.1, 0.0),
            delta: c(1.0, 0.0),
            epsilon: c(6.0, 0.0),
            alpha: c(-1.0, 0.0),
            q: c(2.0, 0.0),
        },
        InitialData { z0: 2.0 / 3.0, h0: c(2.0, 0.0), dh0: c(-4.0, 0.0) },
    )
}

fn ex4() -> (HeunClass, HeunParams, InitialData) {
    (
        HeunClass::DoublyConfluent,
        HeunParams::DoublyConfluent {
            gamma: c(1.0, 0.0),
            delta: c(-2.0, 0.0),
            alpha: c(10.0, 0.0),
            q: c(-1.0, 0.0),
        },
        InitialData { z0: 1.0, h0: c(0.5, 0.0), dh0: c(0.5, 0.0) },
    )
}

fn ex5() -> (HeunClass, HeunParams, InitialData) {
    (
        HeunClass::Triconfluent,
        HeunParams::Triconfluent {
            gamma: c(2.0, 0.0),
            delta: c(-1.0, 0.0),
            epsilon: c(7.0, 0.0),
            alpha: c(1.0, 0.0),
            q: c(2.0, 1.0),
        },
        InitialData { z0: -5.0, h0: c(2.0, 0.0), dh0: c(2.0, 0.0) },
    )
}

fn max_rel(got: &[C64], want: &[C64]) -> f64 {
    got.iter()
        .zip(want.iter())
        .map(|(g, w)| (g - w).norm() / w.norm())
        .fold(0.0f64, f64::max)
}

fn max_abs(got: &[C64], want: &[C64]) -> f64 {
    got.iter().zip(want.iter()).map(|(g, w)| (g - w).norm()).fold(0.0f64, f64::max)
}

fn order_values(
    class: HeunClass,
    p: &HeunParams,
    init: &InitialData,
    zs: &[f64],
    m: usize,
) -> Vec<C64> {
    evaluate_order_m(class, p, init, zs, m, &EngineConfig::default())
        .unwrap()
        .into_iter()
        .map(|pt| pt.h)
        .collect()
}

#[test]
fn a1_general_series_orders_against_reference() {
    let start = Instant::now();
    let mut gate = Gate::new("A1");
    let (class, p, init) = ex1();
    let zs = linspace(6.0, 26.0, 200);
    let truth = oracle_truth(class, &p, &init, &zs);

    let m9 = order_values(class, &p, &init, &zs, 9);
    let rel9 = max_rel(&m9, &truth);
    gate.clause("m9", rel9 <= 1e-6, format!("order-9 max relative error measured={rel9:.3e} target<=1e-6"));

    let sups: Vec<f64> = [1usize, 2, 3, 6]
        .iter()
        .map(|&m| max_abs(&order_values(class, &p, &init, &zs, m), &truth))
        .collect();
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    gate.clause(
        "orders",
        monotone,
        format!(
            "sup errors at orders 1,2,3,6 measured={:.3e},{:.3e},{:.3e},{:.3e} target=monotone decreasing",
            sups[0], sups[1], sups[2], sups[3]
        ),
    );

    let elapsed = start.elapsed();
    gate.clause("time", elapsed <= Duration::from_secs(30), format!("elapsed measured={elapsed:.2?} target<=30s"));
    gate.finish();
}

#[test]
fn a2_confluent_direct_and_series_against_reference() {
    let start = Instant::now();
    let mut gate = Gate::new("A2");
    let (class, p, init) = ex2();
    let zs = linspace(-10.0, -1.0, 200);
    let truth = oracle_truth(class, &p, &init, &zs);

    let direct = evaluate(class, &p, &init, &zs, Method::VolterraDirect, &EngineConfig::default())
        .unwrap()
        .into_iter()
        .map(|pt| pt.h)
        .collect::<Vec<_>>();
    let rel = max_rel(&direct, &truth);
    gate.clause("direct", rel <= 1e-6, format!("direct max relative error measured={rel:.3e} target<=1e-6"));

    let sups: Vec<f64> = [2usize, 20, 40]
        .iter()
        .map(|&m| max_abs(&order_values(class, &p, &init, &zs, m), &truth))
        .collect();
    let decreasing = sups[0] > sups[1] && sups[1] > sups[2];
    gate.clause(
        "orders",
        decreasing,
        format!(
            "sup errors at orders 2,20,40 measured={:.3e},{:.3e},{:.3e} target=strictly decreasing",
            sups[0], sups[1], sups[2]
        ),
    );

    let elapsed = start.elapsed();
    gate.clause("time", elapsed <= Duration::from_secs(60), format!("elapsed measured={elapsed:.2?} target<=60s"));
    gate.finish();
}

#[test]
fn a3_biconfluent_direct_against_reference() {
    let start = Instant::now();
    let mut gate = Gate::new("A3");
    let (class, p, init) = ex3();
    let zs = linspace(0.2, 10.0, 200);
    let truth = oracle_truth(class, &p, &init, &zs);

    let direct = evaluate(class, &p, &init, &zs, Method::VolterraDirect, &EngineConfig::default())
        .unwrap()
        .into_iter()
        .map(|pt| pt.h)
        .collect::<Vec<_>>();
    let rel = max_rel(&direct, &truth);
    gate.clause("direct", rel <= 1e-6, format!("direct max relative error measured={rel:.3e} target<=1e-6"));

    let elapsed = start.elapsed();
    gate.clause("time", elapsed <= Duration::from_secs(30), format!("elapsed measured={elapsed:.2?} target<=30s"));
    gate.finish();
}

#[test]
fn a4_doubly_confluent_order_stability_and_reference() {
    let mut gate = Gate::new("A4");
    let (class, p, init) = ex4();
    let zs = linspace(1.0, 9.0, 160);
    let truth = oracle_truth(class, &p, &init, &zs);

    let m9 = order_values(class, &p, &init, &zs, 9);
    let m12 = order_values(class, &p, &init, &zs, 12);
    let gap = max_abs(&m9, &m12);
    gate.clause("m9-m12", gap <= 1e-8, format!("sup|order 9 - order 12| measured={gap:.3e} target<=1e-8"));

    let rel = max_rel(&m12, &truth);
    let abs = max_abs(&m12, &truth);
    gate.clause(
        "m12",
        rel <= 1e-6,
        format!("order-12 vs reference measured rel={rel:.3e} abs={abs:.3e} target<=1e-6"),
    );
    gate.finish();
}

#[test]
fn a5_triconfluent_complex_order_ten_against_reference() {
    let mut gate = Gate::new("A5");
    let (class, p, init) = ex5();
    let zs = linspace(-5.0, 7.0, 160);
    let truth = oracle_truth(class, &p, &init, &zs);

    let m10 = order_values(class, &p, &init, &zs, 10);
    let worst = m10
        .iter()
        .zip(truth.iter())
        .map(|(g, w)| (g.re - w.re).abs().max((g.im - w.im).abs()))
        .fold(0.0f64, f64::max);
    gate.clause(
        "m10",
        worst <= 1e-6,
        format!("order-10 max absolute error over both parts measured={worst:.3e} target<=1e-6"),
    );
    gate.finish();
}

fn sup_entry_diff(a: &DiscreteKernel, b: &DiscreteKernel) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        for j in 0..=i {
            worst = worst.max((a.get(i, j) - b.get(i, j)).norm());
        }
    }
    worst
}

#[test]
fn a6_volterra_engine_resolvent_and_tail_bounds() {
    let mut gate = Gate::new("A6");

    // Unit kernel on [0, 1]: resolvent of K = 1 is e^{z - zeta}.
    let grid =
        Arc::new(build_grid(Interval::new(0.0, 1.0).unwrap(), 96, Rule::GaussPanel(5)).unwrap());
    let ones = DiscreteKernel::from_fn(Arc::clone(&grid), |_, _| c(1.0, 0.0)).unwrap();
    let direct = resolve_second_kind(&ones).unwrap();
    let worst = (0..grid.len())
        .map(|i| (direct.get(i, 0) - c(grid.nodes[i].exp(), 0.0)).norm())
        .fold(0.0f64, f64::max);
    gate.clause("resolvent", worst <= 1e-10, format!("|G(z,0) - e^z| measured={worst:.3e} target<=1e-10"));

    let series = neumann_series(&ones, 20).unwrap();
    let s20 = series.partial_sums.last().unwrap();
    let gap = sup_entry_diff(s20, &direct);
    gate.clause("neumann-vs-direct", gap <= 1e-10, format!("sup|S_20 - G| measured={gap:.3e} target<=1e-10"));

    // Classical tail bound kappa^{m+1} L^m e^{kappa L} / m! dominates the
    // observed Neumann tail on every example kernel, m = 1..10, each
    // restricted to a compact subinterval of its admissible range.
    let cases: Vec<(&str, HeunClass, HeunParams, f64, f64)> = vec![
        ("general", ex1().0, ex1().1, 6.0, 8.0),
        ("confluent", ex2().0, ex2().1, -6.0, -4.0),
        ("biconfluent", ex3().0, ex3().1, 0.5, 2.0),
        ("doubly-confluent", ex4().0, ex4().1, 1.0, 3.0),
        ("triconfluent", ex5().0, ex5().1, -1.0, 1.0),
    ];
    for (name, class, p, lo, hi) in cases {
        let grid =
            Arc::new(build_grid(Interval::new(lo, hi).unwrap(), 24, Rule::GaussPanel(4)).unwrap());
        let k1 = kernel_k1(class, &p, Arc::clone(&grid), &QuadConfig::default()).unwrap();
        let res = neumann_series(&k1, 10).unwrap();
        let direct = resolve_second_kind(&k1).unwrap();
        let mut dominated = true;
        let mut worst_ratio = 0.0f64;
        for m in 1..=10usize {
            let tail = sup_entry_diff(&res.partial_sums[m - 1], &direct);
            let bound = res.bounds[m - 1];
            dominated &= tail <= bound;
            worst_ratio = worst_ratio.max(tail / bound);
        }
        gate.clause(
            &format!("bound-{name}"),
            dominated,
            format!("max tail/bound over m=1..10 measured={worst_ratio:.3e} target<=1"),
        );
    }
    gate.finish();
}

#[test]
fn a7_fundamental_matrix_columns_match_reference() {
    let mut gate = Gate::new("A7");
    // Windows stay where the coefficients are moderate; the triconfluent one
    // keeps to the right of z0 where its cubic phase decays.
    let cases: Vec<(&str, HeunClass, HeunParams, InitialData, f64, f64)> = vec![
        ("general", ex1().0, ex1().1, ex1().2, 5.0, 10.0),
        ("confluent", ex2().0, ex2().1, ex2().2, -9.0, -1.5),
        ("biconfluent", ex3().0, ex3().1, ex3().2, 0.3, 6.0),
        ("doubly-confluent", ex4().0, ex4().1, ex4().2, 0.5, 6.0),
        ("triconfluent", ex5().0, ex5().1, ex5().2, -5.0, 3.0),
    ];
    for (name, class, p, init, lo, hi) in &cases {
        let zs = linspace(*lo, *hi, 11);
        let basis = solve_basis(*class, p, init.z0, &zs, &EngineConfig::default()).unwrap();
        let fm = ordered_exponential_oracle(*class, p, init.z0, &zs, &ref_cfg()).unwrap();
        let scale = fm.u.iter().map(|m| m[0][0].norm()).fold(1.0f64, f64::max);
        let gap = basis
            .u11
            .iter()
            .zip(fm.u.iter())
            .map(|(got, m)| (got - m[0][0]).norm())
            .fold(0.0f64, f64::max);
        gate.clause(
            &format!("u11-{name}"),
            gap <= 1e-6 * scale,
            format!("sup|u11 - U11| measured={gap:.3e} target<=1e-6*scale (scale {scale:.3e})"),
        );
    }

    // Second column, confluent example: the corollary form tracks the
    // reference; the theorem form misses it by exactly (z - z0)(H0' - H0).
    let (class, p, init) = ex2();
    let zs = linspace(-9.0, -1.5, 11);
    let basis = solve_basis(class, &p, init.z0, &zs, &EngineConfig::default()).unwrap();
    let fm = ordered_exponential_oracle(class, &p, init.z0, &zs, &ref_cfg()).unwrap();
    let scale = fm.u.iter().map(|m| m[0][1].norm()).fold(1.0f64, f64::max);
    let gap_cor = basis
        .u12_corollary
        .iter()
        .zip(fm.u.iter())
        .map(|(got, m)| (got - m[0][1]).norm())
        .fold(0.0f64, f64::max);
    gate.clause(
        "u12-corollary",
        gap_cor <= 1e-6 * scale,
        format!("sup|u12 - U12| measured={gap_cor:.3e} target<=1e-6*scale (scale {scale:.3e})"),
    );

    // Basis column data is (H0, H0') = (0, 1), so the documented gap between
    // the two reconstruction forms is exactly z - z0.
    let gap_form = basis
        .u12_corollary
        .iter()
        .zip(basis.u12_theorem.iter())
        .zip(zs.iter())
        .map(|((cor, theo), &z)| ((cor - theo) - c(z - init.z0, 0.0)).norm())
        .fold(0.0f64, f64::max);
    let theo_miss = basis
        .u12_theorem
        .iter()
        .zip(fm.u.iter())
        .map(|(got, m)| (got - m[0][1]).norm())
        .fold(0.0f64, f64::max);
    gate.clause(
        "u12-gap",
        gap_form <= 1e-8,
        format!(
            "|(corollary - theorem) - (z - z0)| measured={gap_form:.3e} target<=1e-8; theorem form misses reference by {theo_miss:.3e}"
        ),
    );
    gate.finish();
}

fn pair_matches(got: [C64; 2], want: [C64; 2]) -> f64 {
    let d = |a: C64, b: C64| (a - b).norm();
    let straight = d(got[0], want[0]).max(d(got[1], want[1]));
    let crossed = d(got[0], want[1]).max(d(got[1], want[0]));
    straight.min(crossed)
}

#[test]
fn a8_random_inputs_all_branches_satisfy_radial_equation() {
    let mut gate = Gate::new("A8");
    let mut rng = ChaCha8Rng::seed_from_u64(0xa8);
    let spins = [0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5, 2.0, -2.0];
    let zs = linspace(1.5, 4.5, 1601);
    let init = InitialData { z0: 3.0, h0: c(1.0, 0.0), dh0: c(0.7, 0.0) };

    let mut worst_residual = 0.0f64;
    let mut worst_sets = 0.0f64;
    for _ in 0..10 {
        let mass: f64 = rng.gen_range(0.5..2.0);
        let input = TeukolskyInput {
            mass,
            a: mass * rng.gen_range(0.0..0.9),
            s: spins[rng.gen_range(0..spins.len())],
            m: rng.gen_range(-3..=3),
            omega: c(rng.gen_range(0.3..0.9), rng.gen_range(-0.3..0.3)),
            a_lm: c(rng.gen_range(-2.0..6.0), rng.gen_range(-2.0..2.0)),
        };
        for branch in BranchChoice::all() {
            let red = reduce(&input, branch).unwrap();
            let lb = local_behavior(&red);
            let s = red.input.s;
            let event = pair_matches([red.xi, -red.xi - s], lb.at_event);
            let inner = pair_matches([red.eta, -red.eta - s], lb.at_inner);
            worst_sets = worst_sets.max(event).max(inner);

            let samples =
                evaluate_radial(&red, &init, &zs, Method::VolterraDirect, &EngineConfig::default())
                    .unwrap();
            let pairs: Vec<(f64, C64)> = samples.iter().map(|smp| (smp.r, smp.big_r)).collect();
            let res = radial_equation_residual(&input, &pairs).unwrap();
            worst_residual = worst_residual.max(res);
        }
    }
    gate.clause(
        "exponent-sets",
        worst_sets <= 1e-12,
        format!("worst local exponent set mismatch measured={worst_sets:.3e} target<=1e-12"),
    );
    gate.clause(
        "residual",
        worst_residual <= 1e-3,
        format!("worst radial-equation residual measured={worst_residual:.3e} target<=1e-3"),
    );
    gate.finish();
}

#[test]
fn a9_asymptotic_regimes_match_predictions() {
    let mut gate = Gate::new("A9");

    // Algebraic branch: data aligned with the decaying solution, log-log
    // slope of |H| on [50, 200] against -Re(alpha).
    let input = TeukolskyInput {
        mass: 1.0,
        a: 0.6,
        s: 0.0,
        m: 0,
        omega: c(0.5, 0.1),
        a_lm: c(2.0, 0.0),
    };
    let red = reduce(&input, BranchChoice::from_index(3).unwrap()).unwrap();
    let want = local_behavior(&red).infinity_power.re;
    let zs = logspace(50.0, 200.0, 61);
    let init = InitialData { z0: 3.0, h0: c(1.0, 0.0), dh0: c(1.0, 0.0) };
    let samples =
        evaluate_radial(&red, &init, &zs, Method::VolterraDirect, &EngineConfig::default())
            .unwrap();
    let mags: Vec<f64> = samples.iter().map(|smp| smp.h.norm()).collect();
    let (_, slope) = fitted_log_slope(&zs, &mags).unwrap();
    let off = (slope - want).abs() / want.abs();
    gate.clause(
        "power",
        off <= 0.05,
        format!("log-log slope measured={slope:.4} predicted={want:.4} rel gap={off:.3e} target<=5%"),
    );

    // Exponential branch: generic data picks up e^{-4 Re(p) z}.
    let input = TeukolskyInput {
        mass: 1.0,
        a: 0.6,
        s: -2.0,
        m: 1,
        omega: c(0.5, 0.1),
        a_lm: c(4.0, 0.0),
    };
    let red = reduce(&input, BranchChoice::default()).unwrap();
    let want_rate = local_behavior(&red).infinity_exp_rate.re;
    let zs = linspace(50.0, 200.0, 61);
    let samples =
        evaluate_radial(&red, &init, &zs, Method::VolterraDirect, &EngineConfig::default())
            .unwrap();
    let lnmags: Vec<f64> = samples.iter().map(|smp| smp.h.norm().ln()).collect();
    let (_, rate) = linear_fit(&zs, &lnmags);
    let off = (rate - want_rate).abs() / want_rate.abs();
    gate.clause(
        "rate",
        off <= 0.05,
        format!("growth rate measured={rate:.4} predicted={want_rate:.4} rel gap={off:.3e} target<=5%"),
    );

    // Horizon side, contracting case: K1 collapses to 1 next to z = 1.
    let input = TeukolskyInput {
        mass: 1.0,
        a: 0.9,
        s: -2.0,
        m: 2,
        omega: c(0.8, 0.4),
        a_lm: c(2.3015, -4.8303),
    };
    let red = reduce(&input, BranchChoice::default()).unwrap();
    let spec = kernel_spec(
        HeunClass::Confluent,
        &red.che_params(),
        KernelKind::K1,
        QuadConfig::default(),
    )
    .unwrap();
    let k1 = spec.eval(1.0 + 1e-3, 1.01).unwrap();
    let gap = (k1 - c(1.0, 0.0)).norm();
    gate.clause("k1-horizon", gap <= 1e-3, format!("|K1(1+1e-3, 1.01) - 1| measured={gap:.3e} target<=1e-3"));

    // Horizon side, Re(delta) in (0, 1): successive differences of H expose
    // the (z - 1)^{1 - delta} term; constant-ratio spacing keeps the fitted
    // log-log slope at Re(1 - delta).
    let input = TeukolskyInput {
        mass: 1.0,
        a: 0.6,
        s: 0.0,
        m: 0,
        omega: c(0.5, 1.0 / 9.0),
        a_lm: c(4.0, 0.0),
    };
    let red = reduce(&input, BranchChoice::default()).unwrap();
    let horizon = asymptotics_horizon(&red);
    assert!(
        red.delta.re > 0.0 && red.delta.re < 1.0 && !horizon.constant_only,
        "fixture must sit in the fractional-power window, got delta = {}",
        red.delta
    );
    // The analytic part of H contaminates the differences at O(sqrt(d)), so
    // the fitted slope only settles onto Re(1 - delta) as the ladder top
    // shrinks; 1e-2 keeps that bias a few percent.
    let want_slope = horizon.singular_power.re;
    let ds = logspace(3e-4, 1e-2, 25);
    let zs: Vec<f64> = ds.iter().map(|d| 1.0 + d).collect();
    let init = InitialData { z0: 1.05, h0: c(1.0, 0.0), dh0: c(0.5, 0.0) };
    let samples =
        evaluate_radial(&red, &init, &zs, Method::VolterraDirect, &EngineConfig::default())
            .unwrap();
    let diffs: Vec<f64> =
        samples.windows(2).map(|w| (w[1].h - w[0].h).norm()).collect();
    let (_, slope) = fitted_log_slope(&ds[..diffs.len()], &diffs).unwrap();
    let off = (slope - want_slope).abs() / want_slope.abs();
    gate.clause(
        "horizon-slope",
        off <= 0.10,
        format!("difference slope measured={slope:.4} predicted={want_slope:.4} rel gap={off:.3e} target<=10%"),
    );
    gate.finish();
}

#[test]
fn a10_repeated_cli_runs_are_byte_identical() {
    let mut gate = Gate::new("A10");
    let args = [
        "eval",
        "--class",
        "confluent",
        "--params",
        r#"{"gamma":3.0,"delta":0.6666666666666666,"epsilon":4.0,"alpha":5.0,"q":1.0}"#,
        "--z0",
        "-5",
        "--h0",
        "0",
        "--dh0",
        "1",
        "--from",
        "-10",
        "--to",
        "-1",
        "--points",
        "120",
    ];
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_heun")).args(args).output().unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    gate.clause(
        "identical",
        first == second,
        format!("two runs, {} bytes each, byte-identical={}", first.len(), first == second),
    );
    gate.finish();
}
