// Direct second-kind solve for a confluent-class equation with evaluation
// points on both sides of z0 = -5, cross-checked against an adaptive
// Runge-Kutta integration of the same equation.

use heun_volterra::heun::{
    coefficients, evaluate, EngineConfig, HeunClass, HeunParams, InitialData, Method,
};
use heun_volterra::oracle::{solve, OdeProblem, SolverConfig};
use heun_volterra::C64;

fn main() {
    let c = |re: f64, im: f64| C64::new(re, im);
    let params = HeunParams::Confluent {
        gamma: c(3.0, 0.0),
        delta: c(2.0 / 3.0, 0.0),
        epsilon: c(4.0, 0.0),
        alpha: c(5.0, 0.0),
        q: c(1.0, 0.0),
    };
    let init = InitialData { z0: -5.0, h0: c(0.0, 0.0), dh0: c(1.0, 0.0) };
    let cfg = EngineConfig::default();

    let zs: Vec<f64> = (0..=90).map(|i| -10.0 + 9.0 * i as f64 / 90.0).collect();
    let ours = evaluate(HeunClass::Confluent, &params, &init, &zs, Method::VolterraDirect, &cfg)
        .expect("direct solve");

    // The oracle integrates one direction at a time.
    let coef = coefficients(HeunClass::Confluent, &params).unwrap();
    let ocfg = SolverConfig::default();
    let mut want = vec![C64::new(0.0, 0.0); zs.len()];
    for dir in [1.0f64, -1.0] {
        let side: Vec<(usize, f64)> = zs
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, z)| dir * (z - init.z0) >= 0.0)
            .collect();
        let mut pts: Vec<f64> = side.iter().map(|&(_, z)| z).collect();
        pts.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
        let b1 = coef.b1.clone();
        let b2 = coef.b2.clone();
        let problem = OdeProblem::new(
            move |z| b1(z),
            move |z| b2(z),
            init.z0,
            init.h0,
            init.dh0,
        );
        let sol = solve(&problem, &pts, &ocfg).expect("oracle");
        for (&z, (y, _)) in pts.iter().zip(sol) {
            let idx = zs.iter().position(|&w| w == z).unwrap();
            want[idx] = y;
        }
    }

    let mut worst = 0.0f64;
    println!("      z            |H|          engine err_est   vs oracle");
    for (pt, w) in ours.iter().zip(&want) {
        let gap = (pt.h - w).norm() / w.norm().max(1.0);
        worst = worst.max(gap);
        if (pt.z * 2.0).fract() == 0.0 {
            println!(
                "{:>8.2}   {:>12.6e}   {:>12.3e}   {:>12.3e}",
                pt.z,
                pt.h.norm(),
                pt.err_est,
                gap
            );
        }
    }
    println!("\nworst relative gap against the oracle: {worst:.3e}");
}
