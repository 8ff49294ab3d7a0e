// The adaptive Runge-Kutta oracle on its own: a tolerance ladder against its
// tightest setting, fifth-order convergence of the fixed-step variant, and
// the defect of returned samples under the original equation.

use heun_volterra::oracle::{residual, solve, solve_fixed_step, OdeProblem, SolverConfig};
use heun_volterra::C64;

fn problem() -> OdeProblem {
    // Confluent-class coefficients, z0 = -5, H(z0) = 0, H'(z0) = 1.
    let b1 = |z: f64| -C64::new(3.0 / z + (2.0 / 3.0) / (z - 1.0) + 4.0, 0.0);
    let b2 = |z: f64| -C64::new((5.0 * z - 1.0) / (z * (z - 1.0)), 0.0);
    OdeProblem::new(b1, b2, -5.0, C64::new(0.0, 0.0), C64::new(1.0, 0.0))
}

fn main() {
    let zs: Vec<f64> = (0..=40).map(|i| -5.0 + 4.0 * i as f64 / 40.0).collect();

    let mut tight = SolverConfig::default();
    tight.rel_tol = 1e-13;
    tight.abs_tol = 1e-14;
    tight.dense_output = false;
    let reference = solve(&problem(), &zs, &tight).expect("reference run");

    println!("rel_tol     max relative gap to rel_tol=1e-13");
    for exp in [4i32, 6, 8, 10, 12] {
        let mut cfg = SolverConfig::default();
        cfg.rel_tol = 10f64.powi(-exp);
        cfg.abs_tol = cfg.rel_tol * 1e-2;
        let run = solve(&problem(), &zs, &cfg).expect("ladder run");
        let gap = run
            .iter()
            .zip(reference.iter())
            .map(|((y, _), (want, _))| (y - want).norm() / want.norm().max(1e-30))
            .fold(0.0f64, f64::max);
        println!("1e-{exp:<4}    {gap:.6e}");
    }

    println!("\nfixed-step runs to z = -1:");
    let want = reference.last().unwrap().0;
    let mut last_err = f64::NAN;
    for n in [40usize, 80, 160, 320] {
        let (y, _) = solve_fixed_step(&problem(), -1.0, n);
        let err = (y - want).norm() / want.norm();
        let order = if last_err.is_finite() {
            (last_err / err).log2()
        } else {
            f64::NAN
        };
        println!("  n = {n:>4}: err = {err:.3e}   observed order = {order:.2}");
        last_err = err;
    }

    // The defect differentiates the samples with five-point stencils, so it
    // needs a fine sample spacing to sit well below the solution scale.
    let dense: Vec<f64> = (0..=400).map(|i| -5.0 + 4.0 * i as f64 / 400.0).collect();
    let run = solve(&problem(), &dense, &tight).expect("dense run");
    let samples: Vec<(f64, C64)> =
        dense.iter().zip(run.iter()).map(|(&z, &(y, _))| (z, y)).collect();
    let defect = residual(&problem(), &samples).expect("residual");
    println!("\nnormalized equation defect of the dense samples: {defect:.3e}");
}
