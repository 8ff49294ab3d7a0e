// The first-order companion system: its path-ordered fundamental matrix U,
// the Liouville identity det U = exp(int B1), and reconstruction of H from
// the first row of U against the integral-equation engine.

use heun_volterra::companion::{build_companion, ordered_exponential_oracle};
use heun_volterra::heun::{evaluate, EngineConfig, HeunClass, HeunParams, InitialData, Method};
use heun_volterra::oracle::SolverConfig;
use heun_volterra::quadrature::{integrate_adaptive, Interval, QuadConfig};
use heun_volterra::C64;

fn main() {
    let c = |re: f64, im: f64| C64::new(re, im);
    let params = HeunParams::General {
        gamma: c(2.0, 0.0),
        delta: c(7.0, 0.0),
        epsilon: c(-1.0, 0.0),
        alpha_beta: c(1.5, 0.0),
        q: c(1.0, 0.0),
        t: c(4.0, 0.0),
    };
    let z0 = 6.0;
    let zs: Vec<f64> = (0..=40).map(|i| 6.0 + 4.0 * i as f64 / 40.0).collect();

    let companion = build_companion(HeunClass::General, &params).expect("companion");
    let u = ordered_exponential_oracle(
        HeunClass::General,
        &params,
        z0,
        &zs,
        &SolverConfig::default(),
    )
    .expect("fundamental matrix");

    let qcfg = QuadConfig::default();
    let mut worst_det = 0.0f64;
    for (i, &z) in zs.iter().enumerate() {
        let want = if z == z0 {
            c(1.0, 0.0)
        } else {
            let (integral, _) =
                integrate_adaptive(|x| companion.trace(x), Interval::new(z0, z).unwrap(), &qcfg)
                    .expect("trace integral");
            integral.exp()
        };
        worst_det = worst_det.max((u.det(i) - want).norm() / want.norm());
    }
    println!("worst |det U - exp(int B1)| / |exp(int B1)|: {worst_det:.3e}");

    let init = InitialData { z0, h0: c(1.0, 0.0), dh0: c(1.0, 0.0) };
    let h_from_u = u.reconstruct(init.h0, init.dh0);
    let h_direct = evaluate(
        HeunClass::General,
        &params,
        &init,
        &zs,
        Method::VolterraDirect,
        &EngineConfig::default(),
    )
    .expect("direct solve");
    let mut worst_h = 0.0f64;
    for (a, b) in h_from_u.iter().zip(h_direct.iter()) {
        worst_h = worst_h.max((a - b.h).norm() / b.h.norm().max(1.0));
    }
    println!("worst |H_from_U - H_direct| relative gap:    {worst_h:.3e}");

    let m = companion.eval(7.0);
    println!("\ncompanion matrix at z = 7:");
    println!("  [{:+.6} {:+.6}i   {:+.6} {:+.6}i]", m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im);
    println!("  [{:+.6} {:+.6}i   {:+.6} {:+.6}i]", m[1][0].re, m[1][0].im, m[1][1].re, m[1][1].im);
}
