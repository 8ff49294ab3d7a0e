// Truncated series approximants for a general-class equation on [6, 26],
// compared against the direct second-kind solve. The sup error over the
// interval drops monotonically with the truncation order.

use heun_volterra::heun::{
    evaluate, evaluate_order_m, EngineConfig, HeunClass, HeunParams, InitialData, Method,
};
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
    let init = InitialData { z0: 6.0, h0: c(1.0, 0.0), dh0: c(1.0, 0.0) };
    let cfg = EngineConfig::default();

    let zs: Vec<f64> = (0..=200).map(|i| 6.0 + 20.0 * i as f64 / 200.0).collect();
    let reference = evaluate(HeunClass::General, &params, &init, &zs, Method::VolterraDirect, &cfg)
        .expect("direct solve");

    println!("order   sup |H_m - H_direct| / sup |H_direct|");
    let scale = reference.iter().map(|p| p.h.norm()).fold(0.0f64, f64::max);
    let mut last = f64::INFINITY;
    for m in [1usize, 2, 3, 6, 9, 12, 27] {
        let approx = evaluate_order_m(HeunClass::General, &params, &init, &zs, m, &cfg)
            .expect("series evaluation");
        let sup = approx
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a.h - b.h).norm())
            .fold(0.0f64, f64::max)
            / scale;
        let mark = if sup < last { "" } else { "  <- not monotone" };
        println!("{m:>5}   {sup:>12.6e}{mark}");
        last = sup;
    }

    let far = reference.last().unwrap();
    println!("\nH(26) = {:+.12e} {:+.12e}i  (err_est {:.2e})", far.h.re, far.h.im, far.err_est);
}
