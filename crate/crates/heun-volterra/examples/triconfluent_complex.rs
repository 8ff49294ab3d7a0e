// A triconfluent-class equation with a complex accessory parameter has no
// finite singular points, so one solve covers all of [-5, 7]. Series
// approximants converge everywhere; the direct solve is the reference.

use heun_volterra::heun::{
    evaluate, evaluate_order_m, EngineConfig, HeunClass, HeunParams, InitialData, Method,
};
use heun_volterra::C64;

fn main() {
    let c = |re: f64, im: f64| C64::new(re, im);
    let params = HeunParams::Triconfluent {
        gamma: c(2.0, 0.0),
        delta: c(-1.0, 0.0),
        epsilon: c(7.0, 0.0),
        alpha: c(1.0, 0.0),
        q: c(2.0, 1.0),
    };
    let init = InitialData { z0: -5.0, h0: c(2.0, 0.0), dh0: c(2.0, 0.0) };
    let cfg = EngineConfig::default();

    let zs: Vec<f64> = (0..=120).map(|i| -5.0 + 12.0 * i as f64 / 120.0).collect();
    let direct =
        evaluate(HeunClass::Triconfluent, &params, &init, &zs, Method::VolterraDirect, &cfg)
            .expect("direct solve");
    let scale = direct.iter().map(|p| p.h.norm()).fold(0.0f64, f64::max);

    println!("     z        Re H            Im H           err_est");
    for pt in direct.iter().step_by(20) {
        println!(
            "{:>6.1}   {:>13.6e}   {:>13.6e}   {:>10.2e}",
            pt.z, pt.h.re, pt.h.im, pt.err_est
        );
    }

    println!("\norder    sup |H_m - H_direct| (absolute)");
    for m in [7usize, 10, 13] {
        let approx = evaluate_order_m(HeunClass::Triconfluent, &params, &init, &zs, m, &cfg)
            .expect("series");
        let sup = approx
            .iter()
            .zip(direct.iter())
            .map(|(a, b)| (a.h - b.h).norm())
            .fold(0.0f64, f64::max);
        println!("{m:>5}    {sup:.6e}");
    }
    println!("\nsup |H| on [-5, 7]: {scale:.6e}");
}
