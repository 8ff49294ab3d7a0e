// Series convergence for a doubly-confluent-class equation on [1, 9]. The
// irregular singular point at z = 0 slows the series: successive orders
// shrink steadily but need m in the teens for engineering accuracy, while
// the direct solve is limited only by the grid.

use heun_volterra::heun::{
    evaluate, evaluate_order_m, EngineConfig, HeunClass, HeunParams, InitialData, Method,
};
use heun_volterra::C64;

fn main() {
    let c = |re: f64, im: f64| C64::new(re, im);
    let params = HeunParams::DoublyConfluent {
        gamma: c(1.0, 0.0),
        delta: c(-2.0, 0.0),
        alpha: c(10.0, 0.0),
        q: c(-1.0, 0.0),
    };
    let init = InitialData { z0: 1.0, h0: c(0.5, 0.0), dh0: c(0.5, 0.0) };
    let cfg = EngineConfig::default();

    let zs: Vec<f64> = (0..=160).map(|i| 1.0 + 8.0 * i as f64 / 160.0).collect();
    let direct = evaluate(
        HeunClass::DoublyConfluent,
        &params,
        &init,
        &zs,
        Method::VolterraDirect,
        &cfg,
    )
    .expect("direct solve");
    let scale = direct.iter().map(|p| p.h.norm()).fold(0.0f64, f64::max);

    let orders = [6usize, 9, 12, 15, 18];
    let mut sols = Vec::new();
    for &m in &orders {
        sols.push(
            evaluate_order_m(HeunClass::DoublyConfluent, &params, &init, &zs, m, &cfg)
                .expect("series"),
        );
    }

    println!("order    sup vs direct    sup vs next order");
    for (i, &m) in orders.iter().enumerate() {
        let vs_direct = sols[i]
            .iter()
            .zip(direct.iter())
            .map(|(a, b)| (a.h - b.h).norm())
            .fold(0.0f64, f64::max)
            / scale;
        let vs_next = if i + 1 < orders.len() {
            sols[i]
                .iter()
                .zip(sols[i + 1].iter())
                .map(|(a, b)| (a.h - b.h).norm())
                .fold(0.0f64, f64::max)
                / scale
        } else {
            f64::NAN
        };
        println!("{m:>5}    {vs_direct:>12.6e}    {vs_next:>12.6e}");
    }
    println!("\nsup |H| on [1, 9]: {scale:.6e}");
}
