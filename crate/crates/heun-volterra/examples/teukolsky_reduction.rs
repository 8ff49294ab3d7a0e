// Reduction of the Teukolsky radial equation to confluent-class parameters
// for all eight sign branches, with the internal consistency identities
// gamma = 1 + s + 2 eta, delta = 1 + s + 2 xi, and the horizon exponent sets.

use heun_volterra::teukolsky::{local_behavior, reduce, BranchChoice, TeukolskyInput};
use heun_volterra::C64;

fn main() {
    let input = TeukolskyInput {
        mass: 1.0,
        a: 0.7,
        s: -2.0,
        m: 2,
        omega: C64::new(0.5, -0.1),
        a_lm: C64::new(4.0, 0.0),
    };

    println!(
        "M = {}, a = {}, s = {}, m = {}, omega = {:+}{:+}i, A = {:+}{:+}i\n",
        input.mass, input.a, input.s, input.m, input.omega.re, input.omega.im,
        input.a_lm.re, input.a_lm.im
    );

    let first = reduce(&input, BranchChoice::default()).expect("reduction");
    println!(
        "r+/M = {:.6}, r-/M = {:.6}, sigma+ = {:+.4}{:+.4}i, sigma- = {:+.4}{:+.4}i\n",
        first.rbar_plus,
        first.rbar_minus,
        first.horizon.sigma_plus.re,
        first.horizon.sigma_plus.im,
        first.horizon.sigma_minus.re,
        first.horizon.sigma_minus.im
    );

    println!("branch  (zeta,xi,eta)        gamma                 delta                 4p");
    for branch in BranchChoice::all() {
        let red = reduce(&input, branch).expect("reduction");

        // Parameter identities tie the exponents to the class parameters.
        let want_gamma = 1.0 + input.s + 2.0 * red.eta;
        let want_delta = 1.0 + input.s + 2.0 * red.xi;
        assert!((red.gamma - want_gamma).norm() < 1e-12);
        assert!((red.delta - want_delta).norm() < 1e-12);

        let fmt = |v: C64| format!("{:+.4}{:+.4}i", v.re, v.im);
        println!(
            "  {}     ({:+},{:+},{:+})         {:<20}  {:<20}  {}",
            branch.index(),
            branch.sign_zeta,
            branch.sign_xi,
            branch.sign_eta,
            fmt(red.gamma),
            fmt(red.delta),
            fmt(4.0 * red.p)
        );
    }

    let behavior = local_behavior(&first);
    println!("\nlocal exponents for branch {} (z -> 1 is the event horizon):", first.branch.index());
    println!(
        "  z -> 0:   {{ {:+.4}{:+.4}i, {:+.4}{:+.4}i }}",
        behavior.at_inner[0].re, behavior.at_inner[0].im,
        behavior.at_inner[1].re, behavior.at_inner[1].im
    );
    println!(
        "  z -> 1:   {{ {:+.4}{:+.4}i, {:+.4}{:+.4}i }}",
        behavior.at_event[0].re, behavior.at_event[0].im,
        behavior.at_event[1].re, behavior.at_event[1].im
    );
    println!(
        "  z -> inf: z^({:+.4}{:+.4}i)  or  e^(({:+.4}{:+.4}i) z) z^({:+.4}{:+.4}i)",
        behavior.infinity_power.re, behavior.infinity_power.im,
        behavior.infinity_exp_rate.re, behavior.infinity_exp_rate.im,
        behavior.infinity_exp_power.re, behavior.infinity_exp_power.im
    );
}
