//! Gamma function and the generalized exponential integral E_nu, used as
//! closed-form cross-checks for kernel integrals and asymptotics.

use crate::C64;

const EULER_MASCHERONI: f64 = 0.577215664901532860606512090082;

// Lanczos approximation, g = 7, 9 terms.
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma function for complex argument (Lanczos, reflection for Re z < 1/2).
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // Reflection formula; sin(pi z) handles the poles at 0, -1, -2, ...
        let pi = std::f64::consts::PI;
        return pi / ((pi * z).sin() * gamma(C64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    let two_pi = 2.0 * std::f64::consts::PI;
    two_pi.sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

#[derive(Debug, thiserror::Error)]
pub enum SpecialError {
    #[error("E_nu(x) has a pole at x = 0")]
    PoleAtZero,
    #[error("E_nu not supported for nu = {nu}, x = {x} (need |x| small or Re x > 0)")]
    OutsideSupportedDomain { nu: C64, x: C64 },
}

/// Generalized exponential integral E_nu(x) = int_1^inf e^{-xt} t^{-nu} dt,
/// analytically continued in both parameters.
///
/// Supported domain: any x != 0 for nonpositive integer nu (closed form);
/// |x| <= 1.2 for the power series; Re x > 0 for the continued fraction.
/// Orders within 1e-8 of an integer are snapped to it, since the series'
/// Gamma(1 - nu) factor blows up there anyway.
pub fn exp_integral(nu: C64, x: C64) -> Result<C64, SpecialError> {
    if x.norm() == 0.0 {
        return Err(SpecialError::PoleAtZero);
    }
    let nearest = nu.re.round();
    let is_integer = (nu.re - nearest).abs() <= 1e-8 && nu.im.abs() <= 1e-8;
    if is_integer && nearest <= 0.0 {
        return Ok(elementary_nonpositive(-nearest as usize, x));
    }
    if x.norm() <= 1.2 {
        return Ok(if is_integer {
            log_series_positive_integer(nearest as usize, x)
        } else {
            fractional_series(nu, x)
        });
    }
    if x.re > 0.0 {
        return Ok(continued_fraction(nu, x));
    }
    Err(SpecialError::OutsideSupportedDomain { nu, x })
}

/// E_{-m}(x) = (m!/x^{m+1}) e^{-x} sum_{k=0}^m x^k/k!, entire in x except 0.
fn elementary_nonpositive(m: usize, x: C64) -> C64 {
    let mut sum = C64::new(1.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    let mut factorial = 1.0;
    for k in 1..=m {
        term *= x / k as f64;
        sum += term;
        factorial *= k as f64;
    }
    factorial * x.powi(-(m as i32 + 1)) * (-x).exp() * sum
}

/// Power series with the logarithmic term, for integer n >= 1 and small |x|.
fn log_series_positive_integer(n: usize, x: C64) -> C64 {
    let n1 = n - 1;
    let mut psi = -EULER_MASCHERONI;
    for i in 1..=n1 {
        psi += 1.0 / i as f64;
    }
    // (-x)^{n-1}/(n-1)! (psi - ln x)
    let mut lead_coef = C64::new(1.0, 0.0);
    for k in 1..=n1 {
        lead_coef *= -x / k as f64;
    }
    let mut value = lead_coef * (psi - x.ln());
    // - sum_{k != n-1} (-x)^k / ((k - n + 1) k!)
    let mut term = C64::new(1.0, 0.0);
    for k in 0..500 {
        if k > 0 {
            term *= -x / k as f64;
        }
        if k != n1 {
            let contrib = term / (k as f64 - n1 as f64);
            value -= contrib;
            if k > 4 && contrib.norm() < 1e-18 * value.norm().max(1e-300) {
                break;
            }
        }
    }
    value
}

/// E_nu(x) = Gamma(1-nu) x^{nu-1} - sum_k (-x)^k / (k! (1 - nu + k)).
fn fractional_series(nu: C64, x: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let mut value = gamma(one - nu) * x.powc(nu - one);
    let mut term = C64::new(1.0, 0.0);
    for k in 0..500 {
        if k > 0 {
            term *= -x / k as f64;
        }
        let contrib = term / (one - nu + k as f64);
        value -= contrib;
        if k > 4 && contrib.norm() < 1e-18 * value.norm().max(1e-300) {
            break;
        }
    }
    value
}

/// Modified Lentz continued fraction, stable for Re x > 0.
fn continued_fraction(nu: C64, x: C64) -> C64 {
    let tiny = 1e-290;
    let mut b = x + nu;
    let mut c = C64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..400 {
        let a = -(i as f64) * (nu + (i - 1) as f64);
        b += 2.0;
        d = (a * d + b).inv();
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}
