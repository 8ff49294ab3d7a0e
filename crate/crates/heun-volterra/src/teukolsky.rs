//! Kerr radial perturbations reduced to a confluent-class evaluation.
//!
//! The radial operator
//!
//! ```text
//!   Delta R'' + (s+1) Delta' R' + [ (K^2 - 2is(r - M)K)/Delta + 4is omega r - lambda ] R
//! ```
//!
//! with Delta = r^2 - 2Mr + a^2, K = (r^2 + a^2) omega - a m and
//! lambda = A_lm + a^2 omega^2 - 2 a m omega, becomes a confluent-class
//! equation for H after the substitution
//!
//! ```text
//!   R = (r - r_plus)^xi (r - r_minus)^eta e^{zeta r} H(z),
//!   z = (r - r_minus)/(r_plus - r_minus),
//! ```
//!
//! for any of the eight sign choices of (zeta, xi, eta). The exterior
//! r > r_plus maps to z > 1, one admissible interval of the confluent
//! class, so a single evaluation base point covers it.

use num_complex::Complex64;

use crate::heun::{
    self, EngineConfig, HeunClass, HeunError, HeunParams, InitialData, Method,
};
use crate::oracle;
use crate::util;
use crate::C64;

pub use crate::special::{exp_integral, SpecialError};

const I: C64 = Complex64::new(0.0, 1.0);

/// Physical inputs. The angular constant is supplied, never solved for:
/// separation eigenvalue searches are out of scope.
#[derive(Clone, Copy, Debug)]
pub struct TeukolskyInput {
    /// Black-hole mass in geometric units, > 0.
    pub mass: f64,
    /// Angular momentum per unit mass, |a| < mass.
    pub a: f64,
    /// Spin weight; twice the value must be an integer in [-4, 4].
    pub s: f64,
    /// Azimuthal number.
    pub m: i32,
    /// Mode frequency, nonzero.
    pub omega: C64,
    /// Angular separation constant A_lm.
    pub a_lm: C64,
}

/// One of the eight sign assignments for (zeta, xi, eta).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BranchChoice {
    pub sign_zeta: i8,
    pub sign_xi: i8,
    pub sign_eta: i8,
}

impl BranchChoice {
    /// Bit 2 = zeta, bit 1 = xi, bit 0 = eta; set bit means "+".
    pub fn from_index(idx: u8) -> Result<BranchChoice, TeukolskyError> {
        if idx > 7 {
            return Err(TeukolskyError::BadBranch(idx));
        }
        let sgn = |b: bool| if b { 1 } else { -1 };
        Ok(BranchChoice {
            sign_zeta: sgn(idx & 4 != 0),
            sign_xi: sgn(idx & 2 != 0),
            sign_eta: sgn(idx & 1 != 0),
        })
    }

    pub fn index(&self) -> u8 {
        let bit = |s: i8| u8::from(s > 0);
        bit(self.sign_zeta) * 4 + bit(self.sign_xi) * 2 + bit(self.sign_eta)
    }

    pub fn all() -> [BranchChoice; 8] {
        core::array::from_fn(|i| BranchChoice::from_index(i as u8).unwrap())
    }
}

impl Default for BranchChoice {
    fn default() -> Self {
        BranchChoice { sign_zeta: 1, sign_xi: 1, sign_eta: 1 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TeukolskyError {
    #[error("mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error("|a| = {a} must be strictly below mass = {mass} (subextremal)")]
    ExtremalBlackHole { a: f64, mass: f64 },
    #[error("zero frequency: the alpha parameter's i*omega/zeta term is 0/0")]
    ZeroFrequency,
    #[error("spin weight {0} is not a half-integer in [-2, 2]")]
    BadSpin(f64),
    #[error("branch index {0} out of range 0..=7")]
    BadBranch(u8),
    #[error("z = {z} is outside the exterior domain ]1, +inf[")]
    OutsideDomain { z: f64 },
    #[error("need at least 5 samples for the residual stencil")]
    TooFewSamples,
    #[error(transparent)]
    Heun(#[from] HeunError),
}

/// Horizon radii and the frequency combinations entering the exponents.
#[derive(Clone, Copy, Debug)]
pub struct HorizonData {
    pub r_plus: f64,
    pub r_minus: f64,
    pub sigma_plus: C64,
    pub sigma_minus: C64,
}

/// Complete reduction data: substitution exponents, the confluent-class
/// parameter block and the coordinate map.
#[derive(Clone, Copy, Debug)]
pub struct HeunReduction {
    pub input: TeukolskyInput,
    pub branch: BranchChoice,
    pub horizon: HorizonData,
    /// Dimensionless radii r_bar = r/M and frequency omega_bar = M omega.
    pub rbar_plus: f64,
    pub rbar_minus: f64,
    pub omega_bar: C64,
    /// Substitution exponents; zeta_bar = +/- i omega_bar is dimensionless,
    /// the physical exponential uses zeta = zeta_bar / M.
    pub zeta_bar: C64,
    pub xi: C64,
    pub eta: C64,
    /// Confluent-class parameters.
    pub p: C64,
    pub alpha: C64,
    pub gamma: C64,
    pub delta: C64,
    pub sigma: C64,
}

fn validate(input: &TeukolskyInput) -> Result<(), TeukolskyError> {
    if !(input.mass.is_finite() && input.mass > 0.0) {
        return Err(TeukolskyError::BadMass(input.mass));
    }
    if !(input.a.is_finite() && input.a.abs() < input.mass) {
        return Err(TeukolskyError::ExtremalBlackHole { a: input.a, mass: input.mass });
    }
    let two_s = 2.0 * input.s;
    if !(two_s.is_finite() && (two_s - two_s.round()).abs() < 1e-9 && two_s.abs() <= 4.0 + 1e-9) {
        return Err(TeukolskyError::BadSpin(input.s));
    }
    if input.omega.norm() == 0.0 || !input.omega.is_finite() {
        return Err(TeukolskyError::ZeroFrequency);
    }
    Ok(())
}

pub fn reduce(
    input: &TeukolskyInput,
    branch: BranchChoice,
) -> Result<HeunReduction, TeukolskyError> {
    validate(input)?;
    let mass = input.mass;
    let abar = input.a / mass;
    let ob = mass * input.omega;
    let s = input.s;
    let mf = input.m as f64;

    let root = (1.0 - abar * abar).sqrt();
    let rbp = 1.0 + root;
    let rbm = 1.0 - root;
    let dr = rbp - rbm;
    let sigma_plus = (2.0 * ob * rbp - mf * abar) / dr;
    let sigma_minus = (2.0 * ob * rbm - mf * abar) / dr;

    let zeta_bar = f64::from(branch.sign_zeta) * I * ob;
    let xi = (-s + f64::from(branch.sign_xi) * (s + 2.0 * I * sigma_plus)) / 2.0;
    let eta = (-s + f64::from(branch.sign_eta) * (s - 2.0 * I * sigma_minus)) / 2.0;

    let p = dr * zeta_bar / 2.0;
    let alpha = 1.0 + s + xi + eta - 2.0 * zeta_bar + s * I * ob / zeta_bar;
    let gamma = 1.0 + s + 2.0 * eta;
    let delta = 1.0 + s + 2.0 * xi;
    let half = (gamma + delta) / 2.0;
    let sigma = input.a_lm + abar * abar * ob * ob - 8.0 * ob * ob
        + p * (2.0 * alpha + gamma - delta)
        + (1.0 + s - half) * (s + half);

    Ok(HeunReduction {
        input: *input,
        branch,
        horizon: HorizonData {
            r_plus: mass * rbp,
            r_minus: mass * rbm,
            sigma_plus,
            sigma_minus,
        },
        rbar_plus: rbp,
        rbar_minus: rbm,
        omega_bar: ob,
        zeta_bar,
        xi,
        eta,
        p,
        alpha,
        gamma,
        delta,
        sigma,
    })
}

impl HeunReduction {
    pub fn z_of_r(&self, r: f64) -> f64 {
        (r - self.horizon.r_minus) / (self.horizon.r_plus - self.horizon.r_minus)
    }

    pub fn r_of_z(&self, z: f64) -> f64 {
        self.horizon.r_minus + z * (self.horizon.r_plus - self.horizon.r_minus)
    }

    /// Parameters of the confluent-class equation satisfied by H(z).
    pub fn che_params(&self) -> HeunParams {
        HeunParams::Confluent {
            gamma: self.gamma,
            delta: self.delta,
            epsilon: 4.0 * self.p,
            alpha: 4.0 * self.alpha * self.p,
            q: self.sigma,
        }
    }

    /// (r - r_plus)^xi (r - r_minus)^eta e^{zeta r} with principal powers;
    /// both bases are positive for r > r_plus, so the powers are
    /// single-valued.
    pub fn prefactor(&self, r: f64) -> C64 {
        let zeta = self.zeta_bar / self.input.mass;
        let f1 = C64::new(r - self.horizon.r_plus, 0.0).powc(self.xi);
        let f2 = C64::new(r - self.horizon.r_minus, 0.0).powc(self.eta);
        f1 * f2 * (zeta * r).exp()
    }
}

/// Exponent sets at the three singular values of z, independent of the
/// branch choice (each branch picks one member per set).
#[derive(Clone, Copy, Debug)]
pub struct LocalBehavior {
    /// z -> 0 (inner horizon): the eta pair.
    pub at_inner: [C64; 2],
    /// z -> 1 (event horizon): the xi pair.
    pub at_event: [C64; 2],
    /// z -> infinity, algebraic branch: H ~ z^infinity_power.
    pub infinity_power: C64,
    /// z -> infinity, exponential branch: H ~ e^{rate z} z^power.
    pub infinity_exp_rate: C64,
    pub infinity_exp_power: C64,
}

pub fn local_behavior(red: &HeunReduction) -> LocalBehavior {
    let s = red.input.s;
    let sp = red.horizon.sigma_plus;
    let sm = red.horizon.sigma_minus;
    LocalBehavior {
        at_inner: [-I * sm, -s + I * sm],
        at_event: [I * sp, -s - I * sp],
        infinity_power: -red.alpha,
        infinity_exp_rate: -4.0 * red.p,
        infinity_exp_power: red.alpha - red.gamma - red.delta,
    }
}

/// One large-z model H ~ e^{exp_rate z} z^{power}.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticBranch {
    pub power: C64,
    pub exp_rate: C64,
}

#[derive(Clone, Copy, Debug)]
pub struct InfinityAsymptotics {
    pub algebraic: AsymptoticBranch,
    pub exponential: AsymptoticBranch,
    /// p = 0 collapses both to a single algebraic behavior with
    /// `degenerate_power`, valid when Re(gamma + delta) > 0. Unreachable
    /// for admissible inputs (omega != 0 keeps p != 0); reported anyway.
    pub degenerate_p: bool,
    pub degenerate_power: C64,
}

pub fn asymptotics_infinity(red: &HeunReduction) -> InfinityAsymptotics {
    InfinityAsymptotics {
        algebraic: AsymptoticBranch { power: -red.alpha, exp_rate: C64::new(0.0, 0.0) },
        exponential: AsymptoticBranch {
            power: red.alpha - red.gamma - red.delta,
            exp_rate: -4.0 * red.p,
        },
        degenerate_p: red.p.norm() == 0.0,
        degenerate_power: 1.0 - red.gamma - red.delta,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HorizonAsymptotics {
    /// Exponent of the second local solution in (z - 1).
    pub singular_power: C64,
    /// Re(delta) <= 0 makes (z-1)^{1-delta} O(1) too, so every solution
    /// tends to a constant at the event horizon.
    pub constant_only: bool,
    /// Re(delta) > 1: the second solution diverges instead.
    pub second_diverges: bool,
}

pub fn asymptotics_horizon(red: &HeunReduction) -> HorizonAsymptotics {
    HorizonAsymptotics {
        singular_power: 1.0 - red.delta,
        constant_only: red.delta.re <= 0.0,
        second_diverges: red.delta.re > 1.0,
    }
}

/// Least-squares slope of ln(mag) against ln(x). Nonpositive entries are
/// skipped; returns (intercept, slope), or None with fewer than two usable
/// points.
pub fn fitted_log_slope(xs: &[f64], mags: &[f64]) -> Option<(f64, f64)> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(xs.len());
    for (&x, &m) in xs.iter().zip(mags.iter()) {
        if x > 0.0 && m > 0.0 && m.is_finite() {
            lx.push(x.ln());
            ly.push(m.ln());
        }
    }
    if lx.len() < 2 {
        return None;
    }
    Some(util::linear_fit(&lx, &ly))
}

/// One evaluated exterior point.
#[derive(Clone, Copy, Debug)]
pub struct RadialSample {
    pub z: f64,
    pub r: f64,
    pub h: C64,
    pub big_r: C64,
    pub err_est: f64,
}

/// Evaluate H on z > 1 through the confluent-class machinery and assemble
/// R = prefactor * H at the corresponding radii.
pub fn evaluate_radial(
    red: &HeunReduction,
    conditions: &InitialData,
    zs: &[f64],
    method: Method,
    cfg: &EngineConfig,
) -> Result<Vec<RadialSample>, TeukolskyError> {
    if !(conditions.z0 > 1.0) {
        return Err(TeukolskyError::OutsideDomain { z: conditions.z0 });
    }
    if let Some(&bad) = zs.iter().find(|&&z| !(z > 1.0)) {
        return Err(TeukolskyError::OutsideDomain { z: bad });
    }
    let params = red.che_params();
    let points =
        heun::evaluate(HeunClass::Confluent, &params, conditions, zs, method, cfg)?;
    Ok(points
        .into_iter()
        .map(|pt| {
            let r = red.r_of_z(pt.z);
            let big_r = red.prefactor(r) * pt.h;
            RadialSample { z: pt.z, r, h: pt.h, big_r, err_est: pt.err_est }
        })
        .collect())
}

/// Normalized defect of candidate samples (r, R) against the radial
/// operator, derivatives from sliding five-point stencils: max |defect| /
/// max |Delta R''|. Zero for true solutions up to differentiation error,
/// order one for non-solutions.
pub fn radial_equation_residual(
    input: &TeukolskyInput,
    samples: &[(f64, C64)],
) -> Result<f64, TeukolskyError> {
    validate(input)?;
    let n = samples.len();
    if n < 5 {
        return Err(TeukolskyError::TooFewSamples);
    }
    let mass = input.mass;
    let a = input.a;
    let s = input.s;
    let mf = input.m as f64;
    let omega = input.omega;
    let lambda = input.a_lm + a * a * omega * omega - 2.0 * a * mf * omega;

    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..n {
        let lo = i.saturating_sub(2).min(n - 5);
        let xs: Vec<f64> = samples[lo..lo + 5].iter().map(|p| p.0).collect();
        let w = oracle::fd_weights(samples[i].0, &xs, 2);
        let mut d1 = C64::new(0.0, 0.0);
        let mut d2 = C64::new(0.0, 0.0);
        for k in 0..5 {
            d1 += w[1][k] * samples[lo + k].1;
            d2 += w[2][k] * samples[lo + k].1;
        }
        let (r, rr) = samples[i];
        let delta = r * r - 2.0 * mass * r + a * a;
        let ddelta = 2.0 * r - 2.0 * mass;
        let kk = (r * r + a * a) * omega - a * mf;
        let potential =
            (kk * kk - 2.0 * I * s * (r - mass) * kk) / delta + 4.0 * I * s * omega * r - lambda;
        let defect = delta * d2 + (s + 1.0) * ddelta * d1 + potential * rr;
        num = num.max(defect.norm());
        den = den.max((delta * d2).norm());
    }
    if den == 0.0 {
        den = 1.0;
    }
    Ok(num / den)
}
