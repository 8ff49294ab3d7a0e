//! First-order companion system in the shifted state w = (H, H' - H).
//!
//! The scalar equation H'' - B1 H' - B2 H = 0 becomes w' = M w with
//!
//! ```text
//!     M(z) = [ 1        1     ]          g = B1 + B2 - 1
//!            [ g     B1 - 1   ]
//! ```
//!
//! The fundamental matrix U(z, z0), U(z0, z0) = Id, packages both kernel
//! kinds at once: its diagonal carries the values K1 and K2 take on their
//! own diagonals (1 and B1 - 1), and the first row reconstructs H from
//! initial data as H = H0 U11 + (H0' - H0) U12.

use crate::heun::{coefficients, CoefficientFn, HeunClass, HeunError, HeunParams};
use crate::oracle::{self, OdeProblem, OracleError, SolverConfig};
use crate::C64;

/// Entries of M as callables so the matrix can be sampled anywhere in the
/// admissible interval.
pub struct CompanionMatrix {
    b1: CoefficientFn,
    b2: CoefficientFn,
}

impl CompanionMatrix {
    /// M evaluated entrywise; row-major 2x2.
    pub fn eval(&self, z: f64) -> [[C64; 2]; 2] {
        let one = C64::new(1.0, 0.0);
        let b1 = (self.b1)(z);
        let b2 = (self.b2)(z);
        [[one, one], [b1 + b2 - 1.0, b1 - 1.0]]
    }

    /// tr M = B1; by Liouville's formula det U(z) = exp(int_{z0}^{z} B1).
    pub fn trace(&self, z: f64) -> C64 {
        (self.b1)(z)
    }

    pub fn b1(&self, z: f64) -> C64 {
        (self.b1)(z)
    }

    pub fn b2(&self, z: f64) -> C64 {
        (self.b2)(z)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompanionError {
    #[error(transparent)]
    Heun(#[from] HeunError),
    #[error("fundamental-matrix oracle failed: {0}")]
    Oracle(#[from] OracleError),
}

pub fn build_companion(
    class: HeunClass,
    params: &HeunParams,
) -> Result<CompanionMatrix, HeunError> {
    let coef = coefficients(class, params)?;
    Ok(CompanionMatrix { b1: coef.b1, b2: coef.b2 })
}

/// Fundamental matrix samples U(zs[i], z0) in the (H, H' - H) state.
pub struct FundamentalMatrix {
    pub z0: f64,
    pub zs: Vec<f64>,
    /// Row-major entries per query point.
    pub u: Vec<[[C64; 2]; 2]>,
}

impl FundamentalMatrix {
    pub fn det(&self, i: usize) -> C64 {
        let m = &self.u[i];
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// H(zs[i]) for the scalar problem with data (H0, H0') at z0.
    pub fn reconstruct(&self, h0: C64, dh0: C64) -> Vec<C64> {
        self.u.iter().map(|m| h0 * m[0][0] + (dh0 - h0) * m[0][1]).collect()
    }

    /// Propagate an arbitrary shifted state w0 = (H0, H0' - H0).
    pub fn apply(&self, i: usize, w0: [C64; 2]) -> [C64; 2] {
        let m = &self.u[i];
        [
            m[0][0] * w0[0] + m[0][1] * w0[1],
            m[1][0] * w0[0] + m[1][1] * w0[1],
        ]
    }
}

/// Column-by-column ordered exponential: each column of U solves the scalar
/// equation with unit-vector initial state, integrated by the adaptive ODE
/// oracle. Query points may sit on either side of z0 in any order.
pub fn ordered_exponential_oracle(
    class: HeunClass,
    params: &HeunParams,
    z0: f64,
    zs: &[f64],
    cfg: &SolverConfig,
) -> Result<FundamentalMatrix, CompanionError> {
    let coef = coefficients(class, params)?;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut u = vec![[[zero; 2]; 2]; zs.len()];

    let mut right: Vec<(usize, f64)> =
        zs.iter().copied().enumerate().filter(|&(_, z)| z >= z0).collect();
    let mut left: Vec<(usize, f64)> =
        zs.iter().copied().enumerate().filter(|&(_, z)| z < z0).collect();
    right.sort_by(|a, b| a.1.total_cmp(&b.1));
    left.sort_by(|a, b| b.1.total_cmp(&a.1));

    // Column 0: scalar data (H, H') = (1, 1) gives state (1, 0).
    // Column 1: scalar data (H, H') = (0, 1) gives state (0, 1).
    for (col, (y0, dy0)) in [(one, one), (zero, one)].into_iter().enumerate() {
        for batch in [&right, &left] {
            if batch.is_empty() {
                continue;
            }
            let b1 = coef.b1.clone();
            let b2 = coef.b2.clone();
            let problem = OdeProblem::new(
                Box::new(move |z| b1(z)),
                Box::new(move |z| b2(z)),
                z0,
                y0,
                dy0,
            );
            let pts: Vec<f64> = batch.iter().map(|&(_, z)| z).collect();
            let sol = oracle::solve(&problem, &pts, cfg)?;
            for (&(orig, _), (y, dy)) in batch.iter().zip(sol.iter()) {
                u[orig][0][col] = *y;
                u[orig][1][col] = dy - y;
            }
        }
    }
    Ok(FundamentalMatrix { z0, zs: zs.to_vec(), u })
}
