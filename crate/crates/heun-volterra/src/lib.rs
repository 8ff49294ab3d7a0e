//! Solutions of the five Heun equation classes through Volterra integral
//! equations of the second kind with elementary (exponential times rational)
//! kernels.
//!
//! The canonical form used throughout is
//!
//! ```text
//! y''(z) - B1(z) y'(z) - B2(z) y(z) = 0
//! ```
//!
//! on a real interval free of singular points. Two scalar kernels `K1`, `K2`
//! built from `B1`, `B2` generate resolvents `G1`, `G2` (Neumann series or a
//! direct second-kind solve); the solution with data `y(z0) = h0`,
//! `y'(z0) = dh0` is reconstructed as
//!
//! ```text
//! y(z) = h0 (1 + int G1) + (dh0 - h0)(e^{z-z0} - 1 + int (e^{z-zeta}-1) G2)
//! ```
//!
//! An independent adaptive Runge-Kutta integrator ([`oracle`]) provides ground
//! truth, and [`teukolsky`] maps the Kerr radial wave equation onto the
//! confluent class.

pub mod cli;
pub mod companion;
pub mod heun;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod teukolsky;
pub mod util;
pub mod volterra;

pub use heun::{HeunClass, HeunParams, InitialData, Method};
pub use oracle::{OdeProblem, SolverConfig};

/// Complex scalar used everywhere in this crate.
pub type C64 = num_complex::Complex64;
