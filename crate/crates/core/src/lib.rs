//! Numerical core of the self-similar blowup laboratory.
//!
//! The heat equation with a focusing power nonlinearity and a defocusing
//! Hénon-type term,
//!
//! ```text
//! u_t − Δu = |u|^{p−1}u − c|x|²|u|^{2p−2}u,
//! ```
//!
//! has an explicit radial self-similar blowup solution. This crate contains
//! everything needed to study it numerically without touching the file
//! system:
//!
//! - [`model`]: parameters, the profile, the linearisation potential and the
//!   exact symmetry eigenfunctions, all with closed-form derivatives.
//! - [`spectral`]: the per-angular-momentum radial Schrödinger operators,
//!   their supersymmetric partner, and two independent eigenvalue solvers
//!   (Sturm bisection on a finite-difference matrix, and Prüfer shooting).
//! - [`ggmt`]: an upper bound on the number of negative eigenvalues in terms
//!   of an integral of the negative part of the potential.
//! - [`evolution`]: linear and nonlinear dynamics in similarity variables,
//!   the unstable-mode projection, blowup-time tuning, and a radial solver for
//!   the physical equation.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod evolution;
pub mod ggmt;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod special;
pub mod tridiag;

mod math;

pub use model::{ModelError, ModelParams};
