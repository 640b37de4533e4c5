//! Solver and certification library for linear parabolic equations posed on a
//! compact star-shaped network with a dynamic Kirchhoff condition at the
//! junction vertex.
//!
//! # Problem class
//!
//! The network is the metric graph obtained by gluing `I >= 2` copies of the
//! segment `[0, R]` at their common origin (the junction). On each ray `i`
//! the unknown `u_i(t, x, l)` solves a linear parabolic equation
//!
//! ```text
//! d_t u_i - a_i(t,x,l) d_xx u_i + b_i(t,x,l) d_x u_i + c_i(t,x,l) u_i = f_i(t,x,l)
//! ```
//!
//! on `(0,T) x (0,R)`, for every value of an auxiliary level variable
//! `l in [0, K]`. The rays are coupled through a single junction trace
//! `u(t, 0, l)` (continuity is structural in this crate: the junction value
//! is stored exactly once) which evolves in the level variable through a
//! dynamic Kirchhoff relation
//!
//! ```text
//! d_l u(t,0,l) + sum_i alpha_i(t,l) d_x u_i(t,0,l) - r(t,l) u(t,0,l) = phi(t,l),
//! ```
//!
//! together with a homogeneous Neumann condition `d_x u_i(t,R,l) = 0` at the
//! outer ends, a Dirichlet plane `u_i(t,x,K) = psi_i(t,x)` at the top level,
//! and initial data `u_i(0,x,l) = g_i(x,l)`.
//!
//! # Method
//!
//! Everything reduces to coupled scalar elliptic two-point problems with a
//! shared junction unknown:
//!
//! * [`elliptic`] assembles and solves one implicit step: `I` tridiagonal
//!   blocks joined by one Robin–Kirchhoff junction row (an arrow-banded
//!   system, solved directly in `O(I * n_x)`).
//! * [`rothe`] marches a classical-junction parabolic problem in time by
//!   iterating elliptic steps (Rothe semi-discretization).
//! * [`local_time`] performs the backward induction over levels `l`: each
//!   level is a classical parabolic problem whose Robin data couple it to the
//!   level above, with per-level compatibility constants `beta_p` keeping the
//!   discrete data compatible at the parabolic corner.
//! * [`certificates`] evaluates the explicit a priori constants attached to
//!   the schemes and certifies observed discrete norms against them.
//! * [`verification`] provides manufactured-solution oracles, comparison
//!   (monotonicity) tests, convergence-order estimation, and an interpolation
//!   inequality check for Hoelder quotients.
//!
//! Discrete comparison principles are preserved exactly by the `upwind`
//! scheme (the assembled matrices are M-matrices above an explicit step-rate
//! threshold); the `centered` scheme trades that for second-order spatial
//! accuracy.

pub mod certificates;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod local_time;
pub mod network;
pub mod problem;
pub mod rothe;
pub mod verification;

pub use error::{Error, Result};
