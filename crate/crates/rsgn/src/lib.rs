//! Randomised subspace Gauss-Newton (R-SGN) for nonlinear least-squares.
//!
//! R-SGN minimises `f(x) = ½‖r(x)‖²` by drawing a random sketching matrix
//! `S_k ∈ R^{l×d}` each iteration, forming the reduced Jacobian
//! `J_S(x_k) = J(x_k)Sᵀ_k` from just `l` Jacobian actions, and approximately
//! minimising the reduced Gauss-Newton model over the `l`-dimensional
//! subspace. Steps are globalised either by a trust region or by quadratic
//! regularization. With a sampling sketch the method becomes block-coordinate
//! Gauss-Newton; with `l = d` and the identity sketch it reduces to the
//! classical Gauss-Newton trust-region method.
//!
//! The crate has four layers:
//!
//! * [`sketch`] — Gaussian / s-hashing / sampling / identity sketching
//!   operators with embedding diagnostics;
//! * [`problems`] — the matrix-free nonlinear least-squares abstraction,
//!   concrete problem builders (logistic regression, linear, classic
//!   nonconvex test functions) and dataset loaders;
//! * [`subproblem`] + [`solver`] — the reduced trust-region / regularized
//!   model solves and the outer iterations;
//! * [`harness`] — a reproducible experiment driver producing CSV
//!   convergence traces and JSON summaries.
//!
//! Batch kernels (residual sweeps, Jacobian column extraction, Monte Carlo
//! embedding trials, experiment cells) run on rayon when the default
//! `parallel` feature is enabled and fall back to sequential loops when it
//! is not.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod sketch;
pub mod solver;
pub mod subproblem;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used everywhere randomness is needed.
///
/// All sketch draws and synthetic data generation go through this so that
/// identical seeds reproduce identical runs bit-for-bit.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
