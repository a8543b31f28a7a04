//! Simulation and diffusion-limit analysis of the banker resource-allocation
//! walk in a finite-state Markovian environment.
//!
//! The model is a nearest-neighbour random walk on `{0,..,m}^d` whose step
//! distribution `p(i, y, ·)` depends on an environment state `i` (a finite
//! ergodic Markov chain) and on the rescaled position `y = position / m`.
//! The walk is reflected on the faces of the box and absorbed on the sloping
//! face `x_1 + .. + x_d >= lambda * m` (the "broken corner"), where the
//! algorithm deadlocks.
//!
//! The crate provides, side by side:
//!
//! * the discrete walk itself ([`walk`]), with deadlock-time Monte Carlo,
//! * its homogenized diffusion limit ([`homogenize`]): corrector solve,
//!   effective drift `b̄` and covariance `ā`, and the pre-limit quantities
//!   `b^(m)`, `a^(m)`, `c^(m)` with their convergence targets,
//! * the limiting reflected SDE on `[0,1]^d` ([`rsde`]), integrated with a
//!   projection (clamp) Euler scheme that tracks the boundary local times,
//!   plus the periodic-unfolding construction that reproduces the reflected
//!   law without reflection,
//! * the two-dimensional deadlock-time regime analysis ([`regimes`]):
//!   spectral classification of the covariance at the corner and Monte Carlo
//!   estimation of `E(T_lambda)` across a grid of budgets `lambda -> 2`.
//!
//! Everything is deterministic given a 64-bit seed: replicas draw from
//! counter-based streams derived from `(seed, domain, replica index)`, so
//! results are independent of the worker count.
//!
//! The `examples/` directory has one runnable program per capability; the
//! thin `bankersim` binary drives config-file experiments (see the README
//! for the config format and CSV schemas).

pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod homogenize;
pub mod kernel;
pub mod regimes;
pub mod rng;
pub mod rsde;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
