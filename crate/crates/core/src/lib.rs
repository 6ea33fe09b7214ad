//! Sparse phase retrieval by smoothed amplitude flow.
//!
//! Recovers a `k`-sparse signal `x` (real or complex) from phaseless
//! amplitudes `q_i = |a_iᴴ x|` by gradient descent on the smoothed loss
//!
//! ```text
//! g(z, μ) = (1/m) Σ_i (sqrt(|a_iᴴ z|² + μ²) − q_i)²
//! ```
//!
//! with a hard-thresholding projection after every step and a smoothing
//! parameter `μ` that shrinks geometrically whenever the gradient becomes
//! small relative to it. Initialization is a support-restricted weighted
//! spectral estimate.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats, the
//! Monte-Carlo harness and the command line live in the `sprsf` crate.
//!
//! ```
//! use sprsf_core::{model, rng, solver::{self, SolverConfig}};
//!
//! let mut r = rng::seeded_rng(7);
//! let x = model::make_signal::<f64, _>(32, 3, &mut r).unwrap();
//! let ens = model::measure(&x, 256, &mut r, model::NoiseSpec::noiseless()).unwrap();
//! let cfg = SolverConfig { k_hat: 3, stop_tol: 1e-10, ..SolverConfig::default() };
//! let out = solver::solve(&ens, &cfg, Some(&x)).unwrap();
//! assert!(out.final_rel_err.unwrap() < 1e-5);
//! ```
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod smoothing;
pub mod solver;

pub use error::{Error, Result};
pub use numerics::random as rng;
pub use scalar::{FieldMode, Scalar};

pub use num_complex::Complex64;
