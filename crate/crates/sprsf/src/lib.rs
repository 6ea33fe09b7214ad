//! Experiment harness and file formats around [`sprsf_core`].
//!
//! * [`harness`]: seeded Monte-Carlo sweeps (success rate versus `m/n`,
//!   assumed sparsity, noise level) and reconstruction dumps.
//! * [`format`]: the binary problem file, CSV tables and JSON-lines rows.
//! * [`config`]: flat `key = value` solver configuration files.
//! * [`selftest`]: a quick invariant suite runnable from the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod format;
pub mod harness;
pub mod selftest;

pub use error::{Error, Result};
pub use sprsf_core as core;
