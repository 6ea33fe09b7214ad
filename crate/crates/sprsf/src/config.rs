//! Flat `key = value` solver configuration.
//!
//! ```text
//! # comments start with '#'
//! tau = 0.3
//! gamma = 0.9
//! gamma1 = 0.5
//! mu0 = 30
//! T = 1000
//! k_hat = 10
//! i0_fraction = 3/13
//! ```
//!
//! Recognized keys: `tau`, `gamma`, `gamma1`, `mu0`, `T` (alias
//! `max_iters`), `k_hat`, `i0_fraction`, `init_weight_exponent`,
//! `stop_tol`, `power_iters`, `power_tol`, `power_seed`.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sprsf_core::solver::SolverConfig;

use crate::error::{Error, Result};

/// Applies one `key = value` assignment to `cfg`.
pub fn apply(cfg: &mut SolverConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
    where
        T::Err: Display,
    {
        value
            .parse()
            .map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))
    }
    match key {
        "tau" => cfg.tau = parse(key, value)?,
        "gamma" => cfg.gamma = parse(key, value)?,
        "gamma1" => cfg.gamma1 = parse(key, value)?,
        "mu0" => cfg.mu0 = parse(key, value)?,
        "T" | "max_iters" => cfg.max_iters = parse(key, value)?,
        "k_hat" => cfg.k_hat = parse(key, value)?,
        "i0_fraction" => cfg.i0_fraction = parse(key, value)?,
        "init_weight_exponent" => cfg.init_weight_exponent = parse(key, value)?,
        "stop_tol" => cfg.stop_tol = parse(key, value)?,
        "power_iters" => cfg.power_iters = parse(key, value)?,
        "power_tol" => cfg.power_tol = parse(key, value)?,
        "power_seed" => cfg.power_seed = parse(key, value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

pub fn parse_str(text: &str, base: SolverConfig, path: &Path) -> Result<SolverConfig> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        apply(&mut cfg, key.trim(), value.trim()).map_err(err)?;
    }
    Ok(cfg)
}

pub fn load(path: &Path, base: SolverConfig) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_str(&text, base, path)
}

/// Renders `cfg` in the same format [`parse_str`] reads.
pub fn render(cfg: &SolverConfig) -> String {
    format!(
        "tau = {}\ngamma = {}\ngamma1 = {}\nmu0 = {}\nT = {}\nk_hat = {}\ni0_fraction = {}\n\
         init_weight_exponent = {}\nstop_tol = {}\npower_iters = {}\npower_tol = {}\npower_seed = {}\n",
        cfg.tau,
        cfg.gamma,
        cfg.gamma1,
        cfg.mu0,
        cfg.max_iters,
        cfg.k_hat,
        cfg.i0_fraction,
        cfg.init_weight_exponent,
        cfg.stop_tol,
        cfg.power_iters,
        cfg.power_tol,
        cfg.power_seed,
    )
}
