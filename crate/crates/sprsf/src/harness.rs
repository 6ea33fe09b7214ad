//! Seeded Monte-Carlo experiments.
//!
//! A sweep is the cartesian product of its grids (true sparsity ×
//! assumed sparsity × `m/n` × SNR), each cell run for `trials` independent
//! trials. Trial seeds depend only on `(base_seed, cell index, trial)`, so
//! results are identical for any worker count, and two sweeps differing only
//! in the algorithm see the same signals and measurements.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sprsf_core::model::{make_signal, measure, NoiseSpec, SparseSignal};
use sprsf_core::numerics::{align_phase, relative_error};
use sprsf_core::rng::{derive_seed, seeded_rng};
use sprsf_core::solver::{solve_with, Algorithm, SolverConfig};
use sprsf_core::{Complex64, FieldMode, Scalar};

use crate::error::{Error, Result};

/// Relative error below which a trial counts as a recovery.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-5;

/// Stream labels under a trial seed.
const SIGNAL_STREAM: u64 = 0;
const MEASUREMENT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum KHat {
    /// `k̂ = k` in every cell.
    Known,
    Values(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: FieldMode,
    pub n: usize,
    pub true_k: Vec<usize>,
    pub k_hat: KHat,
    pub m_over_n: Vec<f64>,
    /// `None` is the noiseless (+∞ dB) cell.
    pub snr_db: Vec<Option<f64>>,
    pub trials: usize,
    pub base_seed: u64,
    /// Solver settings; `k_hat` is overwritten per cell.
    pub solver: SolverConfig,
    pub algorithm: Algorithm,
    pub success_threshold: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            mode: FieldMode::Real,
            n: 256,
            true_k: vec![5],
            k_hat: KHat::Known,
            m_over_n: vec![3.0],
            snr_db: vec![None],
            trials: 25,
            base_seed: 2024,
            solver: SolverConfig {
                stop_tol: 1e-10,
                ..SolverConfig::default()
            },
            algorithm: Algorithm::Sprsf,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
        }
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub true_k: usize,
    pub k_hat: usize,
    pub m_over_n: f64,
    pub m: usize,
    pub snr_db: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(m.to_string()));
        if self.n == 0 {
            return bad("n must be >= 1");
        }
        if self.true_k.is_empty() || self.m_over_n.is_empty() || self.snr_db.is_empty() {
            return bad("every grid must be nonempty");
        }
        if let KHat::Values(v) = &self.k_hat {
            if v.is_empty() {
                return bad("k_hat grid must be nonempty");
            }
            if v.iter().any(|&k| k == 0 || k > self.n) {
                return bad("k_hat values must lie in [1, n]");
            }
        }
        if self.true_k.iter().any(|&k| k == 0 || k > self.n) {
            return bad("true k values must lie in [1, n]");
        }
        if self.m_over_n.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return bad("m/n values must be positive");
        }
        if self.snr_db.iter().flatten().any(|s| !s.is_finite()) {
            return bad("SNR values must be finite (use the noiseless cell for +inf)");
        }
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if !(self.success_threshold > 0.0) {
            return bad("success threshold must be > 0");
        }
        let probe = SolverConfig {
            k_hat: 1,
            ..self.solver
        };
        probe.validate(self.n)?;
        Ok(())
    }

    pub fn m_for(&self, ratio: f64) -> usize {
        ((ratio * self.n as f64).round() as usize).max(1)
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &true_k in &self.true_k {
            let k_hats = match &self.k_hat {
                KHat::Known => vec![true_k],
                KHat::Values(v) => v.clone(),
            };
            for k_hat in k_hats {
                for &m_over_n in &self.m_over_n {
                    for &snr_db in &self.snr_db {
                        cells.push(Cell {
                            index: cells.len(),
                            true_k,
                            k_hat,
                            m_over_n,
                            m: self.m_for(m_over_n),
                            snr_db,
                        });
                    }
                }
            }
        }
        cells
    }
}

pub fn trial_seed(base: u64, cell_index: usize, trial: usize) -> u64 {
    derive_seed(base, &[cell_index as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub algorithm: &'static str,
    pub mode: &'static str,
    pub n: usize,
    pub true_k: usize,
    pub k_hat: usize,
    pub m: usize,
    pub snr_db: Option<f64>,
    pub rel_err: f64,
    pub init_rel_err: f64,
    pub success: bool,
    pub iterations: usize,
    pub final_mu: f64,
    pub mu_reductions: usize,
    pub clipped: usize,
    pub diverged: bool,
    /// Informational; excluded from reproducibility guarantees.
    pub wall_secs: f64,
}

fn synthesize<S: Scalar>(
    cell: &Cell,
    n: usize,
    seed: u64,
) -> Result<(SparseSignal<S>, sprsf_core::model::MeasurementEnsemble<S>)> {
    let x = make_signal::<S, _>(n, cell.true_k, &mut seeded_rng(derive_seed(seed, &[SIGNAL_STREAM])))?;
    let ens = measure(
        &x,
        cell.m,
        &mut seeded_rng(derive_seed(seed, &[MEASUREMENT_STREAM])),
        NoiseSpec { snr_db: cell.snr_db },
    )?;
    Ok((x, ens))
}

fn run_trial_typed<S: Scalar>(cell: &Cell, trial: usize, spec: &ExperimentSpec) -> Result<TrialRecord> {
    let seed = trial_seed(spec.base_seed, cell.index, trial);
    let (x, ens) = synthesize::<S>(cell, spec.n, seed)?;
    let cfg = SolverConfig {
        k_hat: cell.k_hat,
        ..spec.solver
    };
    let start = Instant::now();
    let out = solve_with(spec.algorithm, &ens, &cfg, Some(&x))?;
    let wall_secs = start.elapsed().as_secs_f64();
    let rel_err = out.final_rel_err.unwrap_or(f64::NAN);
    Ok(TrialRecord {
        cell: cell.index,
        trial,
        seed,
        algorithm: spec.algorithm.as_str(),
        mode: spec.mode.as_str(),
        n: spec.n,
        true_k: cell.true_k,
        k_hat: cell.k_hat,
        m: cell.m,
        snr_db: cell.snr_db,
        rel_err,
        init_rel_err: out.init_rel_err.unwrap_or(f64::NAN),
        // strict: rel_err == threshold is a failure
        success: rel_err < spec.success_threshold,
        iterations: out.iterations_run,
        final_mu: out.final_mu,
        mu_reductions: out.trace.mu_reductions,
        clipped: ens.clipped,
        diverged: out.diverged,
        wall_secs,
    })
}

/// Runs one trial of one cell.
pub fn run_trial(cell: &Cell, trial: usize, spec: &ExperimentSpec) -> Result<TrialRecord> {
    match spec.mode {
        FieldMode::Real => run_trial_typed::<f64>(cell, trial, spec),
        FieldMode::Complex => run_trial_typed::<Complex64>(cell, trial, spec),
    }
}

/// Aggregate over one cell's trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: usize,
    pub algorithm: &'static str,
    pub mode: &'static str,
    pub n: usize,
    pub true_k: usize,
    pub k_hat: usize,
    pub m_over_n: f64,
    pub m: usize,
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_rel_err: f64,
    pub median_rel_err: f64,
    pub mean_iterations: f64,
    pub mean_wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<CellSummary>,
    /// Every trial, ordered by (cell, trial).
    pub trials: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn cell(&self, index: usize) -> &CellSummary {
        &self.cells[index]
    }

    pub fn trials_of(&self, cell: usize) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(move |t| t.cell == cell)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Summarizes `trials` (all from `cell`).
pub fn summarize(spec: &ExperimentSpec, cell: &Cell, trials: &[TrialRecord]) -> CellSummary {
    let count = trials.len();
    let successes = trials.iter().filter(|t| t.success).count();
    let mut errs: Vec<f64> = trials.iter().map(|t| t.rel_err).collect();
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| trials.iter().map(f).sum::<f64>() / count as f64;
    CellSummary {
        cell: cell.index,
        algorithm: spec.algorithm.as_str(),
        mode: spec.mode.as_str(),
        n: spec.n,
        true_k: cell.true_k,
        k_hat: cell.k_hat,
        m_over_n: cell.m_over_n,
        m: cell.m,
        snr_db: cell.snr_db,
        trials: count,
        successes,
        success_rate: successes as f64 / count as f64,
        mean_rel_err: mean(&|t| t.rel_err),
        median_rel_err: median(&mut errs),
        mean_iterations: mean(&|t| t.iterations as f64),
        mean_wall_secs: mean(&|t| t.wall_secs),
    }
}

/// Evaluates every cell × trial on `jobs` worker threads.
pub fn run_sweep(spec: &ExperimentSpec, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    let cells = spec.cells();
    let work: Vec<(usize, usize)> = cells
        .iter()
        .flat_map(|c| (0..spec.trials).map(move |t| (c.index, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Spec(format!("cannot start {jobs} workers: {e}")))?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        work.par_iter()
            .map(|&(c, t)| run_trial(&cells[c], t, spec))
            .collect::<Result<Vec<_>>>()
    })?;
    let summaries = cells
        .iter()
        .map(|c| {
            let lo = c.index * spec.trials;
            summarize(spec, c, &trials[lo..lo + spec.trials])
        })
        .collect();
    Ok(SweepResult {
        cells: summaries,
        trials,
    })
}

/// Mean and median relative error per SNR cell.
pub fn run_noise_curve(spec: &ExperimentSpec, jobs: usize) -> Result<SweepResult> {
    if spec.snr_db.is_empty() {
        return Err(Error::Spec("noise curve needs an SNR grid".into()));
    }
    run_sweep(spec, jobs)
}

/// Truth and estimates for one cell, estimates phase-aligned to the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub cell: Cell,
    pub seed: u64,
    pub truth: Vec<Complex64>,
    pub sprsf: Vec<Complex64>,
    pub baseline: Vec<Complex64>,
    pub sprsf_rel_err: f64,
    pub baseline_rel_err: f64,
}

fn widen<S: Scalar>(v: &[S]) -> Vec<Complex64> {
    v.iter().map(|s| Complex64::new(s.re(), s.im())).collect()
}

fn reconstruct_typed<S: Scalar>(spec: &ExperimentSpec, cell: &Cell) -> Result<Reconstruction> {
    let seed = trial_seed(spec.base_seed, cell.index, 0);
    let (x, ens) = synthesize::<S>(cell, spec.n, seed)?;
    let cfg = SolverConfig {
        k_hat: cell.k_hat,
        ..spec.solver
    };
    let mut r = reconstruct_from(&x, &ens, &cfg)?;
    r.cell = *cell;
    r.seed = seed;
    Ok(r)
}

/// Runs both algorithms on a given problem with known truth.
pub fn reconstruct_from<S: Scalar>(
    x: &SparseSignal<S>,
    ens: &sprsf_core::model::MeasurementEnsemble<S>,
    cfg: &SolverConfig,
) -> Result<Reconstruction> {
    let ours = solve_with(Algorithm::Sprsf, ens, cfg, Some(x))?;
    let base = solve_with(Algorithm::BaselineMu0, ens, cfg, Some(x))?;
    Ok(Reconstruction {
        cell: Cell {
            index: 0,
            true_k: x.sparsity(),
            k_hat: cfg.k_hat,
            m_over_n: ens.m() as f64 / ens.n() as f64,
            m: ens.m(),
            snr_db: None,
        },
        seed: 0,
        sprsf_rel_err: relative_error(&ours.z_final, &x.vector)?,
        baseline_rel_err: relative_error(&base.z_final, &x.vector)?,
        sprsf: widen(&align_phase(&ours.z_final, &x.vector)),
        baseline: widen(&align_phase(&base.z_final, &x.vector)),
        truth: widen(&x.vector),
    })
}

/// Runs both algorithms on trial 0 of a single-cell spec.
pub fn dump_reconstruction(spec: &ExperimentSpec) -> Result<Reconstruction> {
    spec.validate()?;
    let cells = spec.cells();
    if cells.len() != 1 {
        return Err(Error::Spec(format!(
            "reconstruction needs exactly one cell, got {}",
            cells.len()
        )));
    }
    match spec.mode {
        FieldMode::Real => reconstruct_typed::<f64>(spec, &cells[0]),
        FieldMode::Complex => reconstruct_typed::<Complex64>(spec, &cells[0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentSpec {
        ExperimentSpec {
            n: 24,
            true_k: vec![2],
            m_over_n: vec![4.0],
            trials: 3,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn success_is_strict() {
        let spec = ExperimentSpec {
            success_threshold: 9e-6,
            ..small()
        };
        let rec = run_trial(&spec.cells()[0], 0, &spec).unwrap();
        // a re-run with the threshold equal to the achieved error must fail
        let at = ExperimentSpec {
            success_threshold: rec.rel_err,
            ..spec.clone()
        };
        assert!(!run_trial(&at.cells()[0], 0, &at).unwrap().success);
        let above = ExperimentSpec {
            success_threshold: rec.rel_err * 1.0001 + 1e-300,
            ..spec
        };
        assert!(run_trial(&above.cells()[0], 0, &above).unwrap().success);
    }

    #[test]
    fn single_cell_sweep_wraps_run_trial() {
        let spec = ExperimentSpec { trials: 1, ..small() };
        let sweep = run_sweep(&spec, 1).unwrap();
        let mut direct = run_trial(&spec.cells()[0], 0, &spec).unwrap();
        let mut swept = sweep.trials[0].clone();
        direct.wall_secs = 0.0;
        swept.wall_secs = 0.0;
        assert_eq!(direct, swept);
        assert_eq!(sweep.cells[0].trials, 1);
    }

    #[test]
    fn cell_grid_is_cartesian() {
        let spec = ExperimentSpec {
            true_k: vec![2, 3],
            k_hat: KHat::Values(vec![4, 5, 6]),
            m_over_n: vec![1.0, 2.0],
            snr_db: vec![None, Some(20.0)],
            ..small()
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 2 * 3 * 2 * 2);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
        assert_eq!(spec.m_for(0.2), 5);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(ExperimentSpec { trials: 0, ..small() }.validate().is_err());
        assert!(ExperimentSpec {
            m_over_n: vec![],
            ..small()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            success_threshold: 0.0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            true_k: vec![25],
            ..small()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            k_hat: KHat::Values(vec![0]),
            ..small()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            snr_db: vec![Some(f64::INFINITY)],
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
