//! `sprsf` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (unknown flag,
//! unparsable value), 3 invalid parameter range, 4 unreadable or malformed
//! input file, 5 selftest failure. Errors are printed to stderr as one JSON
//! object `{"error": kind, "message": …, "exit_code": code}`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sprsf::config;
use sprsf::format::{self, Problem, SolveSummary};
use sprsf::harness::{self, ExperimentSpec, KHat};
use sprsf::Error;
use sprsf_core::model::{make_signal, measure, MeasurementEnsemble, NoiseSpec, SparseSignal};
use sprsf_core::rng::{derive_seed, seeded_rng};
use sprsf_core::solver::{solve_with, Algorithm, Ratio, SolverConfig};
use sprsf_core::{Complex64, FieldMode, Scalar};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_SELFTEST: u8 = 5;

/// Sparse phase retrieval by smoothed amplitude flow with hard thresholding.
#[derive(Debug, Parser)]
#[command(name = "sprsf", version)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "SPRSF_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem, synthesized or read from a problem file.
    Solve(SolveArgs),
    /// Monte-Carlo success-rate sweep.
    Sweep(SweepArgs),
    /// Mean relative error versus SNR.
    Noise(SweepArgs),
    /// Truth, smoothed and baseline estimates of one instance as CSV.
    Reconstruct(ReconstructArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Real,
    Complex,
}

impl From<Mode> for FieldMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Real => FieldMode::Real,
            Mode::Complex => FieldMode::Complex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Sprsf,
    #[value(name = "baseline_mu0", alias = "baseline-mu0", alias = "baseline")]
    BaselineMu0,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Sprsf => Algorithm::Sprsf,
            AlgorithmArg::BaselineMu0 => Algorithm::BaselineMu0,
        }
    }
}

/// Solver knobs. Precedence: built-in defaults, then `--config`, then flags.
#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Flat `key = value` solver configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Step size tau in (0,1) [default: 0.3]
    #[arg(long)]
    tau: Option<f64>,
    /// Control variable gamma in (0,1) [default: 0.9]
    #[arg(long)]
    gamma: Option<f64>,
    /// Smoothing reduction factor gamma1 in (0,1) [default: 0.5]
    #[arg(long)]
    gamma1: Option<f64>,
    /// Initial smoothing parameter mu0 > 0 [default: 30]
    #[arg(long)]
    mu0: Option<f64>,
    /// Iteration budget T [default: 1000]
    #[arg(long, short = 'T', visible_alias = "max-iters")]
    iters: Option<usize>,
    /// Fraction of measurements used by the initializer [default: 3/13]
    #[arg(long)]
    i0_fraction: Option<Ratio>,
    /// Exponent of the initializer weights q_i^e [default: 0.5]
    #[arg(long)]
    init_weight_exponent: Option<f64>,
    /// Early-stop relative error against the truth; 0 disables
    /// [default: 0 for solve, 1e-10 for sweeps]
    #[arg(long)]
    stop_tol: Option<f64>,
    /// Power-iteration budget [default: 200]
    #[arg(long)]
    power_iters: Option<usize>,
    /// Power-iteration residual tolerance [default: 1e-8]
    #[arg(long)]
    power_tol: Option<f64>,
    /// Seed of the power-iteration start vector
    #[arg(long)]
    power_seed: Option<u64>,
}

impl SolverArgs {
    fn resolve(&self, mut cfg: SolverConfig) -> sprsf::Result<SolverConfig> {
        if let Some(path) = &self.config {
            cfg = config::load(path, cfg)?;
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(tau => tau, gamma => gamma, gamma1 => gamma1, mu0 => mu0, iters => max_iters,
             i0_fraction => i0_fraction, init_weight_exponent => init_weight_exponent,
             stop_tol => stop_tol, power_iters => power_iters, power_tol => power_tol,
             power_seed => power_seed);
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value_t = Mode::Real)]
    mode: Mode,
    /// Signal length
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// True sparsity of the synthesized signal
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Assumed sparsity [default: k, or the problem file's k]
    #[arg(long)]
    k_hat: Option<usize>,
    /// Number of measurements [default: 3n]
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Amplitude SNR in dB; noiseless when absent
    #[arg(long)]
    snr_db: Option<f64>,
    /// Read the problem from a file instead of synthesizing it
    #[arg(long)]
    input: Option<PathBuf>,
    /// Also write the synthesized problem to this file
    #[arg(long)]
    save_problem: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Sprsf)]
    algorithm: AlgorithmArg,
    /// Trace CSV, relative to --out-dir
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
    /// Final estimate CSV, relative to --out-dir
    #[arg(long, default_value = "estimate.csv")]
    estimate: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

/// `known` or a comma-separated list.
#[derive(Debug, Clone)]
struct KHatArg(KHat);

impl FromStr for KHatArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "known" {
            return Ok(KHatArg(KHat::Known));
        }
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| KHatArg(KHat::Values(v)))
    }
}

/// `inf` (noiseless) or dB.
#[derive(Debug, Clone, Copy)]
struct SnrArg(Option<f64>);

impl FromStr for SnrArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" | "none" => Ok(SnrArg(None)),
            v => v.parse().map(|d| SnrArg(Some(d))).map_err(|e| format!("`{v}`: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Known sparsity, success rate versus m/n
    Test1,
    /// Sparsity overestimated at sqrt(n), versus m/n
    Test2,
    /// Unknown sparsity, success rate versus assumed sparsity
    Test3,
    /// Success rate versus true sparsity
    Test4,
    /// Relative error versus SNR
    Test5,
    /// Iterations to a 1e-14 relative error
    Test6,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Experiment preset; explicit flags override its fields
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Use the published problem sizes (n = 1000, 100 trials)
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    n: Option<usize>,
    /// True sparsity grid, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// `known` or an assumed-sparsity grid
    #[arg(long)]
    k_hat: Option<KHatArg>,
    /// m/n grid, comma separated
    #[arg(long, value_delimiter = ',')]
    m_over_n: Option<Vec<f64>>,
    /// SNR grid in dB, comma separated; `inf` is noiseless
    #[arg(long, value_delimiter = ',')]
    snr_db: Option<Vec<SnrArg>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    /// Success threshold on the relative error [default: 1e-5]
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    jobs: Option<usize>,
    /// Summary CSV, relative to --out-dir [default: <subcommand>.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-trial JSON lines to this file
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Include wall-clock columns (not reproducible)
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long, value_enum, default_value_t = Mode::Real)]
    mode: Mode,
    /// Signal length [default: 256, paper scale 1000]
    #[arg(long)]
    n: Option<usize>,
    /// True sparsity [default: 5, paper scale 10]
    #[arg(long)]
    k: Option<usize>,
    /// Assumed sparsity [default: 40, paper scale 180]
    #[arg(long)]
    k_hat: Option<usize>,
    /// Number of measurements [default: n]
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    #[arg(long)]
    paper_scale: bool,
    /// Use this problem file (must contain the truth)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output CSV, relative to --out-dir
    #[arg(long, default_value = "reconstruction.csv")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count)
        .map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

fn preset_spec(preset: Preset, paper: bool) -> ExperimentSpec {
    let base = ExperimentSpec::default();
    let (n, trials, k) = if paper { (1000, 100, 10) } else { (256, 25, 5) };
    let sweep_m = if paper {
        grid(0.1, 3.0, 0.1)
    } else {
        vec![0.2, 0.4, 0.8, 1.5, 3.0]
    };
    let spec = ExperimentSpec {
        n,
        trials,
        true_k: vec![k],
        m_over_n: sweep_m.clone(),
        ..base
    };
    let sqrt_n = (n as f64).sqrt().round() as usize;
    match preset {
        Preset::Test1 => spec,
        Preset::Test2 => ExperimentSpec {
            k_hat: KHat::Values(vec![sqrt_n]),
            ..spec
        },
        Preset::Test3 => ExperimentSpec {
            k_hat: KHat::Values(if paper {
                (35..=180).step_by(5).collect()
            } else {
                vec![10, 20, 40]
            }),
            m_over_n: vec![if paper { 1.0 } else { 2.0 }],
            ..spec
        },
        Preset::Test4 => ExperimentSpec {
            true_k: if paper {
                (10..=100).step_by(5).collect()
            } else {
                vec![5, 10, 15, 20, 25]
            },
            m_over_n: vec![1.5],
            ..spec
        },
        Preset::Test5 => ExperimentSpec {
            snr_db: if paper {
                grid(5.0, 70.0, 5.0).into_iter().map(Some).collect()
            } else {
                vec![Some(10.0), Some(30.0), Some(50.0), Some(70.0)]
            },
            m_over_n: vec![1.5],
            trials: if paper { 100 } else { 10 },
            ..spec
        },
        Preset::Test6 => ExperimentSpec {
            k_hat: KHat::Values(vec![sqrt_n]),
            m_over_n: vec![1.0],
            solver: SolverConfig {
                stop_tol: 1e-14,
                ..spec.solver
            },
            ..spec
        },
    }
}

fn build_spec(args: &SweepArgs, default_preset: Preset) -> sprsf::Result<ExperimentSpec> {
    let mut spec = preset_spec(args.preset.unwrap_or(default_preset), args.paper_scale);
    if let Some(m) = args.mode {
        spec.mode = m.into();
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(k) = &args.k {
        spec.true_k = k.clone();
    }
    if let Some(KHatArg(k)) = &args.k_hat {
        spec.k_hat = k.clone();
    }
    if let Some(r) = &args.m_over_n {
        spec.m_over_n = r.clone();
    }
    if let Some(s) = &args.snr_db {
        spec.snr_db = s.iter().map(|s| s.0).collect();
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(a) = args.algorithm {
        spec.algorithm = a.into();
    }
    if let Some(t) = args.threshold {
        spec.success_threshold = t;
    }
    spec.solver = args.solver.resolve(spec.solver)?;
    spec.validate()?;
    Ok(spec)
}

fn in_dir(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn run_sweep_cmd(args: &SweepArgs, out_dir: &Path, noise: bool) -> sprsf::Result<()> {
    let spec = build_spec(args, if noise { Preset::Test5 } else { Preset::Test1 })?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = if noise {
        harness::run_noise_curve(&spec, jobs)?
    } else {
        harness::run_sweep(&spec, jobs)?
    };
    let default_name = if noise { "noise.csv" } else { "sweep.csv" };
    let out = in_dir(out_dir, args.out.as_deref().unwrap_or(Path::new(default_name)));
    format::save_sweep_csv(&out, &result, args.timing)?;
    if let Some(j) = &args.jsonl {
        format::save_trials_jsonl(&in_dir(out_dir, j), &result.trials, args.timing)?;
    }
    format::write_sweep_csv(std::io::stdout().lock(), &result, args.timing)?;
    Ok(())
}

fn solve_problem<S: Scalar>(
    ens: &MeasurementEnsemble<S>,
    truth: Option<&SparseSignal<S>>,
    k_hat: usize,
    args: &SolveArgs,
    out_dir: &Path,
) -> sprsf::Result<()> {
    let cfg = args.solver.resolve(SolverConfig {
        k_hat,
        ..SolverConfig::default()
    })?;
    cfg.validate(ens.n())?;
    let out = solve_with(args.algorithm.into(), ens, &cfg, truth)?;
    format::save_trace_csv(&in_dir(out_dir, &args.trace), &out.trace)?;
    format::save_vector_csv(&in_dir(out_dir, &args.estimate), &out.z_final)?;
    let summary = SolveSummary {
        algorithm: out.algorithm.as_str(),
        mode: S::MODE.as_str(),
        m: ens.m(),
        n: ens.n(),
        k_hat,
        iterations: out.iterations_run,
        final_mu: out.final_mu,
        final_grad_norm: out.final_grad_norm,
        rel_err: out.final_rel_err,
        init_rel_err: out.init_rel_err,
        converged_early: out.converged_early,
        diverged: out.diverged,
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn synthesize_and_solve<S: Scalar>(args: &SolveArgs, out_dir: &Path) -> sprsf::Result<()> {
    let m = args.m.unwrap_or(3 * args.n);
    let x = make_signal::<S, _>(args.n, args.k, &mut seeded_rng(derive_seed(args.seed, &[0])))?;
    let ens = measure(
        &x,
        m,
        &mut seeded_rng(derive_seed(args.seed, &[1])),
        NoiseSpec { snr_db: args.snr_db },
    )?;
    if let Some(p) = &args.save_problem {
        format::write_problem(&in_dir(out_dir, p), &ens, Some(&x))?;
    }
    solve_problem(&ens, Some(&x), args.k_hat.unwrap_or(args.k), args, out_dir)
}

fn run_solve(args: &SolveArgs, out_dir: &Path) -> sprsf::Result<()> {
    if let Some(path) = &args.input {
        let problem = format::read_problem(path)?;
        let missing = || Error::Spec("--k-hat is required when the problem file has no truth".into());
        return match problem {
            Problem::Real(p) => {
                let k = args
                    .k_hat
                    .or(p.truth.as_ref().map(|x| x.sparsity()))
                    .ok_or_else(missing)?;
                solve_problem(&p.ensemble, p.truth.as_ref(), k, args, out_dir)
            }
            Problem::Complex(p) => {
                let k = args
                    .k_hat
                    .or(p.truth.as_ref().map(|x| x.sparsity()))
                    .ok_or_else(missing)?;
                solve_problem(&p.ensemble, p.truth.as_ref(), k, args, out_dir)
            }
        };
    }
    match FieldMode::from(args.mode) {
        FieldMode::Real => synthesize_and_solve::<f64>(args, out_dir),
        FieldMode::Complex => synthesize_and_solve::<Complex64>(args, out_dir),
    }
}

fn run_reconstruct(args: &ReconstructArgs, out_dir: &Path) -> sprsf::Result<()> {
    let (n, k, k_hat) = if args.paper_scale {
        (1000, 10, 180)
    } else {
        (256, 5, 40)
    };
    let base = SolverConfig {
        stop_tol: 1e-10,
        ..SolverConfig::default()
    };
    let rec = if let Some(path) = &args.input {
        let problem = format::read_problem(path)?;
        let missing = || Error::Spec("reconstruct needs a problem file with ground truth".into());
        match problem {
            Problem::Real(p) => {
                let x = p.truth.ok_or_else(missing)?;
                let cfg = args.solver.resolve(SolverConfig {
                    k_hat: args.k_hat.unwrap_or(k_hat),
                    ..base
                })?;
                harness::reconstruct_from(&x, &p.ensemble, &cfg)?
            }
            Problem::Complex(p) => {
                let x = p.truth.ok_or_else(missing)?;
                let cfg = args.solver.resolve(SolverConfig {
                    k_hat: args.k_hat.unwrap_or(k_hat),
                    ..base
                })?;
                harness::reconstruct_from(&x, &p.ensemble, &cfg)?
            }
        }
    } else {
        let n = args.n.unwrap_or(n);
        let m = args.m.unwrap_or(n);
        let spec = ExperimentSpec {
            mode: args.mode.into(),
            n,
            true_k: vec![args.k.unwrap_or(k)],
            k_hat: KHat::Values(vec![args.k_hat.unwrap_or(k_hat)]),
            m_over_n: vec![m as f64 / n as f64],
            snr_db: vec![None],
            trials: 1,
            base_seed: args.seed,
            solver: args.solver.resolve(base)?,
            ..ExperimentSpec::default()
        };
        harness::dump_reconstruction(&spec)?
    };
    format::save_reconstruction_csv(&in_dir(out_dir, &args.out), &rec)?;
    println!(
        "{}",
        json!({
            "sprsf_rel_err": rec.sprsf_rel_err,
            "baseline_rel_err": rec.baseline_rel_err,
            "n": rec.truth.len(),
            "m": rec.cell.m,
            "k": rec.cell.true_k,
            "k_hat": rec.cell.k_hat,
        })
    );
    Ok(())
}

fn run_selftest() -> ExitCode {
    let results = sprsf::selftest::run_all();
    let mut failed = 0;
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("PASS {}", r.name),
            Err(e) => {
                failed += 1;
                println!("FAIL {}: {e}", r.name);
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SELFTEST)
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message, "exit_code": code }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error");
            return report("usage", first.trim_start_matches("error: "), EXIT_USAGE);
        }
    };
    let out_dir = cli.out_dir.as_path();
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a, out_dir),
        Command::Sweep(a) => run_sweep_cmd(a, out_dir, false),
        Command::Noise(a) => run_sweep_cmd(a, out_dir, true),
        Command::Reconstruct(a) => run_reconstruct(a, out_dir),
        Command::Selftest => return run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_validation() => report("validation", &e.to_string(), EXIT_VALIDATION),
        Err(e) if e.is_input() => report("input", &e.to_string(), EXIT_INPUT),
        Err(e) => report("runtime", &e.to_string(), EXIT_RUNTIME),
    }
}
