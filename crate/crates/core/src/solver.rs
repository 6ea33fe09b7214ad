//! Thresholded smoothed amplitude flow.
//!
//! 1. Estimate a support `S₀` from per-coordinate energies and build a
//!    weighted spectral matrix on it; its leading eigenvector, scaled by
//!    `λ₀ = sqrt(mean q²)`, is the starting point.
//! 2. Step `z ← H_k(z − τ ∂g(z, μ))`.
//! 3. If `‖∂g(z_next, μ)‖ < γ μ`, shrink `μ ← γ₁ μ`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{MeasurementEnsemble, SparseSignal};
use crate::numerics::{
    self, hard_threshold_in_place, leading_eigenvector, norm, top_k_indices, DenseHermitian, IndexSet, PowerOptions,
};
use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::smoothing::{self, GradientEval};

/// Blind-mode stop: gradient norm below this ends the loop.
pub const BLIND_GRAD_TOL: f64 = 1e-14;

/// A fraction `num/den` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    /// `⌊count · num/den⌋`.
    pub fn floor_of(self, count: usize) -> usize {
        ((count as u128 * self.num as u128) / self.den as u128) as usize
    }
}

impl core::fmt::Display for Ratio {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl core::str::FromStr for Ratio {
    type Err = &'static str;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        const MSG: &str = "expected a fraction `num/den`";
        let (a, b) = s.split_once('/').ok_or(MSG)?;
        Ok(Ratio {
            num: a.trim().parse().map_err(|_| MSG)?,
            den: b.trim().parse().map_err(|_| MSG)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Step size `τ ∈ (0,1)`.
    pub tau: f64,
    /// Gradient-to-μ control `γ ∈ (0,1)`.
    pub gamma: f64,
    /// μ reduction factor `γ₁ ∈ (0,1)`.
    pub gamma1: f64,
    pub mu0: f64,
    /// Iteration budget `T`.
    pub max_iters: usize,
    /// Assumed sparsity `k̂`.
    pub k_hat: usize,
    /// `|I₀| / m` for the spectral initializer.
    pub i0_fraction: Ratio,
    /// Exponent `e` of the initializer weights `q_i^e`.
    pub init_weight_exponent: f64,
    /// Early stop once the relative error against a supplied truth drops
    /// below this. `0` disables it.
    pub stop_tol: f64,
    pub power_iters: usize,
    pub power_tol: f64,
    pub power_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 0.3,
            gamma: 0.9,
            gamma1: 0.5,
            mu0: 30.0,
            max_iters: 1000,
            k_hat: 10,
            i0_fraction: Ratio::new(3, 13),
            init_weight_exponent: 0.5,
            stop_tol: 0.0,
            power_iters: 200,
            power_tol: 1e-8,
            power_seed: 0x005e_ed0f_1417,
        }
    }
}

fn open_unit(name: &'static str, constraint: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, constraint, v))
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        open_unit("tau", "step size tau in (0,1)", self.tau)?;
        open_unit("gamma", "control variable gamma in (0,1)", self.gamma)?;
        open_unit("gamma1", "control variable gamma1 in (0,1)", self.gamma1)?;
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(Error::param("mu0", "initial smoothing mu0 > 0", self.mu0));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "iteration count T >= 1", 0.0));
        }
        if self.k_hat == 0 || self.k_hat > n {
            return Err(Error::param(
                "k_hat",
                "sparsity budget 1 <= k_hat <= n",
                self.k_hat as f64,
            ));
        }
        let r = self.i0_fraction;
        if r.den == 0 || r.num == 0 || r.num > r.den {
            return Err(Error::param(
                "i0_fraction",
                "0 < i0_fraction <= 1",
                r.num as f64 / r.den as f64,
            ));
        }
        if !self.init_weight_exponent.is_finite() {
            return Err(Error::param(
                "init_weight_exponent",
                "finite weight exponent",
                self.init_weight_exponent,
            ));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::param("stop_tol", "stop_tol >= 0", self.stop_tol));
        }
        if self.power_iters == 0 {
            return Err(Error::param("power_iters", "power_iters >= 1", 0.0));
        }
        if !(self.power_tol > 0.0) {
            return Err(Error::param("power_tol", "power_tol > 0", self.power_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Smoothed gradient with the decreasing-μ schedule.
    Sprsf,
    /// Same loop with the unsmoothed `μ = 0` gradient.
    BaselineMu0,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sprsf => "sprsf",
            Algorithm::BaselineMu0 => "baseline_mu0",
        }
    }
}

impl core::str::FromStr for Algorithm {
    type Err = &'static str;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "sprsf" => Ok(Algorithm::Sprsf),
            "baseline_mu0" | "baseline" => Ok(Algorithm::BaselineMu0),
            _ => Err("algorithm must be `sprsf` or `baseline_mu0`"),
        }
    }
}

/// One iteration `z_t → z_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Index of the produced iterate, starting at 1.
    pub t: usize,
    /// `μ_t`, the level used for this step.
    pub mu: f64,
    /// `‖∂g(z_{t+1}, μ_t)‖₂`.
    pub grad_norm: f64,
    /// `g(z_{t+1}, μ_t)`.
    pub objective: f64,
    pub rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub mu_reductions: usize,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn mu_sequence(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Initialization<S> {
    pub z0: Vec<S>,
    pub support: IndexSet,
    /// `I₀`, the measurements feeding the spectral matrix.
    pub selected: IndexSet,
    pub lambda0: f64,
    pub eigen_converged: bool,
    /// All amplitudes were zero; `z0` is the zero vector.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome<S> {
    pub algorithm: Algorithm,
    pub z_final: Vec<S>,
    pub iterations_run: usize,
    pub trace: SolverTrace,
    /// Stopped before `T` on the truth tolerance or the blind gradient test.
    pub converged_early: bool,
    /// A non-finite iterate appeared; the loop stopped there.
    pub diverged: bool,
    pub init: Initialization<S>,
    pub init_rel_err: Option<f64>,
    pub final_rel_err: Option<f64>,
    pub final_mu: f64,
    /// Gradient norm at `z_final` for `final_mu`.
    pub final_grad_norm: f64,
}

/// `S₀`: the `k̂` largest scores `(1/m) Σ_i q_i² |a_ij|²`.
pub fn estimate_support<S: Scalar>(ens: &MeasurementEnsemble<S>, k_hat: usize) -> Result<IndexSet> {
    let n = ens.n();
    if k_hat == 0 || k_hat > n {
        return Err(Error::param("k_hat", "sparsity budget 1 <= k_hat <= n", k_hat as f64));
    }
    let mut scores = alloc::vec![0.0; n];
    for (a, &q) in ens.rows().zip(&ens.q) {
        let w = q * q;
        for (s, &aj) in scores.iter_mut().zip(a) {
            *s += w * aj.norm_sqr();
        }
    }
    let m = ens.m() as f64;
    for s in &mut scores {
        *s /= m;
    }
    Ok(top_k_indices(&scores, k_hat))
}

/// Weighted spectral initializer restricted to the estimated support.
pub fn initialize<S: Scalar>(ens: &MeasurementEnsemble<S>, cfg: &SolverConfig) -> Result<Initialization<S>> {
    cfg.validate(ens.n())?;
    let n = ens.n();
    let support = estimate_support(ens, cfg.k_hat)?;

    let stat: Vec<f64> = ens
        .rows()
        .zip(&ens.q)
        .map(|(a, &q)| {
            let an = norm(a);
            if an > 0.0 {
                q / an
            } else {
                0.0
            }
        })
        .collect();
    let i0 = cfg.i0_fraction.floor_of(ens.m()).max(1);
    let selected = top_k_indices(&stat, i0);

    let lambda0 = libm::sqrt(ens.mean_sq_amplitude());
    if lambda0 == 0.0 {
        return Ok(Initialization {
            z0: alloc::vec![S::zero(); n],
            support,
            selected,
            lambda0,
            eigen_converged: false,
            degenerate: true,
        });
    }

    let mut y = DenseHermitian::zeros(support.len());
    for i in selected.iter() {
        let a_s = support.gather(ens.row(i));
        let ns = numerics::norm_sqr(&a_s);
        if ns > 0.0 {
            let w = libm::pow(ens.q[i], cfg.init_weight_exponent);
            y.add_outer(&a_s, w / ns);
        }
    }
    y.scale(1.0 / ens.m() as f64);

    let opts = PowerOptions {
        max_iters: cfg.power_iters,
        tol: cfg.power_tol,
    };
    let eig = leading_eigenvector(&y, opts, &mut seeded_rng(cfg.power_seed))?;
    let restricted: Vec<S> = eig.vector.iter().map(|v| v.scale(lambda0)).collect();
    Ok(Initialization {
        z0: support.scatter(&restricted, n),
        support,
        selected,
        lambda0,
        eigen_converged: eig.converged,
        degenerate: false,
    })
}

/// Result of one thresholded step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<S> {
    pub z_next: Vec<S>,
    pub mu_next: f64,
    /// `‖∂g(z_next, μ)‖₂`, the quantity tested against `γ μ`.
    pub grad_norm: f64,
    pub objective: f64,
}

fn shrink(mu: f64, gamma1: f64) -> f64 {
    let next = mu * gamma1;
    // never let μ underflow to zero
    if next > 0.0 {
        next
    } else {
        mu
    }
}

fn descend<S: Scalar>(z: &[S], grad: &[S], tau: f64, k_hat: usize) -> Result<Vec<S>> {
    let mut next: Vec<S> = z.iter().zip(grad).map(|(&zi, &gi)| zi - gi.scale(tau)).collect();
    hard_threshold_in_place(&mut next, k_hat)?;
    Ok(next)
}

/// One iteration: thresholded gradient step, then the μ update.
pub fn sprsf_step<S: Scalar>(z: &[S], mu: f64, ens: &MeasurementEnsemble<S>, cfg: &SolverConfig) -> Result<Step<S>> {
    let at_z = smoothing::evaluate(z, ens, mu)?;
    let (step, _) = advance(z, &at_z, mu, ens, cfg)?;
    Ok(step)
}

fn advance<S: Scalar>(
    z: &[S],
    at_z: &GradientEval<S>,
    mu: f64,
    ens: &MeasurementEnsemble<S>,
    cfg: &SolverConfig,
) -> Result<(Step<S>, GradientEval<S>)> {
    let z_next = descend(z, &at_z.grad, cfg.tau, cfg.k_hat)?;
    let at_next = smoothing::evaluate(&z_next, ens, mu)?;
    let mu_next = if at_next.norm >= cfg.gamma * mu {
        mu
    } else {
        shrink(mu, cfg.gamma1)
    };
    Ok((
        Step {
            z_next,
            mu_next,
            grad_norm: at_next.norm,
            objective: at_next.objective,
        },
        at_next,
    ))
}

fn rel_err_of<S: Scalar>(z: &[S], truth: Option<&SparseSignal<S>>) -> Result<Option<f64>> {
    truth.map(|x| numerics::relative_error(z, &x.vector)).transpose()
}

fn check_truth<S: Scalar>(ens: &MeasurementEnsemble<S>, truth: Option<&SparseSignal<S>>) -> Result<()> {
    match truth {
        Some(x) => Error::check_len(ens.n(), x.n()),
        None => Ok(()),
    }
}

fn all_finite<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Runs the full smoothed algorithm.
///
/// With `truth`, every iteration records the relative error and the loop
/// exits once it falls below `cfg.stop_tol` (when positive). Without it,
/// the loop runs `T` iterations or until the gradient norm drops below
/// [`BLIND_GRAD_TOL`].
pub fn solve<S: Scalar>(
    ens: &MeasurementEnsemble<S>,
    cfg: &SolverConfig,
    truth: Option<&SparseSignal<S>>,
) -> Result<SolverOutcome<S>> {
    check_truth(ens, truth)?;
    let init = initialize(ens, cfg)?;
    let init_rel_err = rel_err_of(&init.z0, truth)?;

    let mut z = init.z0.clone();
    let mut mu = cfg.mu0;
    let mut at_z = smoothing::evaluate(&z, ens, mu)?;
    let mut trace = SolverTrace::default();
    let mut converged_early = false;
    let mut diverged = false;

    for t in 0..cfg.max_iters {
        let (step, at_next) = advance(&z, &at_z, mu, ens, cfg)?;
        if !all_finite(&step.z_next) {
            diverged = true;
            break;
        }
        let rel_err = rel_err_of(&step.z_next, truth)?;
        trace.records.push(IterationRecord {
            t: t + 1,
            mu,
            grad_norm: step.grad_norm,
            objective: step.objective,
            rel_err,
        });
        z = step.z_next;
        if step.mu_next != mu {
            trace.mu_reductions += 1;
            at_z = smoothing::evaluate(&z, ens, step.mu_next)?;
        } else {
            at_z = at_next;
        }
        mu = step.mu_next;

        let stop = match rel_err {
            Some(e) => cfg.stop_tol > 0.0 && e < cfg.stop_tol,
            None => at_z.norm < BLIND_GRAD_TOL,
        };
        if stop {
            converged_early = t + 1 < cfg.max_iters;
            break;
        }
    }

    Ok(SolverOutcome {
        algorithm: Algorithm::Sprsf,
        iterations_run: trace.len(),
        final_rel_err: rel_err_of(&z, truth)?,
        final_grad_norm: at_z.norm,
        z_final: z,
        trace,
        converged_early,
        diverged,
        init,
        init_rel_err,
        final_mu: mu,
    })
}

/// The same loop driven by the unsmoothed `μ = 0` gradient with no μ
/// schedule. The trace records `μ = 0` throughout.
pub fn solve_baseline_mu0<S: Scalar>(
    ens: &MeasurementEnsemble<S>,
    cfg: &SolverConfig,
    truth: Option<&SparseSignal<S>>,
) -> Result<SolverOutcome<S>> {
    check_truth(ens, truth)?;
    let init = initialize(ens, cfg)?;
    let init_rel_err = rel_err_of(&init.z0, truth)?;

    let mut z = init.z0.clone();
    let mut at_z = smoothing::baseline_grad_mu0(&z, ens)?;
    let mut trace = SolverTrace::default();
    let mut converged_early = false;
    let mut diverged = false;

    for t in 0..cfg.max_iters {
        let next = descend(&z, &at_z.grad, cfg.tau, cfg.k_hat)?;
        if !all_finite(&next) {
            diverged = true;
            break;
        }
        at_z = smoothing::baseline_grad_mu0(&next, ens)?;
        let rel_err = rel_err_of(&next, truth)?;
        trace.records.push(IterationRecord {
            t: t + 1,
            mu: 0.0,
            grad_norm: at_z.norm,
            objective: at_z.objective,
            rel_err,
        });
        z = next;
        let stop = match rel_err {
            Some(e) => cfg.stop_tol > 0.0 && e < cfg.stop_tol,
            None => at_z.norm < BLIND_GRAD_TOL,
        };
        if stop {
            converged_early = t + 1 < cfg.max_iters;
            break;
        }
    }

    Ok(SolverOutcome {
        algorithm: Algorithm::BaselineMu0,
        iterations_run: trace.len(),
        final_rel_err: rel_err_of(&z, truth)?,
        final_grad_norm: at_z.norm,
        z_final: z,
        trace,
        converged_early,
        diverged,
        init,
        init_rel_err,
        final_mu: 0.0,
    })
}

pub fn solve_with<S: Scalar>(
    algorithm: Algorithm,
    ens: &MeasurementEnsemble<S>,
    cfg: &SolverConfig,
    truth: Option<&SparseSignal<S>>,
) -> Result<SolverOutcome<S>> {
    match algorithm {
        Algorithm::Sprsf => solve(ens, cfg, truth),
        Algorithm::BaselineMu0 => solve_baseline_mu0(ens, cfg, truth),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_signal, measure, NoiseSpec};
    use crate::Complex64;
    use alloc::vec;

    fn scalar_ensemble() -> MeasurementEnsemble<f64> {
        MeasurementEnsemble::from_parts(1, 1, vec![1.0], vec![2.0], None).unwrap()
    }

    fn scalar_cfg() -> SolverConfig {
        SolverConfig {
            k_hat: 1,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn defaults_match_published_values() {
        let c = SolverConfig::default();
        assert_eq!(
            (c.tau, c.gamma, c.gamma1, c.mu0, c.max_iters),
            (0.3, 0.9, 0.5, 30.0, 1000)
        );
        assert_eq!(c.i0_fraction, Ratio::new(3, 13));
    }

    #[test]
    fn validation_names_the_constraint() {
        let cfg = SolverConfig {
            tau: 1.5,
            ..scalar_cfg()
        };
        match cfg.validate(1) {
            Err(Error::InvalidParameter { name, constraint, .. }) => {
                assert_eq!(name, "tau");
                assert!(constraint.contains("(0,1)"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(SolverConfig {
            k_hat: 2,
            ..scalar_cfg()
        }
        .validate(1)
        .is_err());
        assert!(SolverConfig {
            gamma1: 1.0,
            ..scalar_cfg()
        }
        .validate(1)
        .is_err());
        assert!(SolverConfig {
            mu0: 0.0,
            ..scalar_cfg()
        }
        .validate(1)
        .is_err());
    }

    #[test]
    fn support_scores_by_hand() {
        let ens = MeasurementEnsemble::from_parts(1, 2, vec![1.0, 2.0], vec![1.0], None).unwrap();
        assert_eq!(estimate_support(&ens, 1).unwrap().as_slice(), &[1]);
    }

    #[test]
    fn zero_amplitudes_fall_back_to_first_indices() {
        let ens =
            MeasurementEnsemble::from_parts(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0.0, 0.0], None).unwrap();
        assert_eq!(estimate_support(&ens, 2).unwrap().as_slice(), &[0, 1]);
        let init = initialize(
            &ens,
            &SolverConfig {
                k_hat: 2,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert!(init.degenerate);
        assert!(init.z0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lambda0_from_amplitudes() {
        let ens = MeasurementEnsemble::from_parts(2, 2, vec![1.0, 0.5, -0.3, 2.0], vec![3.0, 4.0], None).unwrap();
        let init = initialize(
            &ens,
            &SolverConfig {
                k_hat: 2,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert!((init.lambda0 - libm::sqrt(12.5)).abs() < 1e-15);
        assert!((norm(&init.z0) - init.lambda0).abs() < 1e-12);
    }

    #[test]
    fn init_is_zero_off_support() {
        let mut rng = seeded_rng(4);
        let x = make_signal::<Complex64, _>(40, 4, &mut rng).unwrap();
        let ens = measure(&x, 200, &mut rng, NoiseSpec::noiseless()).unwrap();
        let init = initialize(
            &ens,
            &SolverConfig {
                k_hat: 6,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(init.support.len(), 6);
        assert_eq!(init.selected.len(), 200 * 3 / 13);
        for (i, v) in init.z0.iter().enumerate() {
            if !init.support.contains(i) {
                assert_eq!(*v, Complex64::default());
            }
        }
    }

    #[test]
    fn scalar_step_stays_at_smoothed_match_point() {
        let ens = scalar_ensemble();
        let mu = libm::sqrt(3.0);
        let step = sprsf_step(&[1.0], mu, &ens, &scalar_cfg()).unwrap();
        assert!((step.z_next[0] - 1.0).abs() < 1e-15);
        // gradient at z_next is ~0 < γ μ, so μ shrinks
        assert!(step.grad_norm < 1e-15);
        assert_eq!(step.mu_next, 0.5 * mu);
    }

    #[test]
    fn step_keeps_mu_when_gradient_large() {
        let ens = scalar_ensemble();
        // at z = 3, μ = 0.01 the gradient is ≈ 2(3 − 2) = 2 ≥ 0.9·0.01
        let step = sprsf_step(&[3.0], 0.01, &ens, &scalar_cfg()).unwrap();
        assert_eq!(step.mu_next, 0.01);
    }

    #[test]
    fn baseline_scalar_step_grows_magnitude() {
        let ens = scalar_ensemble();
        let g = smoothing::baseline_grad_mu0(&[1.0], &ens).unwrap();
        let next = descend(&[1.0], &g.grad, 0.3, 1).unwrap();
        assert!((next[0] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn mu_never_underflows() {
        assert_eq!(shrink(f64::from_bits(1), 0.5), f64::from_bits(1));
        assert_eq!(shrink(1.0, 0.5), 0.5);
    }

    #[test]
    fn ratio_parse_and_floor() {
        let r: Ratio = "3/13".parse().unwrap();
        assert_eq!(r, Ratio::new(3, 13));
        assert_eq!(r.floor_of(100), 23);
        assert!("3".parse::<Ratio>().is_err());
    }
}
