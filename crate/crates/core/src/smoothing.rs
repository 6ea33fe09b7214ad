//! The smoothing function `φ_μ(x) = sqrt(x² + μ²)`, the smoothed amplitude
//! loss and its Wirtinger gradient.
//!
//! Gradients follow the convention `∂h = 2 ∂h/∂z*`. For a real-valued `h`
//! of `z = u + jv` this is `∂h/∂u + j ∂h/∂v`, so in real mode it is the
//! ordinary gradient.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::MeasurementEnsemble;
use crate::numerics::norm;
use crate::scalar::Scalar;

/// A positive smoothing level.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Smoother {
    mu: f64,
}

impl Smoother {
    pub fn new(mu: f64) -> Result<Self> {
        if mu > 0.0 && mu.is_finite() {
            Ok(Smoother { mu })
        } else {
            Err(Error::param("mu", "mu > 0", mu))
        }
    }

    pub fn mu(self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn phi(self, x: f64) -> f64 {
        phi(x, self.mu)
    }
}

/// `sqrt(x² + μ²)`; `φ_0(x) = |x|`.
#[inline]
pub fn phi(x: f64, mu: f64) -> f64 {
    libm::hypot(x, mu)
}

/// `g(z, μ) = (1/m) Σ (φ_μ(|a_iᴴz|) − q_i)²`. `μ = 0` gives the plain
/// amplitude loss.
pub fn objective<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::param("mu", "mu >= 0", mu));
    }
    let p = ens.project(z)?;
    Ok(objective_from_projection(&p, &ens.q, mu))
}

/// Unsmoothed amplitude loss `(1/m) Σ (|a_iᴴz| − q_i)²`.
pub fn amplitude_loss<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>) -> Result<f64> {
    objective(z, ens, 0.0)
}

fn objective_from_projection<S: Scalar>(p: &[S], q: &[f64], mu: f64) -> f64 {
    let sum: f64 = p
        .iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            let r = phi(pi.modulus(), mu) - qi;
            r * r
        })
        .sum();
    sum / p.len() as f64
}

/// Gradient together with quantities the solver logs alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEval<S> {
    pub grad: Vec<S>,
    pub norm: f64,
    /// `g(z, μ)` at the evaluation point.
    pub objective: f64,
}

/// `∂g(z, μ) = (2/m) Σ (a_iᴴz − q_i a_iᴴz / sqrt(|a_iᴴz|² + μ²)) a_i`.
pub fn wirtinger_grad<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>, mu: f64) -> Result<Vec<S>> {
    Ok(evaluate(z, ens, mu)?.grad)
}

/// [`wirtinger_grad`] plus its norm and the objective, sharing one
/// projection.
pub fn evaluate<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>, mu: f64) -> Result<GradientEval<S>> {
    let s = Smoother::new(mu)?;
    let p = ens.project(z)?;
    let scale = 2.0 / ens.m() as f64;
    let coeffs: Vec<S> = p
        .iter()
        .zip(&ens.q)
        .map(|(&pi, &qi)| pi.scale(scale * (1.0 - qi / s.phi(pi.modulus()))))
        .collect();
    let grad = ens.back_project(&coeffs)?;
    Ok(GradientEval {
        norm: norm(&grad),
        objective: objective_from_projection(&p, &ens.q, mu),
        grad,
    })
}

/// Unsmoothed (`μ = 0`) amplitude-flow direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineGradient<S> {
    pub grad: Vec<S>,
    pub norm: f64,
    pub objective: f64,
    /// Terms with `a_iᴴz = 0`, whose ratio `q_i / |a_iᴴz|` was taken as 0.
    pub zero_terms: usize,
}

/// `(2/m) Σ (1 − q_i/|a_iᴴz|) a_i a_iᴴ z`.
///
/// A term with `a_iᴴz = 0` contributes nothing; the count is reported in
/// [`BaselineGradient::zero_terms`].
pub fn baseline_grad_mu0<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>) -> Result<BaselineGradient<S>> {
    let p = ens.project(z)?;
    let scale = 2.0 / ens.m() as f64;
    let mut zero_terms = 0;
    let coeffs: Vec<S> = p
        .iter()
        .zip(&ens.q)
        .map(|(&pi, &qi)| {
            let r = pi.modulus();
            if r == 0.0 {
                zero_terms += 1;
                S::zero()
            } else {
                pi.scale(scale * (1.0 - qi / r))
            }
        })
        .collect();
    let grad = ens.back_project(&coeffs)?;
    Ok(BaselineGradient {
        norm: norm(&grad),
        objective: objective_from_projection(&p, &ens.q, 0.0),
        grad,
        zero_terms,
    })
}
