//! Power iteration for the leading eigenpair of a Hermitian PSD map.

use alloc::vec::Vec;

use rand::Rng;

use super::{inner, norm};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A Hermitian positive-semidefinite linear map on `dim` coordinates.
pub trait HermitianMap<S: Scalar> {
    fn dim(&self) -> usize;
    /// `out = M x`.
    fn apply(&self, x: &[S], out: &mut [S]);
}

/// Dense row-major Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseHermitian<S> {
    pub fn zeros(dim: usize) -> Self {
        DenseHermitian {
            dim,
            data: alloc::vec![S::zero(); dim * dim],
        }
    }

    pub fn from_row_major(dim: usize, data: Vec<S>) -> Result<Self> {
        Error::check_len(dim * dim, data.len())?;
        Ok(DenseHermitian { dim, data })
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    /// `M += w · v vᴴ`.
    pub fn add_outer(&mut self, v: &[S], w: f64) {
        debug_assert_eq!(v.len(), self.dim);
        for (i, &vi) in v.iter().enumerate() {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            let vi = vi.scale(w);
            for (m, &vj) in row.iter_mut().zip(v) {
                *m += vi * vj.conj();
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.data {
            *m = m.scale(s);
        }
    }
}

impl<S: Scalar> HermitianMap<S> for DenseHermitian<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[S], out: &mut [S]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.dim)) {
            *o = row.iter().zip(x).fold(S::zero(), |acc, (&m, &v)| acc + m * v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub max_iters: usize,
    /// Stop once `‖Mv − λv‖₂ ≤ tol·λ`.
    pub tol: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            max_iters: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIteration<S> {
    /// Unit-norm eigenvector estimate in the map's own coordinates.
    pub vector: Vec<S>,
    /// Rayleigh quotient `vᴴMv`.
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration from a seeded Gaussian start.
///
/// When the tolerance is not met within `max_iters`, the iterate with the
/// smallest relative residual is returned with `converged = false`.
pub fn leading_eigenvector<S, M, R>(map: &M, opts: PowerOptions, rng: &mut R) -> Result<PowerIteration<S>>
where
    S: Scalar,
    M: HermitianMap<S> + ?Sized,
    R: Rng + ?Sized,
{
    let dim = map.dim();
    if dim == 0 {
        return Err(Error::param("dim", "dim >= 1", 0.0));
    }
    let mut v: Vec<S> = (0..dim).map(|_| S::sample_measurement(rng)).collect();
    normalize(&mut v);

    let mut w = alloc::vec![S::zero(); dim];
    let mut best: Option<PowerIteration<S>> = None;
    let mut best_ratio = f64::INFINITY;

    for it in 0..opts.max_iters.max(1) {
        map.apply(&v, &mut w);
        let lambda = inner(&v, &w).re();
        let residual = libm::sqrt(
            w.iter()
                .zip(&v)
                .map(|(&a, &b)| (a - b.scale(lambda)).norm_sqr())
                .sum::<f64>(),
        );
        if residual <= opts.tol * lambda || residual == 0.0 {
            return Ok(PowerIteration {
                vector: v,
                eigenvalue: lambda,
                residual,
                iterations: it + 1,
                converged: true,
            });
        }
        let ratio = residual / lambda.abs();
        if ratio < best_ratio {
            best_ratio = ratio;
            best = Some(PowerIteration {
                vector: v.clone(),
                eigenvalue: lambda,
                residual,
                iterations: it + 1,
                converged: false,
            });
        }
        let wn = norm(&w);
        if wn == 0.0 || !wn.is_finite() {
            break;
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi.scale(1.0 / wn);
        }
    }
    Ok(best.expect("at least one iteration ran"))
}

fn normalize<S: Scalar>(v: &mut [S]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x = x.scale(1.0 / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dist_mod_phase, random::seeded_rng};
    use alloc::vec;

    #[test]
    fn diagonal_picks_dominant_axis() {
        let m = DenseHermitian::from_row_major(2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let out = leading_eigenvector(&m, PowerOptions::default(), &mut seeded_rng(1)).unwrap();
        assert!(out.converged);
        assert!(dist_mod_phase(&out.vector, &[1.0, 0.0]).unwrap() < 1e-7);
        assert!((out.eigenvalue - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_accepts_any_unit_vector() {
        let mut m = DenseHermitian::<f64>::zeros(3);
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            m.add_outer(&e, 1.0);
        }
        let out = leading_eigenvector(&m, PowerOptions::default(), &mut seeded_rng(5)).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert!((out.eigenvalue - 1.0).abs() < 1e-12);
        assert!((norm(&out.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_map_converges_trivially() {
        let m = DenseHermitian::<f64>::zeros(4);
        let out = leading_eigenvector(&m, PowerOptions::default(), &mut seeded_rng(2)).unwrap();
        assert!(out.converged);
        assert_eq!(out.eigenvalue, 0.0);
    }

    #[test]
    fn nearly_degenerate_map_reports_nonconvergence() {
        let m = DenseHermitian::from_row_major(2, vec![1.0, 0.0, 0.0, 1.0 - 1e-9]).unwrap();
        let opts = PowerOptions {
            max_iters: 5,
            tol: 1e-16,
        };
        let out = leading_eigenvector(&m, opts, &mut seeded_rng(3)).unwrap();
        assert!(!out.converged);
        assert!((norm(&out.vector) - 1.0).abs() < 1e-12);
    }
}
