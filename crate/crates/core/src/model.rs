//! Synthetic sparse signals and Gaussian amplitude measurements.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::{norm_sqr, IndexSet};
use crate::scalar::Scalar;

/// Ground-truth `k`-sparse vector together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal<S> {
    pub vector: Vec<S>,
    pub support: IndexSet,
}

impl<S: Scalar> SparseSignal<S> {
    /// Wraps a vector, taking its nonzero pattern as the support.
    pub fn from_vector(vector: Vec<S>) -> Self {
        let support = crate::numerics::support_of(&vector);
        SparseSignal { vector, support }
    }

    pub fn n(&self) -> usize {
        self.vector.len()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

/// Additive amplitude noise level. `None` is noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec { snr_db: None }
    }

    pub fn snr_db(db: f64) -> Self {
        NoiseSpec { snr_db: Some(db) }
    }
}

/// Sampling vectors `a_i` stored row-major, with their amplitude data.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble<S> {
    m: usize,
    n: usize,
    rows: Vec<S>,
    /// Observed amplitudes, possibly noisy.
    pub q: Vec<f64>,
    /// Noiseless references `|a_iᴴx|`; equal to `q` without noise.
    pub clean: Vec<f64>,
    /// Number of noisy amplitudes clipped at zero.
    pub clipped: usize,
}

impl<S: Scalar> MeasurementEnsemble<S> {
    /// Builds an ensemble from raw parts. `clean` defaults to `q`.
    pub fn from_parts(m: usize, n: usize, rows: Vec<S>, q: Vec<f64>, clean: Option<Vec<f64>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "m >= 1", 0.0));
        }
        if n == 0 {
            return Err(Error::param("n", "n >= 1", 0.0));
        }
        Error::check_len(m * n, rows.len())?;
        Error::check_len(m, q.len())?;
        if let Some(&bad) = q.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("q", "finite q_i >= 0", bad));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("rows", "finite entries", f64::NAN));
        }
        let clean = match clean {
            Some(c) => {
                Error::check_len(m, c.len())?;
                c
            }
            None => q.clone(),
        };
        Ok(MeasurementEnsemble {
            m,
            n,
            rows,
            q,
            clean,
            clipped: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.rows.chunks_exact(self.n)
    }

    pub fn raw_rows(&self) -> &[S] {
        &self.rows
    }

    /// `p_i = a_iᴴ z` for every row, skipping zero coordinates of `z`.
    pub fn project(&self, z: &[S]) -> Result<Vec<S>> {
        Error::check_len(self.n, z.len())?;
        let nz: Vec<(usize, S)> = z.iter().copied().enumerate().filter(|(_, v)| *v != S::zero()).collect();
        Ok(self
            .rows()
            .map(|a| nz.iter().fold(S::zero(), |acc, &(j, zj)| acc + a[j].conj() * zj))
            .collect())
    }

    /// `Σ_i c_i a_i`.
    pub fn back_project(&self, coeffs: &[S]) -> Result<Vec<S>> {
        Error::check_len(self.m, coeffs.len())?;
        let mut out = alloc::vec![S::zero(); self.n];
        for (a, &c) in self.rows().zip(coeffs) {
            if c == S::zero() {
                continue;
            }
            for (o, &aj) in out.iter_mut().zip(a) {
                *o += aj * c;
            }
        }
        Ok(out)
    }

    /// `(1/m) Σ q_i²`, the squared norm estimate.
    pub fn mean_sq_amplitude(&self) -> f64 {
        self.q.iter().map(|q| q * q).sum::<f64>() / self.m as f64
    }
}

/// Draws a `k`-sparse signal with a uniformly random support and Gaussian
/// nonzeros (`N(0,1)` real, `N(0,1) + jN(0,1)` complex).
pub fn make_signal<S: Scalar, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SparseSignal<S>> {
    if k == 0 || k > n {
        return Err(Error::param("k", "1 <= k <= n", k as f64));
    }
    let support = IndexSet::new(rand::seq::index::sample(rng, n, k).into_vec());
    let mut vector = alloc::vec![S::zero(); n];
    for i in support.iter() {
        vector[i] = S::sample_signal(rng);
    }
    Ok(SparseSignal { vector, support })
}

/// Draws `m` Gaussian sampling vectors and the amplitudes `|a_iᴴx|`.
///
/// With noise, `q_i = max(0, |a_iᴴx| + η_i)` where `η_i ~ N(0, σ²)` and
/// `σ² = ‖clean‖² / (m · 10^{snr/10})`.
pub fn measure<S: Scalar, R: Rng + ?Sized>(
    x: &SparseSignal<S>,
    m: usize,
    rng: &mut R,
    noise: NoiseSpec,
) -> Result<MeasurementEnsemble<S>> {
    if m == 0 {
        return Err(Error::param("m", "m >= 1", 0.0));
    }
    let n = x.n();
    let rows: Vec<S> = (0..m * n).map(|_| S::sample_measurement(rng)).collect();
    let mut ens = MeasurementEnsemble {
        m,
        n,
        rows,
        q: Vec::new(),
        clean: Vec::new(),
        clipped: 0,
    };
    ens.clean = ens.project(&x.vector)?.into_iter().map(|p| p.modulus()).collect();
    ens.q = match noise.snr_db {
        None => ens.clean.clone(),
        Some(db) => {
            if !db.is_finite() {
                return Err(Error::param("snr_db", "finite SNR in dB", db));
            }
            let power = norm_sqr(&ens.clean) / m as f64;
            let sigma = libm::sqrt(power / libm::pow(10.0, db / 10.0));
            let dist = Normal::new(0.0, sigma).map_err(|_| Error::param("snr_db", "finite SNR in dB", db))?;
            let mut clipped = 0;
            let q = ens
                .clean
                .iter()
                .map(|&c| {
                    let v = c + dist.sample(rng);
                    if v < 0.0 {
                        clipped += 1;
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            ens.clipped = clipped;
            q
        }
    };
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use crate::Complex64;
    use alloc::vec;

    #[test]
    fn full_support_is_dense() {
        let x: SparseSignal<f64> = make_signal(4, 4, &mut seeded_rng(3)).unwrap();
        assert_eq!(x.support, IndexSet::full(4));
        assert!(x.vector.iter().all(|v| *v != 0.0));
    }

    #[test]
    fn sparsity_contract() {
        let x: SparseSignal<Complex64> = make_signal(100, 10, &mut seeded_rng(4)).unwrap();
        assert_eq!(crate::numerics::count_nonzero(&x.vector), 10);
        assert_eq!(x.sparsity(), 10);
        assert!(make_signal::<f64, _>(3, 4, &mut seeded_rng(0)).is_err());
        assert!(make_signal::<f64, _>(3, 0, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn spike_measures_first_coordinate() {
        let x = SparseSignal::from_vector(vec![1.0, 0.0, 0.0]);
        let ens = measure(&x, 20, &mut seeded_rng(8), NoiseSpec::noiseless()).unwrap();
        for i in 0..ens.m() {
            assert_eq!(ens.q[i], ens.row(i)[0].abs());
        }
        assert_eq!(ens.q, ens.clean);
    }

    #[test]
    fn noisy_amplitudes_nonnegative() {
        let x: SparseSignal<f64> = make_signal(16, 3, &mut seeded_rng(1)).unwrap();
        let ens = measure(&x, 400, &mut seeded_rng(2), NoiseSpec::snr_db(0.0)).unwrap();
        assert!(ens.q.iter().all(|q| *q >= 0.0));
        assert!(ens.clipped > 0);
    }

    #[test]
    fn back_project_is_adjoint_of_project() {
        let x: SparseSignal<Complex64> = make_signal(6, 6, &mut seeded_rng(1)).unwrap();
        let ens = measure(&x, 9, &mut seeded_rng(2), NoiseSpec::noiseless()).unwrap();
        let c: Vec<Complex64> = crate::rng::seeded_gaussian(9, 5);
        // <A^H x, c> == <x, A c> with A^H x = project(x), A c = back_project(c)
        let lhs = crate::numerics::inner(&ens.project(&x.vector).unwrap(), &c);
        let rhs = crate::numerics::inner(&x.vector, &ens.back_project(&c).unwrap());
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn from_parts_validates() {
        assert!(MeasurementEnsemble::<f64>::from_parts(1, 2, vec![1.0, 2.0], vec![-1.0], None).is_err());
        assert!(MeasurementEnsemble::<f64>::from_parts(1, 2, vec![1.0], vec![1.0], None).is_err());
        let e = MeasurementEnsemble::<f64>::from_parts(1, 2, vec![1.0, 2.0], vec![1.0], None).unwrap();
        assert_eq!(e.clean, vec![1.0]);
    }
}
