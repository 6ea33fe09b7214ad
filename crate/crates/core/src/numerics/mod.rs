//! Field-generic vector kernels: phase-invariant distance, hard
//! thresholding, power iteration and seeded Gaussian generation.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{FieldMode, Scalar};

pub mod eigen;
pub mod random;

pub use eigen::{leading_eigenvector, DenseHermitian, HermitianMap, PowerIteration, PowerOptions};

/// Sorted set of distinct coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Sorts and deduplicates `indices`.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet(indices)
    }

    /// `{0, 1, …, n−1}`.
    pub fn full(n: usize) -> Self {
        IndexSet((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Restricts `v` to this set.
    pub fn gather<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        self.0.iter().map(|&i| v[i]).collect()
    }

    /// Embeds restricted coordinates into a length-`n` vector, zero elsewhere.
    pub fn scatter<S: Scalar>(&self, restricted: &[S], n: usize) -> Vec<S> {
        debug_assert_eq!(restricted.len(), self.len());
        let mut out = alloc::vec![S::zero(); n];
        for (&i, &v) in self.0.iter().zip(restricted) {
            out[i] = v;
        }
        out
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IndexSet::new(iter.into_iter().collect())
    }
}

/// `w1ᴴ w2`.
pub fn inner<S: Scalar>(w1: &[S], w2: &[S]) -> S {
    w1.iter().zip(w2).fold(S::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm_sqr<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm<S: Scalar>(v: &[S]) -> f64 {
    libm::sqrt(norm_sqr(v))
}

fn diff_norm<S: Scalar>(w1: &[S], w2: &[S], factor: S) -> f64 {
    let s: f64 = w1.iter().zip(w2).map(|(&a, &b)| (a * factor - b).norm_sqr()).sum();
    libm::sqrt(s)
}

/// Unimodular `u` minimising `‖u·w1 − w2‖₂`.
pub fn best_phase<S: Scalar>(w1: &[S], w2: &[S]) -> S {
    inner(w1, w2).phase()
}

/// Distance modulo a global phase, `min_θ ‖w1·e^{−jθ} − w2‖₂`.
///
/// Real mode evaluates `min(‖w1 − w2‖, ‖w1 + w2‖)`. Complex mode aligns
/// `w1` with the optimal phase `arg(w1ᴴw2)` and takes the norm of the
/// difference, which equals `sqrt(‖w1‖² + ‖w2‖² − 2|w1ᴴw2|)` without its
/// cancellation near zero.
pub fn dist_mod_phase<S: Scalar>(w1: &[S], w2: &[S]) -> Result<f64> {
    Error::check_len(w1.len(), w2.len())?;
    Ok(match S::MODE {
        FieldMode::Real => {
            let minus = diff_norm(w1, w2, S::from_real(1.0));
            let plus = diff_norm(w1, w2, S::from_real(-1.0));
            minus.min(plus)
        }
        FieldMode::Complex => diff_norm(w1, w2, best_phase(w1, w2)),
    })
}

/// `dist_mod_phase(z, x) / ‖x‖₂`.
pub fn relative_error<S: Scalar>(z: &[S], x: &[S]) -> Result<f64> {
    Ok(dist_mod_phase(z, x)? / norm(x))
}

/// Multiplies `z` by the global phase that best aligns it with `target`.
pub fn align_phase<S: Scalar>(z: &[S], target: &[S]) -> Vec<S> {
    let u = best_phase(z, target);
    z.iter().map(|&v| v * u).collect()
}

pub fn count_nonzero<S: Scalar>(v: &[S]) -> usize {
    v.iter().filter(|x| **x != S::zero()).count()
}

pub fn support_of<S: Scalar>(v: &[S]) -> IndexSet {
    IndexSet(
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != S::zero())
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Indices of the `k` largest `scores`, ties toward the lower index.
pub fn top_k_indices(scores: &[f64], k: usize) -> IndexSet {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let k = k.min(scores.len());
    if k == 0 {
        return IndexSet::default();
    }
    let cmp = |a: &usize, b: &usize| -> Ordering { scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)) };
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    IndexSet::new(order)
}

/// Keeps the `k` entries of largest modulus and zeroes the rest.
///
/// Among equal moduli the lowest index is kept.
pub fn hard_threshold<S: Scalar>(u: &[S], k: usize) -> Result<Vec<S>> {
    let mut out = u.to_vec();
    hard_threshold_in_place(&mut out, k)?;
    Ok(out)
}

pub fn hard_threshold_in_place<S: Scalar>(u: &mut [S], k: usize) -> Result<()> {
    if k == 0 || k > u.len() {
        return Err(Error::param("k", "1 <= k <= n", k as f64));
    }
    if k == u.len() {
        return Ok(());
    }
    let mags: Vec<f64> = u.iter().map(|x| x.norm_sqr()).collect();
    let keep = top_k_indices(&mags, k);
    let mut kept = keep.iter().peekable();
    for (i, v) in u.iter_mut().enumerate() {
        if kept.peek() == Some(&i) {
            kept.next();
        } else {
            *v = S::zero();
        }
    }
    Ok(())
}
