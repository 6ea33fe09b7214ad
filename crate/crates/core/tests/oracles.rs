//! Independent oracles: brute-force phase search, a dense eigensolver,
//! central finite differences of a separately coded objective, and the
//! μ → 0 decay order of the smoothed gradient.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use sprsf_core::model::{make_signal, measure, MeasurementEnsemble, NoiseSpec};
use sprsf_core::numerics::{dist_mod_phase, leading_eigenvector, DenseHermitian, PowerOptions};
use sprsf_core::rng::{seeded_gaussian, seeded_rng};
use sprsf_core::smoothing::{baseline_grad_mu0, objective, wirtinger_grad};
use sprsf_core::{Complex64, Scalar};

fn grid_distance(w1: &[Complex64], w2: &[Complex64], points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / points as f64;
            let u = Complex64::from_polar(1.0, -theta);
            w1.iter().zip(w2).map(|(a, b)| (a * u - b).norm_sqr()).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

#[test]
fn closed_form_distance_matches_theta_grid() {
    for seed in 0..3 {
        let w1: Vec<Complex64> = seeded_gaussian(5, 100 + seed);
        let w2: Vec<Complex64> = seeded_gaussian(5, 200 + seed);
        let fast = dist_mod_phase(&w1, &w2).unwrap();
        let slow = grid_distance(&w1, &w2, 1_000_000);
        assert!((fast - slow).abs() < 1e-9, "seed {seed}: {fast} vs {slow}");
    }
}

fn random_psd(dim: usize, seed: u64) -> (DenseHermitian<Complex64>, DMatrix<Complex64>) {
    let b: Vec<Complex64> = seeded_gaussian(dim * dim, seed);
    let b = DMatrix::from_row_slice(dim, dim, &b);
    let a = &b * b.adjoint();
    let mut data = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            data.push(a[(i, j)]);
        }
    }
    (DenseHermitian::from_row_major(dim, data).unwrap(), a)
}

#[test]
fn power_iteration_matches_dense_eigensolver() {
    let opts = PowerOptions {
        max_iters: 200_000,
        tol: 1e-13,
    };
    for (case, dim) in [5usize, 5, 5, 8, 12, 16].into_iter().enumerate() {
        let (map, dense) = random_psd(dim, 7 + case as u64);
        let eig = SymmetricEigen::new(dense);
        let top = (0..dim)
            .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap();
        let oracle: Vec<Complex64> = eig.eigenvectors.column(top).iter().copied().collect();

        let got = leading_eigenvector(&map, opts, &mut seeded_rng(case as u64)).unwrap();
        assert!(got.converged, "dim {dim} did not converge");
        let d = dist_mod_phase(&got.vector, &oracle).unwrap();
        assert!(d < 1e-8, "dim {dim}: distance {d}");
        assert!((got.eigenvalue - eig.eigenvalues[top]).abs() < 1e-9 * eig.eigenvalues[top]);
    }
}

/// `(1/m) Σ (sqrt(|a_iᴴz|² + μ²) − q_i)²`, written out independently of
/// the crate's projection kernels.
fn objective_oracle<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>, mu: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..ens.m() {
        let a = ens.row(i);
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..z.len() {
            // conj(a) z
            re += a[j].re() * z[j].re() + a[j].im() * z[j].im();
            im += a[j].re() * z[j].im() - a[j].im() * z[j].re();
        }
        let r = (re * re + im * im + mu * mu).sqrt() - ens.q[i];
        total += r * r;
    }
    total / ens.m() as f64
}

/// Central differences over the 2n real coordinates. For real-valued g,
/// `2 ∂g/∂z* = ∂g/∂u + j ∂g/∂v`, so each complex entry of the Wirtinger
/// gradient is (d/du, d/dv) packed as (re, im) with no extra factor.
fn fd_wirtinger<S: Scalar>(z: &[S], ens: &MeasurementEnsemble<S>, mu: f64, h: f64) -> Vec<S> {
    let complex = matches!(S::MODE, sprsf_core::FieldMode::Complex);
    (0..z.len())
        .map(|j| {
            let partial = |dre: f64, dim: f64| {
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                zp[j] = S::from_parts(z[j].re() + dre, z[j].im() + dim);
                zm[j] = S::from_parts(z[j].re() - dre, z[j].im() - dim);
                (objective_oracle(&zp, ens, mu) - objective_oracle(&zm, ens, mu)) / (2.0 * h)
            };
            let du = partial(h, 0.0);
            let dv = if complex { partial(0.0, h) } else { 0.0 };
            S::from_parts(du, dv)
        })
        .collect()
}

fn rel_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

fn random_instance<S: Scalar>(seed: u64) -> (Vec<S>, MeasurementEnsemble<S>, f64) {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=24);
    let k = rng.random_range(1..=n);
    let x = make_signal::<S, _>(n, k, &mut rng).unwrap();
    let ens = measure(&x, m, &mut rng, NoiseSpec::noiseless()).unwrap();
    let z: Vec<S> = (0..n).map(|_| S::sample_signal(&mut rng)).collect();
    let mu = 10f64.powf(rng.random_range(-3.0..1.0));
    (z, ens, mu)
}

#[test]
fn objective_matches_formula_oracle() {
    for seed in 0..50 {
        let (z, ens, mu) = random_instance::<Complex64>(seed);
        let a = objective(&z, &ens, mu).unwrap();
        let b = objective_oracle(&z, &ens, mu);
        assert!((a - b).abs() <= 1e-12 * b.max(1.0), "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn gradient_matches_finite_differences_both_fields() {
    for seed in 0..50 {
        let (z, ens, mu) = random_instance::<f64>(seed);
        let g = wirtinger_grad(&z, &ens, mu).unwrap();
        let fd = fd_wirtinger(&z, &ens, mu, 1e-6);
        let e = rel_diff(&g, &fd);
        assert!(e < 1e-6, "real seed {seed}: rel {e}");

        let (z, ens, mu) = random_instance::<Complex64>(1000 + seed);
        let g = wirtinger_grad(&z, &ens, mu).unwrap();
        let fd = fd_wirtinger(&z, &ens, mu, 1e-6);
        let e = rel_diff(&g, &fd);
        assert!(e < 1e-6, "complex seed {seed}: rel {e}");
    }
}

#[test]
fn complex_gradient_n6_m15() {
    let mut rng = seeded_rng(61);
    let x = make_signal::<Complex64, _>(6, 6, &mut rng).unwrap();
    let ens = measure(&x, 15, &mut rng, NoiseSpec::noiseless()).unwrap();
    let z: Vec<Complex64> = seeded_gaussian(6, 62);
    let g = wirtinger_grad(&z, &ens, 0.7).unwrap();
    assert!(rel_diff(&g, &fd_wirtinger(&z, &ens, 0.7, 1e-6)) < 1e-6);
}

/// Least-squares slope of `log err` against `log μ`.
fn loglog_slope(mus: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = mus.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn smoothed_gradient_approaches_baseline_quadratically() {
    let mus = [1e-2, 1e-3, 1e-4];
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut rng = seeded_rng(500 + seed);
        let x = make_signal::<Complex64, _>(8, 3, &mut rng).unwrap();
        let ens = measure(&x, 24, &mut rng, NoiseSpec::noiseless()).unwrap();
        let z: Vec<Complex64> = seeded_gaussian(8, 900 + seed);
        let p = ens.project(&z).unwrap();
        if p.iter().any(|v| v.norm() < 0.1) {
            continue;
        }
        let base = baseline_grad_mu0(&z, &ens).unwrap();
        assert_eq!(base.zero_terms, 0);
        let errs: Vec<f64> = mus
            .iter()
            .map(|&mu| {
                let g = wirtinger_grad(&z, &ens, mu).unwrap();
                g.iter()
                    .zip(&base.grad)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let slope = loglog_slope(&mus, &errs);
        assert!(slope >= 1.8, "seed {seed}: slope {slope}, errs {errs:?}");
        checked += 1;
    }
    assert!(checked >= 5, "too few instances bounded away from zero");
}
