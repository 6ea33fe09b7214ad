//! Fast invariant checks behind `sprsf selftest`.

use rand::Rng;
use sprsf_core::model::{make_signal, measure, NoiseSpec};
use sprsf_core::numerics::{count_nonzero, dist_mod_phase, hard_threshold};
use sprsf_core::rng::{seeded_gaussian, seeded_rng};
use sprsf_core::smoothing::{objective, phi, wirtinger_grad};
use sprsf_core::solver::{solve, SolverConfig};
use sprsf_core::{Complex64, Scalar};

pub struct Check {
    pub name: &'static str,
    pub run: fn() -> Result<(), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "smoothing_bound",
        run: smoothing_bound,
    },
    Check {
        name: "gradient_vs_finite_differences",
        run: gradient_fd,
    },
    Check {
        name: "distance_metric_laws",
        run: metric_laws,
    },
    Check {
        name: "threshold_laws",
        run: threshold_laws,
    },
    Check {
        name: "mu_schedule_monotone",
        run: mu_schedule,
    },
    Check {
        name: "small_recovery",
        run: small_recovery,
    },
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|c| CheckResult {
            name: c.name,
            outcome: (c.run)(),
        })
        .collect()
}

fn smoothing_bound() -> Result<(), String> {
    let mut rng = seeded_rng(1);
    for _ in 0..20_000 {
        let x: f64 = rng.random_range(-1e6..1e6);
        let mu: f64 = rng.random_range(1e-12..1e3);
        let gap = phi(x, mu) - x.abs();
        if !(0.0..=mu).contains(&gap) {
            return Err(format!("phi({x}, {mu}) - |x| = {gap}"));
        }
    }
    Ok(())
}

fn fd_check<S: Scalar>(seed: u64) -> Result<(), String> {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(2..=8);
    let m = rng.random_range(4..=24);
    let x = make_signal::<S, _>(n, n.min(3), &mut rng).map_err(|e| e.to_string())?;
    let ens = measure(&x, m, &mut rng, NoiseSpec::noiseless()).map_err(|e| e.to_string())?;
    let z: Vec<S> = (0..n).map(|_| S::sample_signal(&mut rng)).collect();
    let mu = 0.5;
    let g = wirtinger_grad(&z, &ens, mu).map_err(|e| e.to_string())?;
    let h = 1e-6;
    let mut err = 0.0;
    let mut scale = 0.0;
    for j in 0..n {
        let shifted = |dre: f64, dim: f64| {
            let mut w = z.clone();
            w[j] = S::from_parts(z[j].re() + dre, z[j].im() + dim);
            objective(&w, &ens, mu).unwrap()
        };
        let du = (shifted(h, 0.0) - shifted(-h, 0.0)) / (2.0 * h);
        let dv = if S::MODE == sprsf_core::FieldMode::Complex {
            (shifted(0.0, h) - shifted(0.0, -h)) / (2.0 * h)
        } else {
            0.0
        };
        err += (S::from_parts(du, dv) - g[j]).norm_sqr();
        scale += g[j].norm_sqr();
    }
    let rel = (err / scale.max(1e-300)).sqrt();
    if rel < 1e-6 {
        Ok(())
    } else {
        Err(format!("seed {seed}: relative error {rel:e}"))
    }
}

fn gradient_fd() -> Result<(), String> {
    for seed in 0..10 {
        fd_check::<f64>(seed)?;
        fd_check::<Complex64>(100 + seed)?;
    }
    Ok(())
}

fn metric_laws() -> Result<(), String> {
    for s in 0..500u64 {
        let a: Vec<Complex64> = seeded_gaussian(6, 3 * s);
        let b: Vec<Complex64> = seeded_gaussian(6, 3 * s + 1);
        let c: Vec<Complex64> = seeded_gaussian(6, 3 * s + 2);
        let d = |x: &[Complex64], y: &[Complex64]| dist_mod_phase(x, y).unwrap();
        let u = Complex64::from_polar(1.0, s as f64 * 0.37);
        let ua: Vec<_> = a.iter().map(|v| v * u).collect();
        if (d(&a, &b) - d(&b, &a)).abs() > 1e-9
            || (d(&ua, &b) - d(&a, &b)).abs() > 1e-9
            || d(&a, &b) > d(&a, &c) + d(&c, &b) + 1e-9
            || d(&ua, &a) > 1e-9
        {
            return Err(format!("violated on triple {s}"));
        }
    }
    Ok(())
}

fn threshold_laws() -> Result<(), String> {
    let mut rng = seeded_rng(4);
    for s in 0..500u64 {
        let n = rng.random_range(1..20);
        let k = rng.random_range(1..=n);
        let u: Vec<Complex64> = seeded_gaussian(n, 1000 + s);
        let h = hard_threshold(&u, k).map_err(|e| e.to_string())?;
        let kept_min = u
            .iter()
            .zip(&h)
            .filter(|p| *p.1 != Complex64::default())
            .map(|p| p.0.norm())
            .fold(f64::INFINITY, f64::min);
        let dropped_max = u
            .iter()
            .zip(&h)
            .filter(|p| *p.1 == Complex64::default())
            .map(|p| p.0.norm())
            .fold(0.0, f64::max);
        if count_nonzero(&h) > k || kept_min < dropped_max || hard_threshold(&h, k).unwrap() != h {
            return Err(format!("violated on vector {s}"));
        }
    }
    Ok(())
}

fn mu_schedule() -> Result<(), String> {
    let mut rng = seeded_rng(5);
    let x = make_signal::<f64, _>(48, 3, &mut rng).map_err(|e| e.to_string())?;
    let ens = measure(&x, 150, &mut rng, NoiseSpec::noiseless()).map_err(|e| e.to_string())?;
    let cfg = SolverConfig {
        k_hat: 5,
        max_iters: 300,
        ..SolverConfig::default()
    };
    let out = solve(&ens, &cfg, Some(&x)).map_err(|e| e.to_string())?;
    let mut mus: Vec<f64> = out.trace.mu_sequence().collect();
    mus.push(out.final_mu);
    for w in mus.windows(2) {
        if !(w[1] > 0.0 && (w[1] == w[0] || w[1] == w[0] * cfg.gamma1)) {
            return Err(format!("mu step {} -> {}", w[0], w[1]));
        }
    }
    Ok(())
}

fn small_recovery() -> Result<(), String> {
    let mut rng = seeded_rng(7);
    let x = make_signal::<Complex64, _>(32, 3, &mut rng).map_err(|e| e.to_string())?;
    let ens = measure(&x, 256, &mut rng, NoiseSpec::noiseless()).map_err(|e| e.to_string())?;
    let cfg = SolverConfig {
        k_hat: 3,
        stop_tol: 1e-10,
        ..SolverConfig::default()
    };
    let out = solve(&ens, &cfg, Some(&x)).map_err(|e| e.to_string())?;
    let e = out.final_rel_err.unwrap_or(f64::NAN);
    if e < 1e-5 {
        Ok(())
    } else {
        Err(format!("relative error {e:e}"))
    }
}
