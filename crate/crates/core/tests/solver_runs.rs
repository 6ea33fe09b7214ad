use proptest::prelude::*;
use sprsf_core::model::{make_signal, measure, NoiseSpec, SparseSignal};
use sprsf_core::numerics::{count_nonzero, relative_error};
use sprsf_core::rng::seeded_rng;
use sprsf_core::solver::{estimate_support, initialize, solve, solve_baseline_mu0, sprsf_step, SolverConfig};
use sprsf_core::{Complex64, Scalar};

fn instance<S: Scalar>(
    n: usize,
    k: usize,
    m: usize,
    seed: u64,
) -> (SparseSignal<S>, sprsf_core::model::MeasurementEnsemble<S>) {
    let mut rng = seeded_rng(seed);
    let x = make_signal::<S, _>(n, k, &mut rng).unwrap();
    let ens = measure(&x, m, &mut rng, NoiseSpec::noiseless()).unwrap();
    (x, ens)
}

#[test]
fn real_recovery_n32_k3() {
    let (x, ens) = instance::<f64>(32, 3, 8 * 32, 7);
    let cfg = SolverConfig {
        k_hat: 3,
        ..SolverConfig::default()
    };
    let out = solve(&ens, &cfg, Some(&x)).unwrap();
    assert_eq!(out.iterations_run, 1000);
    assert!(out.final_rel_err.unwrap() < 1e-5);
    assert!(count_nonzero(&out.z_final) <= 3);
}

#[test]
fn complex_recovery_n64_k4() {
    let (x, ens) = instance::<Complex64>(64, 4, 8 * 64, 11);
    let cfg = SolverConfig {
        k_hat: 4,
        ..SolverConfig::default()
    };
    let out = solve(&ens, &cfg, Some(&x)).unwrap();
    assert!(out.final_rel_err.unwrap() < 1e-5);
    assert!(out.final_mu < cfg.mu0);
}

#[test]
fn truth_is_a_fixed_point_at_tiny_mu() {
    let (x, ens) = instance::<f64>(40, 4, 200, 3);
    let cfg = SolverConfig {
        k_hat: 4,
        mu0: 1e-12,
        ..SolverConfig::default()
    };
    let mut z = x.vector.clone();
    let mut mu = cfg.mu0;
    for _ in 0..10 {
        let step = sprsf_step(&z, mu, &ens, &cfg).unwrap();
        z = step.z_next;
        mu = step.mu_next;
        assert!(relative_error(&z, &x.vector).unwrap() < 1e-10);
    }
}

#[test]
fn baseline_stays_at_truth() {
    let (x, ens) = instance::<Complex64>(30, 3, 150, 5);
    let g = sprsf_core::smoothing::baseline_grad_mu0(&x.vector, &ens).unwrap();
    assert!(g.norm < 1e-12);
    let mut z = x.vector.clone();
    for _ in 0..10 {
        let g = sprsf_core::smoothing::baseline_grad_mu0(&z, &ens).unwrap();
        z = z.iter().zip(&g.grad).map(|(a, b)| a - b * 0.3).collect();
    }
    assert!(relative_error(&z, &x.vector).unwrap() < 1e-10);
}

#[test]
fn spike_support_is_found() {
    for seed in 0..10 {
        let n = 12;
        let mut v = vec![0.0; n];
        v[3] = 2.5;
        let x = SparseSignal::from_vector(v);
        let ens = measure(&x, 100 * n, &mut seeded_rng(seed), NoiseSpec::noiseless()).unwrap();
        assert_eq!(estimate_support(&ens, 1).unwrap().as_slice(), &[3]);
    }
}

#[test]
fn initializer_error_is_moderate() {
    let cfg = SolverConfig {
        k_hat: 5,
        ..SolverConfig::default()
    };
    let mut errs: Vec<f64> = (0..50)
        .map(|seed| {
            let (x, ens) = instance::<f64>(256, 5, 3 * 256, 1000 + seed);
            let init = initialize(&ens, &cfg).unwrap();
            relative_error(&init.z0, &x.vector).unwrap()
        })
        .collect();
    errs.sort_by(|a, b| a.total_cmp(b));
    let median = errs[25];
    assert!(median < 0.6, "median init error {median}");
}

#[test]
fn blind_mode_runs_without_truth() {
    let (x, ens) = instance::<f64>(32, 3, 256, 8);
    let cfg = SolverConfig {
        k_hat: 3,
        ..SolverConfig::default()
    };
    let out = solve(&ens, &cfg, None).unwrap();
    assert!(out.final_rel_err.is_none() && out.init_rel_err.is_none());
    assert!(out.trace.records.iter().all(|r| r.rel_err.is_none()));
    assert!(relative_error(&out.z_final, &x.vector).unwrap() < 1e-5);
}

#[test]
fn solves_are_deterministic() {
    let (x, ens) = instance::<Complex64>(48, 4, 200, 21);
    let cfg = SolverConfig {
        k_hat: 6,
        stop_tol: 1e-10,
        ..SolverConfig::default()
    };
    let a = solve(&ens, &cfg, Some(&x)).unwrap();
    let b = solve(&ens, &cfg, Some(&x)).unwrap();
    assert_eq!(a, b);
    let a = solve_baseline_mu0(&ens, &cfg, Some(&x)).unwrap();
    let b = solve_baseline_mu0(&ens, &cfg, Some(&x)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn truth_dimension_is_checked() {
    let (_, ens) = instance::<f64>(10, 2, 40, 1);
    let wrong = SparseSignal::from_vector(vec![1.0; 11]);
    assert!(solve(
        &ens,
        &SolverConfig {
            k_hat: 2,
            ..SolverConfig::default()
        },
        Some(&wrong)
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mu_schedule_and_sparsity(seed in 0u64..10_000, n in 8usize..40, k in 1usize..4, ratio in 1usize..6, extra in 0usize..4, complex in any::<bool>()) {
        let k_hat = (k + extra).min(n);
        let m = ratio * n;
        let cfg = SolverConfig { k_hat, max_iters: 150, ..SolverConfig::default() };
        let (trace, finals) = if complex {
            let (x, ens) = instance::<Complex64>(n, k, m, seed);
            let o = solve(&ens, &cfg, Some(&x)).unwrap();
            prop_assert!(count_nonzero(&o.z_final) <= k_hat);
            (o.trace, o.final_mu)
        } else {
            let (x, ens) = instance::<f64>(n, k, m, seed);
            let o = solve(&ens, &cfg, Some(&x)).unwrap();
            prop_assert!(count_nonzero(&o.z_final) <= k_hat);
            (o.trace, o.final_mu)
        };
        let mut mus: Vec<f64> = trace.mu_sequence().collect();
        mus.push(finals);
        prop_assert_eq!(mus[0], cfg.mu0);
        let mut drops = 0;
        for w in mus.windows(2) {
            prop_assert!(w[1] > 0.0);
            prop_assert!(w[1] == w[0] || w[1] == w[0] * cfg.gamma1);
            if w[1] != w[0] { drops += 1; }
        }
        prop_assert_eq!(drops, trace.mu_reductions);
    }
}
