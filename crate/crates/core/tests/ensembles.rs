// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::FRAC_PI_3;

use qubit_kick::dynamics::{run_ensemble, EnsembleOptions, EomSign, Model};
use qubit_kick::noise::{trajectory_rng, NoiseSampler};
use qubit_kick::params::{DimensionlessParams, QubitState, SimConfig};

fn model(p: f64, phi: f64, t: f64) -> Model {
    Model::new(DimensionlessParams::new(0.05, 0.5, t, 1).unwrap(), QubitState::new(p, phi).unwrap(), EomSign::Hamilton)
}

fn no_psd() -> EnsembleOptions {
    EnsembleOptions { with_psd: false, ..Default::default() }
}

#[test]
fn closed_form_and_rk4_agree_on_random_draws() {
    let m = model(0.3, 1.1, 50.0);
    let sampler = NoiseSampler::new(&m.state);
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let z = sampler.sample(&mut trajectory_rng(99, i));
        let rk = m.integrate_rk4(&z, (0.0, 0.0), 1e-3, i).unwrap();
        let cf = m.solve_closed_form(&z, (0.0, 0.0), &rk.tau);
        worst = worst.max(rk.max_abs_diff(&cf));
    }
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn ensemble_mean_within_clt_band() {
    for p in [0.1, 0.3, 0.5] {
        for phi in [0.0, FRAC_PI_3] {
            let m = model(p, phi, 40.0);
            let sim = SimConfig { dt: 0.02, n_traj: 4000, seed: 13, ..SimConfig::default() };
            let st = run_ensemble(&m, &sim, &no_psd()).unwrap();
            let exact = m.mean_closed_form(&st.tau).unwrap();
            for ((mq, ex), se) in st.mean_q.iter().zip(&exact).zip(st.stderr_q()) {
                assert!((mq - ex).abs() <= 3.0 * se + 1e-12, "p={p} phi={phi}");
            }
        }
    }
}

#[test]
fn mirrored_population_gives_same_statistics() {
    let sim = SimConfig { dt: 0.02, n_traj: 20_000, seed: 3, ..SimConfig::default() };
    let a = run_ensemble(&model(0.2, 0.5, 30.0), &sim, &no_psd()).unwrap();
    let b = run_ensemble(&model(0.8, 0.5, 30.0), &SimConfig { seed: 4, ..sim }, &no_psd()).unwrap();
    let n = sim.n_traj as f64;
    for i in 0..a.tau.len() {
        let se = ((a.var_q[i] + b.var_q[i]) / n).sqrt();
        assert!((a.mean_q[i] - b.mean_q[i]).abs() <= 4.0 * se + 1e-12);
        // variance of a sample variance for Gaussian data is 2 sigma^4 / (n - 1)
        let se_var = (2.0 * (a.var_q[i].powi(2) + b.var_q[i].powi(2)) / (n - 1.0)).sqrt();
        assert!((a.var_q[i] - b.var_q[i]).abs() <= 4.0 * se_var + 1e-12);
    }
}

#[test]
fn disjoint_index_ranges_partition_an_ensemble() {
    let m = model(0.4, 0.3, 10.0);
    let sim = SimConfig { dt: 0.02, n_traj: 600, seed: 8, ..SimConfig::default() };
    let whole = run_ensemble(&m, &sim, &no_psd()).unwrap();
    let half = SimConfig { n_traj: 300, ..sim };
    let lo = run_ensemble(&m, &half, &no_psd()).unwrap();
    let hi = run_ensemble(&m, &half, &EnsembleOptions { first_index: 300, ..no_psd() }).unwrap();
    for i in 0..whole.tau.len() {
        let merged = 0.5 * (lo.mean_q[i] + hi.mean_q[i]);
        assert!((merged - whole.mean_q[i]).abs() <= 1e-12);
    }
}

#[test]
fn run_order_and_pool_size_do_not_matter() {
    let m = model(0.3, 0.9, 20.0);
    let sim = SimConfig { dt: 0.02, n_traj: 1500, seed: 21, ..SimConfig::default() };
    let opts = EnsembleOptions::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_ensemble(&m, &sim, &opts).unwrap())
    };
    let one = run(1);
    let _ = run_ensemble(&model(0.1, 0.0, 5.0), &sim, &opts).unwrap();
    let many = run(7);
    assert_eq!(one.to_csv(), many.to_csv());
    assert_eq!(one.psd.unwrap().to_csv(), many.psd.unwrap().to_csv());
}
