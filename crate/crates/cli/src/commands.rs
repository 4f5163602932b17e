// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use qubit_kick::dynamics::{fmt_f64, run_ensemble, EnsembleOptions, Model, Solver};
use qubit_kick::forces::{bloch_map, force_table, TableRow};
use qubit_kick::influence::{verify_bch, verify_influence_expansion, ConvergenceReport, PathPair};
use qubit_kick::noise::{quad_coeffs, trajectory_rng, verify_noise, NoiseSampler};
use qubit_kick::params::{uniform_grid, RunConfig};
use qubit_kick::quantum::compare_classical_quantum;
use qubit_kick::reconstruct::reconstruct;
use serde_json::json;

use crate::output::{write_atomic, Payload};

/// Table entries must match the published magnitudes to this relative error.
pub const TABLE_TOLERANCE: f64 = 0.05;
/// Least log-log slope accepted from the expansion checks.
pub const MIN_EXPANSION_SLOPE: f64 = 2.7;
/// Least exponent accepted from the quantum oracle.
pub const MIN_ORACLE_EXPONENT: f64 = 1.7;
/// Largest entrywise error accepted between sampled and exact noise covariance.
pub const NOISE_COV_TOLERANCE: f64 = 0.02;

pub const EXPANSION_COUPLINGS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
pub const ORACLE_COUPLINGS: [f64; 3] = [0.04, 0.02, 0.01];

/// A command's output and whether its built-in check passed.
pub struct Outcome {
    pub payload: Payload,
    pub failures: Vec<String>,
}

impl Outcome {
    fn ok(payload: Payload) -> Self {
        Self { payload, failures: Vec::new() }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn table1(rounded: bool) -> Outcome {
    let rows = force_table(rounded);
    let mut csv = String::from("platform,quantity,computed_n,published_n,rel_error\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.platform, r.quantity, opt(r.computed), opt(r.published), opt(r.rel_error));
    }
    let failures = rows
        .iter()
        .filter(|r| !r.within(TABLE_TOLERANCE))
        .map(|r| format!("{} {} off by {:.1}%", r.platform, r.quantity, 100.0 * r.rel_error.unwrap_or(0.0)))
        .collect();
    Outcome { payload: Payload { csv, data: json!(rows) }, failures }
}

/// Aligned text rendering of the force table.
pub fn table1_text(rows: &[TableRow]) -> String {
    let mut s = format!("{:<12} {:<8} {:>12} {:>12} {:>9}\n", "platform", "quantity", "computed N", "published N", "rel err");
    for r in rows {
        let num = |x: Option<f64>| x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "degenerate".into());
        let err = r.rel_error.map(|e| format!("{:.2}%", 100.0 * e)).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:<12} {:<8} {:>12} {:>12} {:>9}", r.platform.name(), r.quantity, num(r.computed), num(r.published), err);
    }
    s
}

fn model(cfg: &RunConfig) -> Result<Model> {
    let dp = cfg.dimensionless()?;
    cfg.sim.validate(&dp)?;
    Ok(Model::new(dp, cfg.state, cfg.eom))
}

pub fn simulate(cfg: &RunConfig, index: u64, solver: Solver) -> Result<Outcome> {
    let m = model(cfg)?;
    let z = NoiseSampler::new(&cfg.state).sample(&mut trajectory_rng(cfg.sim.seed, index));
    let ics = (cfg.sim.q0, cfg.sim.p0);
    let t = match solver {
        Solver::ClosedForm => m.solve_closed_form(&z, ics, &cfg.sim.grid(m.params.t_final)).with_id(cfg.sim.seed, index),
        Solver::Rk4 => m.integrate_rk4(&z, ics, cfg.sim.dt, index)?.with_id(cfg.sim.seed, index),
    };
    Ok(Outcome::ok(Payload::from_csv(t.to_csv())))
}

pub fn ensemble(cfg: &RunConfig, solver: Solver, psd_out: Option<&Path>) -> Result<Outcome> {
    let m = model(cfg)?;
    let opts = EnsembleOptions { solver, with_psd: psd_out.is_some(), ..Default::default() };
    let stats = run_ensemble(&m, &cfg.sim, &opts)?;
    if let (Some(path), Some(psd)) = (psd_out, &stats.psd) {
        write_atomic(path, &psd.to_csv())?;
    }
    Ok(Outcome::ok(Payload::from_csv(stats.to_csv())))
}

fn convergence_payload(rep: &ConvergenceReport) -> Payload {
    let mut csv = String::from("g,error,comparison_error\n");
    for (i, p) in rep.points.iter().enumerate() {
        let c = rep.comparison.as_ref().map(|(pts, _)| pts[i].error);
        let _ = writeln!(csv, "{},{},{}", fmt_f64(p.g), fmt_f64(p.error), opt(c));
    }
    Payload { csv, data: json!(rep) }
}

fn slope_check(name: &str, rep: &ConvergenceReport) -> Vec<String> {
    if rep.slope >= MIN_EXPANSION_SLOPE {
        Vec::new()
    } else {
        vec![format!("{name} slope {:.3} below {MIN_EXPANSION_SLOPE}", rep.slope)]
    }
}

/// Path pair used by the expansion checks: smooth random paths of unit-scale
/// amplitude on `[0, 6]`.
pub fn expansion_pair(seed: u64, index: u64) -> Result<PathPair> {
    Ok(PathPair::random(seed, index, &uniform_grid(6.0, 1e-3), 0.3)?)
}

pub fn verify_bch_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let pair = expansion_pair(cfg.sim.seed, 0)?;
    let rep = verify_bch(&pair, &EXPANSION_COUPLINGS, pair.forward.tau().len())?;
    Ok(Outcome { failures: slope_check("bch", &rep), payload: convergence_payload(&rep) })
}

pub fn verify_influence_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let pair = expansion_pair(cfg.sim.seed, 0)?;
    let rep = verify_influence_expansion(&pair, &cfg.state, &EXPANSION_COUPLINGS, pair.forward.tau().len())?;
    Ok(Outcome { failures: slope_check("influence", &rep), payload: convergence_payload(&rep) })
}

/// 64 points over two periods of the kernel.
pub fn noise_grid() -> Vec<f64> {
    (0..64).map(|k| 4.0 * std::f64::consts::PI * k as f64 / 63.0).collect()
}

pub fn verify_noise_cmd(cfg: &RunConfig, samples: usize) -> Result<Outcome> {
    let rep = verify_noise(&cfg.state, cfg.sim.seed, samples, &noise_grid())?;
    let det = quad_coeffs(&cfg.state).det();
    let p = cfg.state.p();
    let det_error = (det - (1.0 - 4.0 * p * (1.0 - p))).abs();
    let m = &rep.modes;
    let exact = qubit_kick::noise::KernelModes::exact(&cfg.state);
    let mut csv = String::from("quantity,value,stderr\n");
    for (k, v, se) in [
        ("max_cov_error", rep.max_cov_error, None),
        ("max_mean", rep.max_mean, None),
        ("rank", rep.rank as f64, None),
        ("min_eigenvalue", rep.min_eigenvalue, None),
        ("det_error", det_error, None),
        ("stationary", m.modes.stationary, Some(m.stationary_stderr)),
        ("stationary_exact", exact.stationary, None),
        ("amplitude", m.modes.amplitude(), Some(m.amplitude_stderr)),
        ("amplitude_exact", exact.amplitude(), None),
        ("phase", m.modes.phase(), Some(m.phase_stderr)),
    ] {
        let _ = writeln!(csv, "{k},{},{}", fmt_f64(v), opt(se));
    }
    let mut failures = Vec::new();
    if rep.max_cov_error > NOISE_COV_TOLERANCE {
        failures.push(format!("covariance error {:.4} above {NOISE_COV_TOLERANCE}", rep.max_cov_error));
    }
    if rep.rank > 2 {
        failures.push(format!("kernel rank {} above 2", rep.rank));
    }
    if det_error > 1e-14 {
        failures.push(format!("determinant identity off by {det_error:e}"));
    }
    let data = json!({ "report": rep, "det_error": det_error, "exact_modes": exact });
    Ok(Outcome { payload: Payload { csv, data }, failures })
}

pub fn verify_oracle_cmd(cfg: &RunConfig, horizon: f64) -> Result<Outcome> {
    let dp = cfg.dimensionless()?;
    let tau = uniform_grid(horizon, 0.05);
    let rep = compare_classical_quantum(&dp, &cfg.state, &ORACLE_COUPLINGS, &tau, cfg.sim.n_fock)?;
    let mut csv = String::from("eom_sign,g,max_error\n");
    for c in &rep.conventions {
        for (g, e) in rep.g_values.iter().zip(&c.max_error) {
            let _ = writeln!(csv, "{},{},{}", c.eom_sign, fmt_f64(*g), fmt_f64(*e));
        }
    }
    let failures = if rep.scaling_exponent >= MIN_ORACLE_EXPONENT {
        Vec::new()
    } else {
        vec![format!("oracle exponent {:.3} below {MIN_ORACLE_EXPONENT}", rep.scaling_exponent)]
    };
    eprintln!(
        "oracle prefers the {} convention, exponent {:.3}",
        rep.preferred_sign_convention, rep.scaling_exponent
    );
    Ok(Outcome { payload: Payload { csv, data: json!(rep) }, failures })
}

pub fn reconstruct_cmd(cfg: &RunConfig, batches: usize) -> Result<Outcome> {
    let m = model(cfg)?;
    let res = reconstruct(&m, &cfg.sim, batches)?;
    let st = &res.state;
    let mut csv = String::from("quantity,value,stderr\n");
    let mut row = |k: &str, v: f64, se: Option<f64>| {
        let _ = writeln!(csv, "{k},{},{}", fmt_f64(v), opt(se));
    };
    row("eta_f", st.eta_f, Some(st.eta_f_stderr));
    row("phi", st.phi, Some(st.phi_stderr));
    if let Some([lo, hi]) = st.p_branches {
        row("p_low", lo, None);
        row("p_high", hi, None);
    }
    row("residual_rms", res.mean_fit.residual_rms, None);
    if let Some(ns) = &res.nonstationary {
        row("eta_st", ns.eta_st, Some(ns.eta_st_stderr));
        row("nonstationary_amplitude", ns.amplitude, Some(ns.amplitude_stderr));
        row("nonstationary_phase", ns.phase, Some(ns.phase_stderr));
    }
    let mut failures = Vec::new();
    if st.unphysical {
        failures.push(format!("eta_f = {:.4} exceeds 1/2", st.eta_f));
    }
    Ok(Outcome { payload: Payload { csv, data: json!(res) }, failures })
}

pub fn bloch_map_cmd(resolution: usize) -> Result<Outcome> {
    Ok(Outcome::ok(Payload::from_csv(bloch_map(resolution)?.to_csv())))
}
