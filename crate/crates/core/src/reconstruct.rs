// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Inference of the qubit state from oscillator ensemble statistics.
//!
//! The zero-start mean is linear in `(eta_f cos phi, eta_f sin phi)`, so a two
//! column least-squares fit recovers `eta_f` and `phi`. The covariance of `q`
//! is linear in the kernel weights `1 - k`, `-k cos 2phi`, `-k sin 2phi` with
//! `k = 2p(1-p)`, giving `eta_st = sqrt(1 - k)` and an independent view of the
//! non-stationary mode. At this order `p` and `1 - p` produce the same statistics,
//! so the population is only known up to that exchange.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};
use serde::Serialize;

use crate::dynamics::{mean_basis, mean_weights, run_ensemble, EnsembleOptions, EnsembleStats, EomSign, Model, RESONANCE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{batch_mean_se, polar_stderr};
use crate::noise::NoiseRealization;
use crate::params::{wrap_angle, SimConfig};

/// Largest condition number of the normal equations accepted by [`fit_mean`].
pub const MAX_CONDITION: f64 = 1e8;
/// Smallest ensemble accepted by the covariance-mode estimator.
pub const MIN_NONSTATIONARY_TRAJ: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanFit {
    pub a_c: f64,
    pub a_s: f64,
    /// Covariance of `(a_c, a_s)`, row-major.
    pub covariance: [f64; 4],
    /// Root-mean-square residual over the full grid.
    pub residual_rms: f64,
    pub condition: f64,
}

fn coverage_check(r: f64, tau: &[f64]) -> Result<()> {
    if (r - 1.0).abs() < RESONANCE_TOL {
        return Err(Error::Resonance { r });
    }
    let need = 2.0 * TAU / r.min(1.0);
    let have = tau.last().copied().unwrap_or(0.0) - tau.first().copied().unwrap_or(0.0);
    if have < need {
        return Err(Error::InvalidInput(format!(
            "grid spans {have:.3} but the fit needs two periods of the slower frequency, {need:.3}"
        )));
    }
    Ok(())
}

/// Least squares of the ensemble mean of `q` on the two basis functions of
/// the zero-start mean, evaluated at the coarse grid points. The coefficient
/// covariance is the sandwich `A (C / n) A^T` with `A` the least-squares
/// operator and `C` the ensemble covariance of `q` between those points.
pub fn fit_mean(stats: &EnsembleStats, model: &Model) -> Result<MeanFit> {
    let r = model.params.r;
    coverage_check(r, &stats.tau)?;
    let k = stats.coarse_len();
    if k < 3 {
        return Err(Error::InvalidInput("need at least 3 coarse points".into()));
    }
    let (b1, b2) = mean_basis(model.eom, r, &stats.coarse_tau);
    let x = DMatrix::from_fn(k, 2, |i, j| if j == 0 { b1[i] } else { b2[i] });
    let y = DMatrix::from_fn(k, 1, |i, _| stats.mean_q[stats.coarse_index[i]]);
    let xtx: Matrix2<f64> = (x.transpose() * &x).fixed_view::<2, 2>(0, 0).into();
    let ev = xtx.symmetric_eigenvalues();
    let condition = ev.max() / ev.min();
    if !(condition.is_finite() && condition <= MAX_CONDITION && ev.min() > 0.0) {
        return Err(Error::IllConditioned(condition));
    }
    let inv = xtx.try_inverse().ok_or(Error::IllConditioned(condition))?;
    let inv = DMatrix::from_column_slice(2, 2, inv.as_slice());
    let a = &inv * x.transpose();
    let beta = &a * &y;
    let c = DMatrix::from_row_slice(k, k, &stats.cov_q) / stats.n_traj as f64;
    let cov = &a * c * a.transpose();

    let (f1, f2) = mean_basis(model.eom, r, &stats.tau);
    let ss: f64 = (0..stats.tau.len())
        .map(|i| (stats.mean_q[i] - beta[0] * f1[i] - beta[1] * f2[i]).powi(2))
        .sum();
    Ok(MeanFit {
        a_c: beta[0],
        a_s: beta[1],
        covariance: [cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]],
        residual_rms: (ss / stats.tau.len() as f64).sqrt(),
        condition,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateEstimate {
    pub eta_f: f64,
    pub eta_f_stderr: f64,
    /// In `[0, 2 pi)`; meaningless when `phi_indeterminate`.
    pub phi: f64,
    pub phi_stderr: f64,
    /// `eta_f` is not resolved from zero, so the phase carries no information.
    pub phi_indeterminate: bool,
    /// `(p, 1 - p)` with `p <= 1/2`; `None` when `eta_f` is above `1/2` by more
    /// than two standard errors.
    pub p_branches: Option<[f64; 2]>,
    /// `eta_f` exceeded `1/2` within two standard errors and was clipped for the branches.
    pub clipped: bool,
    pub unphysical: bool,
}

/// Converts mean-fit coefficients into `eta_f`, `phi` and the two population branches.
pub fn recover_state(fit: &MeanFit, g: f64, r: f64, n_qubits: u32, eom: EomSign) -> Result<StateEstimate> {
    if !(g > 0.0) {
        return Err(Error::NoSignal);
    }
    let [m1, m2] = mean_weights(eom, g, r, n_qubits);
    let u = fit.a_c / m1;
    let v = fit.a_s / m2;
    let d = Matrix2::new(1.0 / m1, 0.0, 0.0, 1.0 / m2);
    let cov = d * Matrix2::from_row_slice(&fit.covariance) * d;
    let eta = u.hypot(v);
    let (eta_se, phi_se) = if eta > 0.0 {
        let ge = Vector2::new(u / eta, v / eta);
        let gp = Vector2::new(-v / (eta * eta), u / (eta * eta));
        ((ge.transpose() * cov * ge)[0].max(0.0).sqrt(), (gp.transpose() * cov * gp)[0].max(0.0).sqrt())
    } else {
        (cov.trace().max(0.0).sqrt(), PI)
    };
    let phi_indeterminate = eta == 0.0 || eta <= 2.0 * eta_se;
    let (p_branches, clipped, unphysical) = if eta <= 0.5 {
        let s = (1.0 - 4.0 * eta * eta).max(0.0).sqrt();
        (Some([0.5 * (1.0 - s), 0.5 * (1.0 + s)]), false, false)
    } else if eta <= 0.5 + 2.0 * eta_se {
        (Some([0.5, 0.5]), true, false)
    } else {
        (None, false, true)
    };
    Ok(StateEstimate {
        eta_f: eta,
        eta_f_stderr: eta_se,
        phi: wrap_angle(v.atan2(u)),
        phi_stderr: phi_se,
        phi_indeterminate,
        p_branches,
        clipped,
        unphysical,
    })
}

/// Weights of the `q` covariance on its three kernel modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModes {
    /// `1 - 2p(1-p)`, the stationary weight; equals `eta_st^2`.
    pub stationary: f64,
    /// `-2p(1-p) cos 2phi`
    pub beta: f64,
    /// `-2p(1-p) sin 2phi`
    pub gamma: f64,
}

impl NoiseModes {
    pub fn amplitude(&self) -> f64 {
        self.beta.hypot(self.gamma)
    }

    /// Estimate of `2 phi` in `[0, 2 pi)`.
    pub fn phase(&self) -> f64 {
        wrap_angle((-self.gamma).atan2(-self.beta))
    }
}

/// Least squares of the coarse covariance of `q` on the mode responses.
///
/// With `R_x`, `R_y` the responses of `q` to unit `zeta_x`, `zeta_y`, the exact
/// covariance is `a R_x R_x' + b R_y R_y' + c (R_x R_y' + R_y R_x')`, which is
/// `stationary (R_x R_x' + R_y R_y') + beta (R_x R_x' - R_y R_y') + gamma (R_x R_y' + R_y R_x')`.
pub fn fit_noise_modes(stats: &EnsembleStats, model: &Model) -> Result<NoiseModes> {
    let tau = &stats.coarse_tau;
    let base = model.solve_closed_form(&NoiseRealization::default(), (0.0, 0.0), tau);
    let resp = |z| {
        let t = model.solve_closed_form(&z, (0.0, 0.0), tau);
        t.q.iter().zip(&base.q).map(|(a, b)| a - b).collect::<Vec<f64>>()
    };
    let rx = resp(NoiseRealization::new(1.0, 0.0));
    let ry = resp(NoiseRealization::new(0.0, 1.0));
    let k = tau.len();
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for i in 0..k {
        for j in 0..k {
            let row = Vector3::new(
                rx[i] * rx[j] + ry[i] * ry[j],
                rx[i] * rx[j] - ry[i] * ry[j],
                rx[i] * ry[j] + ry[i] * rx[j],
            );
            ata += row * row.transpose();
            atb += row * stats.cov(i, j);
        }
    }
    let sol = ata.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))? * atb;
    Ok(NoiseModes { stationary: sol[0], beta: sol[1], gamma: sol[2] })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonstationaryEstimate {
    pub modes: NoiseModes,
    pub eta_st: f64,
    pub eta_st_stderr: f64,
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    /// Estimate of `2 phi`.
    pub phase: f64,
    pub phase_stderr: f64,
    pub batches: usize,
}

/// Covariance-mode estimate from `batches` disjoint sub-ensembles that together
/// form the ensemble `sim` describes. Mode weights are batch means; standard
/// errors come from the spread between batches.
pub fn estimate_nonstationary(model: &Model, sim: &SimConfig, batches: usize) -> Result<NonstationaryEstimate> {
    if sim.n_traj < MIN_NONSTATIONARY_TRAJ {
        return Err(Error::Undersampled { have: sim.n_traj, need: MIN_NONSTATIONARY_TRAJ });
    }
    if batches < 2 {
        return Err(Error::InvalidInput("need at least 2 batches".into()));
    }
    let size = sim.n_traj / batches;
    let mut st = Vec::with_capacity(batches);
    let mut beta = Vec::with_capacity(batches);
    let mut gamma = Vec::with_capacity(batches);
    for b in 0..batches {
        let sub = SimConfig { n_traj: size, ..*sim };
        let opts = EnsembleOptions { with_psd: false, first_index: (b * size) as u64, ..Default::default() };
        let m = fit_noise_modes(&run_ensemble(model, &sub, &opts)?, model)?;
        st.push(m.stationary);
        beta.push(m.beta);
        gamma.push(m.gamma);
    }
    let (mst, sst) = batch_mean_se(&st);
    let (mb, sb) = batch_mean_se(&beta);
    let (mg, sg) = batch_mean_se(&gamma);
    let modes = NoiseModes { stationary: mst, beta: mb, gamma: mg };
    let (amplitude_stderr, phase_stderr) = polar_stderr(-mb, -mg, sb, sg);
    let eta_st = mst.max(0.0).sqrt();
    Ok(NonstationaryEstimate {
        modes,
        eta_st,
        eta_st_stderr: if eta_st > 0.0 { sst / (2.0 * eta_st) } else { sst.sqrt() },
        amplitude: modes.amplitude(),
        amplitude_stderr,
        phase: modes.phase(),
        phase_stderr,
        batches,
    })
}

/// Check of `eta_st^2 = 1 - 2 eta_f^2` between the two independent estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Consistency {
    pub eta_st_sq: f64,
    pub one_minus_two_eta_f_sq: f64,
    pub difference: f64,
    pub combined_stderr: f64,
    /// `|difference| <= 3 combined_stderr`.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionResult {
    pub eom_sign: EomSign,
    pub n_traj: usize,
    pub mean_fit: MeanFit,
    pub state: StateEstimate,
    pub nonstationary: Option<NonstationaryEstimate>,
    pub consistency: Option<Consistency>,
}

/// Runs the ensemble, fits the mean, and when the ensemble is large enough
/// adds the covariance-mode estimate and the consistency check between the two.
pub fn reconstruct(model: &Model, sim: &SimConfig, batches: usize) -> Result<ReconstructionResult> {
    if sim.q0 != 0.0 || sim.p0 != 0.0 {
        return Err(Error::InvalidInput("reconstruction assumes the oscillator starts at rest".into()));
    }
    let stats = run_ensemble(model, sim, &EnsembleOptions { with_psd: false, ..Default::default() })?;
    let mean_fit = fit_mean(&stats, model)?;
    let p = model.params;
    let state = recover_state(&mean_fit, p.g, p.r, p.n_qubits, model.eom)?;
    let nonstationary = if sim.n_traj >= MIN_NONSTATIONARY_TRAJ {
        Some(estimate_nonstationary(model, sim, batches)?)
    } else {
        None
    };
    let consistency = nonstationary.map(|ns| {
        let lhs = ns.eta_st * ns.eta_st;
        let rhs = 1.0 - 2.0 * state.eta_f * state.eta_f;
        let se = ((2.0 * ns.eta_st * ns.eta_st_stderr).powi(2) + (4.0 * state.eta_f * state.eta_f_stderr).powi(2)).sqrt();
        Consistency {
            eta_st_sq: lhs,
            one_minus_two_eta_f_sq: rhs,
            difference: lhs - rhs,
            combined_stderr: se,
            consistent: (lhs - rhs).abs() <= 3.0 * se,
        }
    });
    Ok(ReconstructionResult { eom_sign: model.eom, n_traj: sim.n_traj, mean_fit, state, nonstationary, consistency })
}
