// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical oscillator dynamics under the qubit-induced force and noise.
//!
//! All three supported equation-of-motion conventions are linear systems
//! `x' = s r J x + b_c cos tau + b_s sin tau` with `J = [[0, 1], [-1, 0]]`,
//! `s = +-1`, and forcing at the qubit frequency (unity in rescaled time).
//! They differ in the sign of the free rotation and in how force and noise enter:
//!
//! * [`EomSign::Hamilton`]: obtained by varying the full influence action.
//!   The deterministic force is twice [`deterministic_force`], and this is the
//!   convention the exact quantum evolution agrees with.
//! * [`EomSign::Reduced`]: the second-order form with the drive `(1 - r) cos(tau + phi)`
//!   acting on `p` only. Its zero-start mean is the textbook
//!   `g eta/(1+r) [cos phi (cos r tau - cos tau) - sin phi (sin(r tau)/r - sin tau)]`.
//! * [`EomSign::Mirrored`]: the first-order form with the rotation reversed.

mod ensemble;
mod psd;

pub use ensemble::{run_ensemble, EnsembleOptions, EnsembleStats, Solver};
pub use psd::{welch_psd, Psd};

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoiseRealization;
use crate::params::{uniform_grid, DimensionlessParams, QubitState};

/// Below this distance from `r = 1` the closed-form mean is reported as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EomSign {
    #[default]
    Hamilton,
    Reduced,
    Mirrored,
}

impl EomSign {
    pub const ALL: [EomSign; 3] = [EomSign::Hamilton, EomSign::Reduced, EomSign::Mirrored];

    pub fn name(self) -> &'static str {
        match self {
            EomSign::Hamilton => "hamilton",
            EomSign::Reduced => "reduced",
            EomSign::Mirrored => "mirrored",
        }
    }

    /// Sign of the free rotation, `+1` for `q' = r p`.
    fn rotation(self) -> f64 {
        match self {
            EomSign::Mirrored => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for EomSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EomSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hamilton" => Ok(EomSign::Hamilton),
            "reduced" => Ok(EomSign::Reduced),
            "mirrored" => Ok(EomSign::Mirrored),
            other => Err(Error::Config(format!(
                "unknown eom_sign '{other}' (expected hamilton, reduced or mirrored)"
            ))),
        }
    }
}

/// `n g sqrt(p(1-p)) (cos(tau + phi), -sin(tau + phi))`.
pub fn deterministic_force(tau: f64, s: &QubitState, g: f64, n_qubits: u32) -> Vector2<f64> {
    let a = f64::from(n_qubits) * g * s.eta_f();
    let (sn, cs) = (tau + s.phi()).sin_cos();
    Vector2::new(a * cs, -a * sn)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    ClosedForm,
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub seed: Option<u64>,
    pub index: Option<u64>,
    pub solver: SolverTag,
}

impl Trajectory {
    pub fn with_id(mut self, seed: u64, index: u64) -> Self {
        self.seed = Some(seed);
        self.index = Some(index);
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,q,p\n");
        for ((t, q), p) in self.tau.iter().zip(&self.q).zip(&self.p) {
            out.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*q), fmt_f64(*p)));
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Oscillator parameters, qubit state and convention for one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Model {
    pub params: DimensionlessParams,
    pub state: QubitState,
    pub eom: EomSign,
}

impl Model {
    pub fn new(params: DimensionlessParams, state: QubitState, eom: EomSign) -> Self {
        Self { params, state, eom }
    }

    fn r(&self) -> f64 {
        self.params.r
    }

    /// Drift from the oscillator's own rotation.
    pub fn free_rhs(&self, x: Vector2<f64>) -> Vector2<f64> {
        let r = self.eom.rotation() * self.r();
        Vector2::new(r * x[1], -r * x[0])
    }

    /// Deterministic part of the forcing.
    pub fn drive(&self, tau: f64) -> Vector2<f64> {
        let f = deterministic_force(tau, &self.state, self.params.g, self.params.n_qubits);
        let r = self.r();
        match self.eom {
            EomSign::Hamilton => Vector2::new(2.0 * f[1], -2.0 * f[0]),
            EomSign::Reduced => Vector2::new(0.0, (1.0 - r) / r * f[0]),
            EomSign::Mirrored => Vector2::new(f[1], -f[0]),
        }
    }

    /// Noise part of the forcing; `n` qubits add incoherently, `sqrt(n)` in amplitude.
    pub fn noise_drive(&self, tau: f64, noise: &NoiseRealization) -> Vector2<f64> {
        let gs = self.params.g * f64::from(self.params.n_qubits).sqrt();
        let (lq, lp) = (noise.lambda_q(tau), noise.lambda_p(tau));
        match self.eom {
            EomSign::Hamilton => Vector2::new(-gs * lp, gs * lq),
            EomSign::Reduced => {
                let r = self.r();
                Vector2::new(0.0, gs / r * (noise.dlambda_p(tau) + r * lq))
            }
            EomSign::Mirrored => Vector2::new(-gs * lq, gs * lp),
        }
    }

    pub fn rhs(&self, tau: f64, x: Vector2<f64>, noise: &NoiseRealization) -> Vector2<f64> {
        self.free_rhs(x) + self.drive(tau) + self.noise_drive(tau, noise)
    }

    /// Zero-start mean of `q` on `tau`, `eta (m_1 cos phi B_1 + m_2 sin phi B_2)`
    /// with the basis and weights of [`mean_basis`] and [`mean_weights`].
    pub fn mean_closed_form(&self, tau: &[f64]) -> Result<Vec<f64>> {
        let r = self.r();
        if (r - 1.0).abs() < RESONANCE_TOL {
            return Err(Error::Resonance { r });
        }
        let [m1, m2] = mean_weights(self.eom, self.params.g, r, self.params.n_qubits);
        let eta = self.state.eta_f();
        let (sp, cp) = self.state.phi().sin_cos();
        let (b1, b2) = mean_basis(self.eom, r, tau);
        Ok(b1.iter().zip(&b2).map(|(x, y)| eta * (m1 * cp * x + m2 * sp * y)).collect())
    }

    /// Exact solution for one noise draw: the homogeneous rotation plus the
    /// Duhamel integral of the frequency-one forcing. Valid for every `r`,
    /// including resonance where it reduces to the secular `tau sin`, `tau cos` form.
    pub fn solve_closed_form(&self, noise: &NoiseRealization, ics: (f64, f64), tau: &[f64]) -> Trajectory {
        let forcing = |t: f64| self.drive(t) + self.noise_drive(t, noise);
        let resp = Response::new(self, forcing);
        let x0 = Vector2::new(ics.0, ics.1);
        let (q, p) = tau.iter().map(|&t| {
            let x = resp.at(t, x0);
            (x[0], x[1])
        }).unzip();
        Trajectory { tau: tau.to_vec(), q, p, seed: None, index: None, solver: SolverTag::ClosedForm }
    }

    /// Classical RK4 with the forcing evaluated exactly at stage times.
    pub fn integrate_rk4(
        &self,
        noise: &NoiseRealization,
        ics: (f64, f64),
        dt: f64,
        index: u64,
    ) -> Result<Trajectory> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        let tau = uniform_grid(self.params.t_final, dt);
        let h = tau[1] - tau[0];
        let mut x = Vector2::new(ics.0, ics.1);
        let mut q = Vec::with_capacity(tau.len());
        let mut p = Vec::with_capacity(tau.len());
        q.push(x[0]);
        p.push(x[1]);
        for &t in &tau[..tau.len() - 1] {
            let k1 = self.rhs(t, x, noise);
            let k2 = self.rhs(t + 0.5 * h, x + 0.5 * h * k1, noise);
            let k3 = self.rhs(t + 0.5 * h, x + 0.5 * h * k2, noise);
            let k4 = self.rhs(t + h, x + h * k3, noise);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(Error::Numeric { index, reason: format!("non-finite state at tau = {t}") });
            }
            q.push(x[0]);
            p.push(x[1]);
        }
        Ok(Trajectory { tau, q, p, seed: None, index: Some(index), solver: SolverTag::Rk4 })
    }
}

/// Weights `(m_1, m_2)` of the zero-start mean, per unit `eta`.
pub fn mean_weights(eom: EomSign, g: f64, r: f64, n_qubits: u32) -> [f64; 2] {
    let a = g * f64::from(n_qubits);
    match eom {
        EomSign::Hamilton => [-2.0 * a / (1.0 - r), 2.0 * a / (1.0 - r)],
        EomSign::Reduced => [a / (1.0 + r), -a / (1.0 + r)],
        EomSign::Mirrored => [-a / (1.0 + r), -a / (1.0 + r)],
    }
}

/// Basis functions of the zero-start mean. `B_1 = cos r tau - cos tau` always;
/// `B_2` is `sin(r tau)/r - sin tau`, `sin r tau - sin tau` or `sin r tau + sin tau`
/// for the reduced, Hamilton and mirrored conventions.
pub fn mean_basis(eom: EomSign, r: f64, tau: &[f64]) -> (Vec<f64>, Vec<f64>) {
    tau.iter()
        .map(|&t| {
            let (srt, crt) = (r * t).sin_cos();
            let (st, ct) = t.sin_cos();
            let b2 = match eom {
                EomSign::Reduced => srt / r - st,
                EomSign::Hamilton => srt - st,
                EomSign::Mirrored => srt + st,
            };
            (crt - ct, b2)
        })
        .unzip()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Closed-form response of `x' = s r J x + b_c cos tau + b_s sin tau`.
pub(crate) struct Response {
    r: f64,
    sign: f64,
    b_c: Vector2<f64>,
    b_s: Vector2<f64>,
}

impl Response {
    /// `forcing` must be a pure frequency-one sinusoid; its coefficients are
    /// read off at `tau = 0` and `tau = pi/2`.
    pub(crate) fn new(model: &Model, forcing: impl Fn(f64) -> Vector2<f64>) -> Self {
        Self {
            r: model.r(),
            sign: model.eom.rotation(),
            b_c: forcing(0.0),
            b_s: forcing(std::f64::consts::FRAC_PI_2),
        }
    }

    pub(crate) fn at(&self, t: f64, x0: Vector2<f64>) -> Vector2<f64> {
        let r = self.r;
        let j = |v: Vector2<f64>| Vector2::new(v[1], -v[0]);
        let c = |k: f64| t * (r * t - 0.5 * k * t).cos() * sinc(0.5 * k * t);
        let s = |k: f64| t * (r * t - 0.5 * k * t).sin() * sinc(0.5 * k * t);
        let (cm, cp, sm, sp) = (c(r - 1.0), c(r + 1.0), s(r - 1.0), s(r + 1.0));
        let i_cc = 0.5 * (cm + cp);
        let i_cs = 0.5 * (sm - sp);
        let i_sc = 0.5 * (sm + sp);
        let i_ss = 0.5 * (cp - cm);
        let (srt, crt) = (r * t).sin_cos();
        crt * x0
            + self.sign * srt * j(x0)
            + i_cc * self.b_c
            + i_cs * self.b_s
            + self.sign * j(i_sc * self.b_c + i_ss * self.b_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_noise, trajectory_rng};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn model(g: f64, r: f64, t: f64, s: QubitState, eom: EomSign) -> Model {
        Model::new(DimensionlessParams::new(g, r, t, 1).unwrap(), s, eom)
    }

    #[test]
    fn force_examples() {
        assert_eq!(deterministic_force(1.3, &QubitState::ground(), 0.1, 1), Vector2::zeros());
        let f = deterministic_force(0.0, &QubitState::equator(0.0), 0.1, 1);
        assert_abs_diff_eq!(f[0], 0.05, epsilon = 1e-16);
        assert_abs_diff_eq!(f[1], 0.0, epsilon = 1e-16);
        let f = deterministic_force(0.0, &QubitState::equator(PI / 2.0), 0.1, 1);
        assert_abs_diff_eq!(f[0], 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(f[1], -0.05, epsilon = 1e-16);
        assert_eq!(deterministic_force(0.4, &QubitState::equator(0.3), 0.1, 4), 4.0 * deterministic_force(0.4, &QubitState::equator(0.3), 0.1, 1));
    }

    #[test]
    fn force_generates_linear_influence_phase() {
        // The linear influence phase equals -int 2 F . J with J = (J_q, J_p) the
        // path difference written through W_x = -int u.J, W_y = int v.J.
        use crate::influence::{influence_phases, PathFunctionals, DriveIntegrals};
        let s = QubitState::new(0.3, 0.9).unwrap();
        let g = 0.07;
        // J concentrated at one instant tau0 with components (jq, jp)
        let (tau0, jq, jp) = (1.7f64, 0.4, -1.1);
        let (st, ct) = tau0.sin_cos();
        let wx = -(ct * jq - st * jp);
        let wy = st * jq + ct * jp;
        let f = PathFunctionals { w_x: wx, w_y: wy, ..PathFunctionals::from_integrals(DriveIntegrals::default(), DriveIntegrals::default()) };
        let lin = influence_phases(&f, &s, g, 1).forces_linear;
        let force = deterministic_force(tau0, &s, g, 1);
        assert_abs_diff_eq!(lin, -2.0 * (force[0] * jq + force[1] * jp), epsilon = 1e-15);
    }

    #[test]
    fn eom_names_round_trip() {
        for e in EomSign::ALL {
            assert_eq!(e.to_string().parse::<EomSign>().unwrap(), e);
        }
        assert_eq!(" Reduced ".parse::<EomSign>().unwrap(), EomSign::Reduced);
        assert!("sideways".parse::<EomSign>().is_err());
        assert_eq!(EomSign::default(), EomSign::Hamilton);
    }

    #[test]
    fn mean_examples() {
        let tau = [0.0, PI];
        let m = model(0.05, 0.5, 10.0, QubitState::equator(0.0), EomSign::Reduced);
        let mean = m.mean_closed_form(&tau).unwrap();
        assert_eq!(mean[0], 0.0);
        assert_abs_diff_eq!(mean[1], 0.05 / 3.0, epsilon = 1e-15);
        let m = model(0.05, 0.5, 10.0, QubitState::ground(), EomSign::Hamilton);
        assert!(m.mean_closed_form(&[0.0, 1.0, 2.0]).unwrap().iter().all(|&v| v == 0.0));
        let m = model(0.05, 1.0, 10.0, QubitState::equator(0.0), EomSign::Reduced);
        assert!(matches!(m.mean_closed_form(&tau), Err(Error::Resonance { .. })));
    }

    #[test]
    fn zero_noise_trajectory_equals_mean() {
        let tau = uniform_grid(30.0, 0.01);
        for eom in EomSign::ALL {
            let m = model(0.05, 0.43, 30.0, QubitState::new(0.3, 1.0).unwrap(), eom);
            let traj = m.solve_closed_form(&NoiseRealization::default(), (0.0, 0.0), &tau);
            let mean = m.mean_closed_form(&tau).unwrap();
            let d = traj.q.iter().zip(&mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-13, "{eom}: {d}");
        }
    }

    #[test]
    fn mean_matches_hand_solution_of_second_order_equation() {
        // q'' + r^2 q = g eta (1-r) cos(tau+phi) from rest, solved by hand for the reduced form
        let (g, r, p, phi) = (0.05, 0.5, 0.5, 0.0);
        let eta = (p * (1.0f64 - p)).sqrt();
        let c = -g * eta / (1.0 + r);
        let hand = |t: f64| c * ((t + phi).cos() - phi.cos() * (r * t).cos() + phi.sin() / r * (r * t).sin());
        let m = model(g, r, 10.0, QubitState::equator(phi), EomSign::Reduced);
        let tau: Vec<f64> = (0..50).map(|k| 0.2 * k as f64).collect();
        for (t, v) in tau.iter().zip(m.mean_closed_form(&tau).unwrap()) {
            assert_abs_diff_eq!(v, hand(*t), epsilon = 1e-15);
        }
    }

    #[test]
    fn free_oscillator() {
        let tau: Vec<f64> = (0..100).map(|k| 0.37 * k as f64).collect();
        for eom in [EomSign::Hamilton, EomSign::Reduced] {
            let m = model(0.0, 0.6, 40.0, QubitState::equator(0.2), eom);
            let tr = m.solve_closed_form(&NoiseRealization::new(1.0, -2.0), (1.0, 0.0), &tau);
            for (i, &t) in tau.iter().enumerate() {
                assert_abs_diff_eq!(tr.q[i], (0.6 * t).cos(), epsilon = 1e-14);
                assert_abs_diff_eq!(tr.p[i], -(0.6 * t).sin(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        for eom in EomSign::ALL {
            for (idx, r) in [(0u64, 0.5), (1, 1.0), (2, 1.7)] {
                let m = model(0.08, r, 50.0, QubitState::new(0.3, 1.0).unwrap(), eom);
                let noise = sample_noise(&m.state, &mut trajectory_rng(4, idx));
                let rk = m.integrate_rk4(&noise, (0.3, -0.2), 1e-3, idx).unwrap();
                let cf = m.solve_closed_form(&noise, (0.3, -0.2), &rk.tau);
                assert!(rk.max_abs_diff(&cf) <= 1e-8, "{eom} r={r}: {}", rk.max_abs_diff(&cf));
            }
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let m = model(0.1, 0.7, 20.0, QubitState::new(0.4, 0.5).unwrap(), EomSign::Hamilton);
        let noise = NoiseRealization::new(0.8, -0.3);
        let err = |dt: f64| {
            let rk = m.integrate_rk4(&noise, (0.0, 0.0), dt, 0).unwrap();
            rk.max_abs_diff(&m.solve_closed_form(&noise, (0.0, 0.0), &rk.tau))
        };
        let ratio = err(0.04) / err(0.02);
        assert!(ratio >= 12.0, "{ratio}");
    }

    #[test]
    fn free_rk4_conserves_radius() {
        let m = model(0.0, 0.9, 100.0, QubitState::ground(), EomSign::Reduced);
        let tr = m.integrate_rk4(&NoiseRealization::default(), (0.6, 0.8), 1e-3, 0).unwrap();
        for (q, p) in tr.q.iter().zip(&tr.p) {
            assert!((q * q + p * p - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn resonance_grows_secularly() {
        let m = model(0.05, 1.0, 60.0, QubitState::equator(0.0), EomSign::Hamilton);
        let rk = m.integrate_rk4(&NoiseRealization::default(), (0.0, 0.0), 1e-3, 0).unwrap();
        let cf = m.solve_closed_form(&NoiseRealization::default(), (0.0, 0.0), &rk.tau);
        assert!(rk.max_abs_diff(&cf) < 1e-6);
        // q = -g tau sin(tau) for this case: envelope grows linearly
        let n = rk.tau.len();
        let late = rk.q[n * 3 / 4..].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let early = rk.q[..n / 4].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(late > 2.5 * early);
        for (t, q) in rk.tau.iter().zip(&cf.q).step_by(997) {
            assert_abs_diff_eq!(*q, -0.05 * t * t.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn non_finite_state_reports_index() {
        let m = model(0.05, 0.5, 1.0, QubitState::ground(), EomSign::Hamilton);
        let err = m.integrate_rk4(&NoiseRealization::default(), (f64::NAN, 0.0), 1e-2, 17).unwrap_err();
        assert!(matches!(err, Error::Numeric { index: 17, .. }));
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let m = model(0.05, 0.5, 1.0, QubitState::equator(0.0), EomSign::Hamilton);
        let tr = m.solve_closed_form(&NoiseRealization::default(), (0.1, 0.0), &[0.0, 0.5]);
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tau,q,p"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 0.1, 0.0]);
        let row: Vec<f64> = csv.lines().nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[1], tr.q[1]);
    }

    proptest! {
        #[test]
        fn superposition(alpha in 0.1..2.0f64, beta in -2.0..2.0f64, zx in -2.0..2.0f64, zy in -2.0..2.0f64, r in 0.2..2.0f64) {
            let tau: Vec<f64> = (0..40).map(|k| 0.5 * k as f64).collect();
            let s = QubitState::new(0.3, 0.4).unwrap();
            let m = model(0.05, r, 20.0, s, EomSign::Hamilton);
            let scaled = model(0.05 * alpha, r, 20.0, s, EomSign::Hamilton);
            let noise = NoiseRealization::new(zx, zy);
            // g -> alpha g scales the drive; zeta -> zeta beta / alpha then scales the noise by beta
            let det = m.solve_closed_form(&NoiseRealization::default(), (0.0, 0.0), &tau);
            let sto = m.solve_closed_form(&noise, (0.0, 0.0), &tau);
            let combined = scaled.solve_closed_form(&noise.scaled(beta / alpha), (0.0, 0.0), &tau);
            for i in 0..tau.len() {
                let expect = alpha * det.q[i] + beta * (sto.q[i] - det.q[i]);
                prop_assert!((combined.q[i] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            }
        }
    }
}
