// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! SI force scales, platform presets and Bloch-sphere maps of the force amplitudes.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoiseRealization;
use crate::params::{zero_point_position, PhysicalParams, QubitState};

/// Experimental platforms with published coupling parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    /// Trapped ion: motional mode coupled to a hyperfine qubit.
    Ion,
    /// Levitated nanodiamond with an NV spin.
    Nanodiamond,
    /// Bulk piezoelectric resonator coupled to a superconducting qubit.
    Piezo,
}

impl Platform {
    pub const ALL: [Platform; 3] = [Platform::Ion, Platform::Nanodiamond, Platform::Piezo];

    pub fn name(self) -> &'static str {
        match self {
            Platform::Ion => "ion",
            Platform::Nanodiamond => "nanodiamond",
            Platform::Piezo => "piezo",
        }
    }

    /// `(mass kg, Omega/2pi Hz, omega_o/2pi Hz, omega_q/2pi Hz)` as reported by
    /// the source experiments.
    pub fn source_values(self) -> (f64, f64, f64, f64) {
        match self {
            Platform::Ion => (14.96e-27, 500e3, 11.2e6, 1250e6),
            Platform::Nanodiamond => (54.98e-18, 52e3, 0.5e6, 0.25e6),
            Platform::Piezo => (16.20e-9, 1570e3, 12e6, 12e6),
        }
    }

    /// The same values rounded to two significant figures.
    pub fn rounded_values(self) -> (f64, f64, f64, f64) {
        match self {
            Platform::Ion => (1.5e-26, 5.0e5, 1.1e7, 1.2e9),
            Platform::Nanodiamond => (5.5e-17, 5.2e4, 5.0e5, 2.5e5),
            Platform::Piezo => (1.6e-8, 1.6e6, 1.2e7, 1.2e7),
        }
    }

    pub fn params(self) -> PhysicalParams {
        let (m, c, o, q) = self.source_values();
        PhysicalParams::from_hz(m, o, q, c).expect("preset values are valid")
    }

    pub fn rounded_params(self) -> PhysicalParams {
        let (m, c, o, q) = self.rounded_values();
        PhysicalParams::from_hz(m, o, q, c).expect("preset values are valid")
    }

    /// Published `(f0, xi_q0, xi_p0)` in newtons; `f0` is absent where the
    /// oscillator and qubit are resonant.
    pub fn published_forces(self) -> (Option<f64>, f64, f64) {
        match self {
            Platform::Ion => (Some(9.1e-19), 8.3e-21, 9.2e-19),
            Platform::Nanodiamond => (Some(5.5e-18), 1.1e-17, 5.5e-18),
            Platform::Piezo => (None, 2.8e-11, 2.8e-11),
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Platform::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown platform '{s}'")))
    }
}

/// `hbar Omega / (4 sqrt2 q0)`, in newtons.
pub fn characteristic_force(pp: &PhysicalParams) -> f64 {
    pp.hbar() * pp.coupling() / (4.0 * SQRT_2 * zero_point_position(pp))
}

/// Relative frequency mismatch below which `f0` is reported as degenerate.
const DEGENERATE_DETUNING: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForceBudget {
    pub f0_char: f64,
    /// `f0_char |omega_q/omega_o - 1|`.
    pub f0: f64,
    /// True when `omega_q = omega_o` and the deterministic force vanishes.
    pub f0_degenerate: bool,
    pub xi_q0: f64,
    pub xi_p0: f64,
}

pub fn force_magnitudes(pp: &PhysicalParams) -> ForceBudget {
    let f = characteristic_force(pp);
    let ratio = pp.omega_q() / pp.omega_o();
    ForceBudget {
        f0_char: f,
        f0: f * (ratio - 1.0).abs(),
        f0_degenerate: (ratio - 1.0).abs() < DEGENERATE_DETUNING,
        xi_q0: f,
        xi_p0: f * ratio,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SiForces {
    pub f: f64,
    pub xi_q: f64,
    pub xi_p: f64,
}

/// Deterministic and stochastic forces in newtons at time `t` (seconds).
pub fn dimensional_forces(t: f64, s: &QubitState, pp: &PhysicalParams, noise: &NoiseRealization) -> SiForces {
    let f0 = characteristic_force(pp);
    let r = pp.frequency_ratio();
    let tau = pp.omega_q() * t;
    SiForces {
        f: f0 * (1.0 - r) / r * s.eta_f() * (tau + s.phi()).cos(),
        xi_q: f0 * noise.lambda_q(tau),
        // (f0/omega_o) d lambda_p/dt with d/dt = omega_q d/dtau
        xi_p: f0 / r * noise.dlambda_p(tau),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub platform: Platform,
    pub quantity: &'static str,
    pub computed: Option<f64>,
    pub published: Option<f64>,
    pub rel_error: Option<f64>,
}

impl TableRow {
    pub fn within(&self, tol: f64) -> bool {
        self.rel_error.is_none_or(|e| e <= tol)
    }
}

/// Computed force magnitudes for every preset against the published values.
pub fn force_table(use_rounded: bool) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for pl in Platform::ALL {
        let pp = if use_rounded { pl.rounded_params() } else { pl.params() };
        let b = force_magnitudes(&pp);
        let (f0, xq, xp) = pl.published_forces();
        let f0_val = (!b.f0_degenerate).then_some(b.f0);
        for (quantity, computed, published) in
            [("f0", f0_val, f0), ("xi_q0", Some(b.xi_q0), Some(xq)), ("xi_p0", Some(b.xi_p0), Some(xp))]
        {
            let rel_error = computed.zip(published).map(|(c, p)| (c - p).abs() / p);
            rows.push(TableRow { platform: pl, quantity, computed, published, rel_error });
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochMap {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Row-major over `(theta, phi)`.
    pub eta_f: Vec<f64>,
    pub eta_st: Vec<f64>,
}

impl BlochMap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,phi,eta_f,eta_st\n");
        let np = self.phi.len();
        for (i, t) in self.theta.iter().enumerate() {
            for (j, p) in self.phi.iter().enumerate() {
                let k = i * np + j;
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    crate::dynamics::fmt_f64(*t),
                    crate::dynamics::fmt_f64(*p),
                    crate::dynamics::fmt_f64(self.eta_f[k]),
                    crate::dynamics::fmt_f64(self.eta_st[k])
                ));
            }
        }
        out
    }
}

/// `eta_f`, `eta_st` on `resolution` polar angles in `[0, pi]` times
/// `resolution` azimuths in `[0, 2pi)`, with `p = sin^2(theta/2)`.
pub fn bloch_map(resolution: usize) -> Result<BlochMap> {
    if resolution < 8 {
        return Err(Error::param("resolution", format!("{resolution} is below 8")));
    }
    let theta: Vec<f64> = (0..resolution).map(|i| PI * i as f64 / (resolution - 1) as f64).collect();
    let phi: Vec<f64> = (0..resolution).map(|j| TAU * j as f64 / resolution as f64).collect();
    let mut eta_f = Vec::with_capacity(resolution * resolution);
    let mut eta_st = Vec::with_capacity(resolution * resolution);
    for &t in &theta {
        for &p in &phi {
            let s = QubitState::from_bloch(t, p)?;
            eta_f.push(s.eta_f());
            eta_st.push(s.eta_st());
        }
    }
    Ok(BlochMap { theta, phi, eta_f, eta_st })
}
