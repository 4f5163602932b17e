// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Parameter types, SI <-> dimensionless conversion and the flat config format.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::EomSign;
use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Coupling above which the weak-coupling expansion is no longer trusted.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

/// Pure qubit state `sqrt(1-p)|0> + e^{i phi} sqrt(p)|1>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QubitState {
    p: f64,
    phi: f64,
}

impl QubitState {
    pub fn new(p: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} is outside [0, 1]")));
        }
        if !phi.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        Ok(Self { p, phi: wrap_angle(phi) })
    }

    pub fn ground() -> Self {
        Self { p: 0.0, phi: 0.0 }
    }

    pub fn excited() -> Self {
        Self { p: 1.0, phi: 0.0 }
    }

    /// Equal superposition on the equator at azimuth `phi`.
    pub fn equator(phi: f64) -> Self {
        Self { p: 0.5, phi: wrap_angle(phi) }
    }

    /// Bloch angles with `theta = 0` at `|0>`: `p = sin^2(theta/2)`.
    pub fn from_bloch(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::param("theta", format!("{theta} is outside [0, pi]")));
        }
        let s = (0.5 * theta).sin();
        Self::new((s * s).clamp(0.0, 1.0), phi)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Amplitude of the deterministic force and the non-stationary noise, `sqrt(p(1-p))`.
    pub fn eta_f(&self) -> f64 {
        (self.p * (1.0 - self.p)).max(0.0).sqrt()
    }

    /// Amplitude of the stationary noise, `sqrt((1-p)^2 + p^2)`.
    pub fn eta_st(&self) -> f64 {
        ((1.0 - self.p).powi(2) + self.p * self.p).sqrt()
    }

    /// The state with populations exchanged, `p -> 1 - p`, same phase.
    pub fn population_mirror(&self) -> Self {
        Self { p: 1.0 - self.p, phi: self.phi }
    }

    /// Amplitudes in the `(|0>, |1>)` basis.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        [
            Complex64::new((1.0 - self.p).sqrt(), 0.0),
            Complex64::from_polar(self.p.sqrt(), self.phi),
        ]
    }
}

/// Maps any finite angle into `[0, 2pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest distance between two angles on the circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// SI description of a platform. All frequencies are angular (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicalParams {
    mass: f64,
    omega_o: f64,
    omega_q: f64,
    coupling: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, omega_o: f64, omega_q: f64, coupling: f64) -> Result<Self> {
        positive("mass", mass)?;
        positive("omega_o", omega_o)?;
        positive("omega_q", omega_q)?;
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::param("coupling", format!("{coupling} must be finite and >= 0")));
        }
        Ok(Self { mass, omega_o, omega_q, coupling })
    }

    /// Same as [`PhysicalParams::new`] with ordinary frequencies in Hz.
    pub fn from_hz(mass: f64, f_o: f64, f_q: f64, f_coupling: f64) -> Result<Self> {
        Self::new(mass, TAU * f_o, TAU * f_q, TAU * f_coupling)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega_o(&self) -> f64 {
        self.omega_o
    }

    pub fn omega_q(&self) -> f64 {
        self.omega_q
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn hbar(&self) -> f64 {
        HBAR
    }

    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        Self::new(self.mass, self.omega_o, self.omega_q, coupling)
    }

    /// Ratio `omega_o / omega_q`.
    pub fn frequency_ratio(&self) -> f64 {
        self.omega_o / self.omega_q
    }

    /// Dimensionless coupling `Omega / (2 sqrt 2 omega_q)`.
    pub fn coupling_g(&self) -> f64 {
        self.coupling / (2.0 * std::f64::consts::SQRT_2 * self.omega_q)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be finite and > 0")))
    }
}

/// Zero-point position spread `sqrt(hbar / (2 m omega_o))`, in metres.
pub fn zero_point_position(pp: &PhysicalParams) -> f64 {
    (HBAR / (2.0 * pp.mass * pp.omega_o)).sqrt()
}

/// Zero-point momentum spread `sqrt(m hbar omega_o / 2)`, in kg·m/s.
pub fn zero_point_momentum(pp: &PhysicalParams) -> f64 {
    (pp.mass * HBAR * pp.omega_o / 2.0).sqrt()
}

/// Parameters of the dimensionless dynamics in rescaled time `tau = omega_q t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimensionlessParams {
    pub g: f64,
    pub r: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_qubits: u32,
}

impl DimensionlessParams {
    pub fn new(g: f64, r: f64, t_final: f64, n_qubits: u32) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::param("g", format!("{g} must be finite and >= 0")));
        }
        positive("r", r)?;
        positive("T", t_final)?;
        if n_qubits == 0 {
            return Err(Error::param("n_qubits", "must be at least 1"));
        }
        Ok(Self { g, r, t_final, n_qubits })
    }

    /// True when `g` exceeds the weak-coupling limit. Not an error.
    pub fn outside_weak_coupling(&self) -> bool {
        self.g > WEAK_COUPLING_LIMIT
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(g, self.r, self.t_final, self.n_qubits)
    }
}

/// `g = Omega/(2 sqrt2 omega_q)`, `r = omega_o/omega_q`, `T = omega_q t_si`.
pub fn derive_dimensionless(
    pp: &PhysicalParams,
    t_si: f64,
    n_qubits: u32,
) -> Result<DimensionlessParams> {
    positive("omega_o", pp.omega_o)?;
    positive("omega_q", pp.omega_q)?;
    positive("T_si", t_si)?;
    DimensionlessParams::new(pp.coupling_g(), pp.frequency_ratio(), pp.omega_q * t_si, n_qubits)
}

/// Numerical settings shared by the solvers and the ensemble driver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub n_fock: usize,
    pub q0: f64,
    pub p0: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 0.01, n_traj: 1000, seed: 0, n_fock: 40, q0: 0.0, p0: 0.0 }
    }
}

impl SimConfig {
    /// Largest `dt * max(1, r)` accepted by [`SimConfig::validate`].
    pub const MAX_PHASE_STEP: f64 = 0.05;

    pub fn validate(&self, dp: &DimensionlessParams) -> Result<()> {
        positive("dt", self.dt)?;
        if self.dt * dp.r.max(1.0) > Self::MAX_PHASE_STEP {
            return Err(Error::param(
                "dt",
                format!("dt * max(1, r) = {} exceeds {}", self.dt * dp.r.max(1.0), Self::MAX_PHASE_STEP),
            ));
        }
        if self.n_traj == 0 {
            return Err(Error::param("n_traj", "must be at least 1"));
        }
        if self.n_fock < 2 {
            return Err(Error::param("n_fock", "must be at least 2"));
        }
        if !(self.q0.is_finite() && self.p0.is_finite()) {
            return Err(Error::param("initial conditions", "must be finite"));
        }
        Ok(())
    }

    /// See [`uniform_grid`].
    pub fn grid(&self, t_final: f64) -> Vec<f64> {
        uniform_grid(t_final, self.dt)
    }
}

/// `n + 1` points `k * T / n` with `n = ceil(T / dt)`, so the spacing is at most `dt`.
pub fn uniform_grid(t_final: f64, dt: f64) -> Vec<f64> {
    let n = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_final / n as f64;
    (0..=n).map(|k| k as f64 * h).collect()
}

/// Everything a command needs, as read from a flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub physical: Option<PhysicalParams>,
    pub state: QubitState,
    pub g_override: Option<f64>,
    pub r_override: Option<f64>,
    pub t_final: f64,
    pub n_qubits: u32,
    pub sim: SimConfig,
    pub eom: EomSign,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physical: None,
            state: QubitState::equator(0.0),
            g_override: None,
            r_override: None,
            t_final: 40.0,
            n_qubits: 1,
            sim: SimConfig::default(),
            eom: EomSign::default(),
        }
    }
}

/// Coupling and frequency ratio used when no platform is configured.
pub const DEFAULT_G: f64 = 0.05;
pub const DEFAULT_R: f64 = 0.5;

const KEYS: &[&str] = &[
    "mass_kg", "omega_o_hz", "omega_q_hz", "coupling_hz", "p", "phi", "g_override", "r", "T", "dt",
    "n_traj", "seed", "n_fock", "n_qubits", "q0", "p0", "eom_sign",
];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment. Frequencies are in Hz.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut mass = None;
        let mut f_o = None;
        let mut f_q = None;
        let mut f_c = None;
        let mut p = cfg.state.p();
        let mut phi = cfg.state.phi();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let num = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("line {}: `{key}` expects a number, got `{value}`", lineno + 1)))
            };
            let int = || -> Result<u64> {
                value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("line {}: `{key}` expects an integer, got `{value}`", lineno + 1)))
            };
            match key {
                "mass_kg" => mass = Some(num()?),
                "omega_o_hz" => f_o = Some(num()?),
                "omega_q_hz" => f_q = Some(num()?),
                "coupling_hz" => f_c = Some(num()?),
                "p" => p = num()?,
                "phi" => phi = num()?,
                "g_override" => cfg.g_override = Some(num()?),
                "r" => cfg.r_override = Some(num()?),
                "T" => cfg.t_final = num()?,
                "dt" => cfg.sim.dt = num()?,
                "n_traj" => cfg.sim.n_traj = int()? as usize,
                "seed" => cfg.sim.seed = int()?,
                "n_fock" => cfg.sim.n_fock = int()? as usize,
                "n_qubits" => {
                    cfg.n_qubits = u32::try_from(int()?)
                        .map_err(|_| Error::Config(format!("line {}: n_qubits out of range", lineno + 1)))?
                }
                "q0" => cfg.sim.q0 = num()?,
                "p0" => cfg.sim.p0 = num()?,
                "eom_sign" => cfg.eom = value.parse()?,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}` (known: {})",
                        lineno + 1,
                        KEYS.join(", ")
                    )))
                }
            }
        }

        cfg.state = QubitState::new(p, phi)?;
        cfg.physical = match (mass, f_o, f_q, f_c) {
            (None, None, None, None) => None,
            (Some(m), Some(o), Some(q), Some(c)) => Some(PhysicalParams::from_hz(m, o, q, c)?),
            _ => {
                return Err(Error::Config(
                    "mass_kg, omega_o_hz, omega_q_hz and coupling_hz must be given together".into(),
                ))
            }
        };
        cfg.dimensionless()?;
        Ok(cfg)
    }

    /// Resolves `(g, r)` from overrides, then the platform, then the defaults.
    pub fn dimensionless(&self) -> Result<DimensionlessParams> {
        let (g, r) = match &self.physical {
            Some(pp) => (pp.coupling_g(), pp.frequency_ratio()),
            None => (DEFAULT_G, DEFAULT_R),
        };
        DimensionlessParams::new(
            self.g_override.unwrap_or(g),
            self.r_override.unwrap_or(r),
            self.t_final,
            self.n_qubits,
        )
    }

    /// Canonical `key = value` rendering; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(pp) = &self.physical {
            let _ = writeln!(s, "mass_kg = {:e}", pp.mass());
            let _ = writeln!(s, "omega_o_hz = {:e}", pp.omega_o() / TAU);
            let _ = writeln!(s, "omega_q_hz = {:e}", pp.omega_q() / TAU);
            let _ = writeln!(s, "coupling_hz = {:e}", pp.coupling() / TAU);
        }
        let _ = writeln!(s, "p = {:e}", self.state.p());
        let _ = writeln!(s, "phi = {:e}", self.state.phi());
        if let Some(g) = self.g_override {
            let _ = writeln!(s, "g_override = {g:e}");
        }
        if let Some(r) = self.r_override {
            let _ = writeln!(s, "r = {r:e}");
        }
        let _ = writeln!(s, "T = {:e}", self.t_final);
        let _ = writeln!(s, "dt = {:e}", self.sim.dt);
        let _ = writeln!(s, "n_traj = {}", self.sim.n_traj);
        let _ = writeln!(s, "seed = {}", self.sim.seed);
        let _ = writeln!(s, "n_fock = {}", self.sim.n_fock);
        let _ = writeln!(s, "n_qubits = {}", self.n_qubits);
        let _ = writeln!(s, "q0 = {:e}", self.sim.q0);
        let _ = writeln!(s, "p0 = {:e}", self.sim.p0);
        let _ = writeln!(s, "eom_sign = {}", self.eom);
        s
    }
}
