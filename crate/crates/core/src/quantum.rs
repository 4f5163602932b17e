// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact evolution of the qubit and a truncated oscillator.
//!
//! In units of `hbar omega_q` the Hamiltonian is
//! `r (n + 1/2) + sz/2 + g (q sx - p sy)`, which is real symmetric in the
//! product basis `|level> (x) |n>` (level-major). Evolution uses its full
//! eigendecomposition, so unitarity holds to rounding at every output time.
//! The quadrature coupling equals `sqrt(2) g (a |0><1| + a^dagger |1><0|)`;
//! [`Coupling::Ladder`] doubles it, matching `(Omega/2)(a s+ + a^dagger s-)` with
//! `s+- = sx +- i sy`. Both conserve `a^dagger a + sz/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{EomSign, Model};
use crate::error::{Error, Result};
use crate::linalg::log_log_slope;
use crate::noise::{quad_coeffs, NoiseRealization};
use crate::params::{DimensionlessParams, QubitState};

/// Tail population (top two Fock levels) above which a truncation is rejected.
pub const TAIL_LIMIT: f64 = 1e-8;
/// Largest Fock cutoff the automatic doubling will try.
pub const MAX_FOCK: usize = 640;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    #[default]
    Quadrature,
    Ladder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub matrix: DMatrix<f64>,
    pub n_fock: usize,
    pub coupling: Coupling,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn idx(&self, level: usize, n: usize) -> usize {
        level * (self.n_fock + 1) + n
    }
}

/// Hamiltonian on `2 (n_fock + 1)` states.
pub fn build_hamiltonian(dp: &DimensionlessParams, n_fock: usize, coupling: Coupling) -> Result<Hamiltonian> {
    if n_fock < 1 {
        return Err(Error::param("n_fock", "must be at least 1"));
    }
    let m = n_fock + 1;
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    let c = match coupling {
        Coupling::Quadrature => std::f64::consts::SQRT_2 * dp.g,
        Coupling::Ladder => 2.0 * std::f64::consts::SQRT_2 * dp.g,
    };
    for n in 0..m {
        h[(n, n)] = dp.r * (n as f64 + 0.5) + 0.5;
        h[(m + n, m + n)] = dp.r * (n as f64 + 0.5) - 0.5;
        if n >= 1 {
            // <0, n-1| a |1, n> = sqrt(n)
            let v = c * (n as f64).sqrt();
            h[(n - 1, m + n)] = v;
            h[(m + n, n - 1)] = v;
        }
    }
    Ok(Hamiltonian { matrix: h, n_fock, coupling })
}

/// Oscillator part of the initial product state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub enum OscillatorInit {
    #[default]
    Ground,
    /// Coherent state centred on `(q, p)`.
    Coherent { q: f64, p: f64 },
}

impl OscillatorInit {
    fn amplitudes(&self, n_fock: usize) -> Vec<Complex64> {
        match *self {
            OscillatorInit::Ground => {
                let mut v = vec![Complex64::new(0.0, 0.0); n_fock + 1];
                v[0] = Complex64::new(1.0, 0.0);
                v
            }
            OscillatorInit::Coherent { q, p } => {
                let alpha = Complex64::new(q, p) / std::f64::consts::SQRT_2;
                let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
                let mut v = Vec::with_capacity(n_fock + 1);
                for n in 0..=n_fock {
                    if n > 0 {
                        c *= alpha / (n as f64).sqrt();
                    }
                    v.push(c);
                }
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumTrace {
    pub tau: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_q: Vec<f64>,
    /// `<a^dagger a + sz/2>` at each time.
    pub excitation: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_norm_error: f64,
    pub max_tail: f64,
    pub n_fock: usize,
}

fn tail(h: &Hamiltonian, psi: &[Complex64]) -> f64 {
    let top = [h.n_fock, h.n_fock - 1];
    (0..2).flat_map(|l| top.map(|n| psi[h.idx(l, n)].norm_sqr())).sum()
}

fn initial_state(h: &Hamiltonian, s: &QubitState, osc: OscillatorInit) -> Vec<Complex64> {
    let a = s.amplitudes();
    let o = osc.amplitudes(h.n_fock);
    let mut psi = vec![Complex64::new(0.0, 0.0); h.dim()];
    for l in 0..2 {
        for n in 0..=h.n_fock {
            psi[h.idx(l, n)] = a[l] * o[n];
        }
    }
    psi
}

/// `<q>`, `<p>`, `<q^2>` of `psi`.
fn quadratures(h: &Hamiltonian, psi: &[Complex64]) -> (f64, f64, f64) {
    let m = h.n_fock + 1;
    let mut q = 0.0;
    let mut p = 0.0;
    let mut q2 = 0.0;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    for l in 0..2 {
        let b = &psi[l * m..(l + 1) * m];
        for n in 0..m {
            // (q psi)_n = (sqrt(n+1) psi_{n+1} + sqrt(n) psi_{n-1}) / sqrt 2
            let up = if n + 1 < m { (n as f64 + 1.0).sqrt() * b[n + 1] } else { Complex64::new(0.0, 0.0) };
            let dn = if n > 0 { (n as f64).sqrt() * b[n - 1] } else { Complex64::new(0.0, 0.0) };
            let qn = (up + dn) * s2;
            // p = -i (a - a^dagger)/sqrt 2
            let pn = (up - dn) * Complex64::new(0.0, -s2);
            q += (b[n].conj() * qn).re;
            p += (b[n].conj() * pn).re;
            q2 += qn.norm_sqr();
        }
    }
    (q, p, q2)
}

/// Evolves the product of `s` and `osc` under `h`, sampling on `tau`.
pub fn evolve_expectations(
    h: &Hamiltonian,
    s: &QubitState,
    osc: OscillatorInit,
    tau: &[f64],
) -> Result<QuantumTrace> {
    let psi0 = initial_state(h, s, osc);
    let t0 = tail(h, &psi0);
    if t0 >= TAIL_LIMIT {
        return Err(Error::Truncation { n_fock: h.n_fock, tail: t0, required: 2 * h.n_fock });
    }
    let eig = SymmetricEigen::try_new(h.matrix.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen("Hamiltonian eigendecomposition did not converge".into()))?;
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let c0 = v.transpose() * DVector::from_vec(psi0);
    let m = h.n_fock + 1;
    let diag_n: Vec<f64> = (0..h.dim()).map(|i| (i % m) as f64 + if i < m { 0.5 } else { -0.5 }).collect();

    let mut out = QuantumTrace {
        tau: tau.to_vec(),
        mean_q: Vec::with_capacity(tau.len()),
        mean_p: Vec::with_capacity(tau.len()),
        var_q: Vec::with_capacity(tau.len()),
        excitation: Vec::with_capacity(tau.len()),
        energy: Vec::with_capacity(tau.len()),
        max_norm_error: 0.0,
        max_tail: 0.0,
        n_fock: h.n_fock,
    };
    for &t in tau {
        let ct = DVector::from_iterator(
            h.dim(),
            c0.iter().zip(eig.eigenvalues.iter()).map(|(c, e)| c * Complex64::from_polar(1.0, -e * t)),
        );
        let energy: f64 = ct.iter().zip(eig.eigenvalues.iter()).map(|(c, e)| c.norm_sqr() * e).sum();
        let psi = &v * ct;
        let psi = psi.as_slice();
        let tl = tail(h, psi);
        if tl >= TAIL_LIMIT {
            return Err(Error::Truncation { n_fock: h.n_fock, tail: tl, required: 2 * h.n_fock });
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let (q, p, q2) = quadratures(h, psi);
        out.mean_q.push(q);
        out.mean_p.push(p);
        out.var_q.push(q2 - q * q);
        out.excitation.push(psi.iter().zip(&diag_n).map(|(z, d)| z.norm_sqr() * d).sum());
        out.energy.push(energy);
        out.max_norm_error = out.max_norm_error.max((norm.sqrt() - 1.0).abs());
        out.max_tail = out.max_tail.max(tl);
    }
    Ok(out)
}

/// [`evolve_expectations`], doubling `n_fock` on truncation failures up to [`MAX_FOCK`].
pub fn evolve_auto(
    dp: &DimensionlessParams,
    s: &QubitState,
    osc: OscillatorInit,
    tau: &[f64],
    n_fock: usize,
    coupling: Coupling,
) -> Result<QuantumTrace> {
    let mut n = n_fock.max(2);
    loop {
        let h = build_hamiltonian(dp, n, coupling)?;
        match evolve_expectations(&h, s, osc, tau) {
            Err(Error::Truncation { .. }) if 2 * n <= MAX_FOCK => n *= 2,
            other => return other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConventionDiscrepancy {
    pub eom_sign: EomSign,
    /// `max_tau |<q> - q_classical|` for each coupling.
    pub max_error: Vec<f64>,
    pub scaling_exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub g_values: Vec<f64>,
    pub conventions: Vec<ConventionDiscrepancy>,
    pub preferred_sign_convention: EomSign,
    /// Errors and exponent of the preferred convention.
    pub max_error: Vec<f64>,
    pub scaling_exponent: f64,
    /// `max |var_q - var_classical|` using the quantum variance as is.
    pub var_error_raw: Vec<f64>,
    /// Same with the vacuum `1/2` removed from the quantum variance.
    pub var_error_excess: Vec<f64>,
    pub n_fock: usize,
}

/// Variance of `q` from the noise alone, exact for the classical model.
fn classical_var_q(model: &Model, tau: &[f64]) -> Vec<f64> {
    let base = model.solve_closed_form(&NoiseRealization::default(), (0.0, 0.0), tau);
    let rx = model.solve_closed_form(&NoiseRealization::new(1.0, 0.0), (0.0, 0.0), tau);
    let ry = model.solve_closed_form(&NoiseRealization::new(0.0, 1.0), (0.0, 0.0), tau);
    let c = quad_coeffs(&model.state);
    (0..tau.len())
        .map(|i| {
            let (x, y) = (rx.q[i] - base.q[i], ry.q[i] - base.q[i]);
            c.a * x * x + 2.0 * c.c * x * y + c.b * y * y
        })
        .collect()
}

/// Quantum `<q>` against the classical zero-start mean for each coupling in
/// `gs` and each equation-of-motion convention. The oscillator starts in its
/// ground state, the counterpart of zero classical initial conditions.
pub fn compare_classical_quantum(
    base: &DimensionlessParams,
    s: &QubitState,
    gs: &[f64],
    tau: &[f64],
    n_fock: usize,
) -> Result<OracleReport> {
    if gs.len() < 2 {
        return Err(Error::InvalidInput("need at least two coupling values".into()));
    }
    if let Some(g) = gs.iter().find(|&&g| !(0.0..=0.05).contains(&g)) {
        return Err(Error::param("g", format!("{g} outside [0, 0.05]")));
    }
    let mut per: Vec<ConventionDiscrepancy> = EomSign::ALL
        .iter()
        .map(|&e| ConventionDiscrepancy { eom_sign: e, max_error: Vec::new(), scaling_exponent: f64::NAN })
        .collect();
    let mut var_raw = Vec::new();
    let mut var_excess = Vec::new();
    let mut used_fock = n_fock;
    for &g in gs {
        let dp = base.with_g(g)?;
        let qt = evolve_auto(&dp, s, OscillatorInit::Ground, tau, n_fock, Coupling::Quadrature)?;
        used_fock = used_fock.max(qt.n_fock);
        for d in per.iter_mut() {
            let model = Model::new(dp, *s, d.eom_sign);
            let cl = model.solve_closed_form(&NoiseRealization::default(), (0.0, 0.0), tau);
            d.max_error.push(max_diff(&qt.mean_q, &cl.q));
        }
        let cv = classical_var_q(&Model::new(dp, *s, EomSign::Hamilton), tau);
        var_raw.push(max_diff(&qt.var_q, &cv));
        let excess: Vec<f64> = qt.var_q.iter().map(|v| v - 0.5).collect();
        var_excess.push(max_diff(&excess, &cv));
    }
    let positive: Vec<usize> = (0..gs.len()).filter(|&i| gs[i] > 0.0).collect();
    for d in per.iter_mut() {
        if positive.len() >= 2 {
            let x: Vec<f64> = positive.iter().map(|&i| gs[i]).collect();
            let y: Vec<f64> = positive.iter().map(|&i| d.max_error[i].max(f64::MIN_POSITIVE)).collect();
            d.scaling_exponent = log_log_slope(&x, &y);
        }
    }
    let total = |d: &ConventionDiscrepancy| d.max_error.iter().sum::<f64>();
    let best = per
        .iter()
        .min_by(|a, b| total(a).total_cmp(&total(b)))
        .expect("three conventions")
        .clone();
    Ok(OracleReport {
        g_values: gs.to_vec(),
        preferred_sign_convention: best.eom_sign,
        max_error: best.max_error,
        scaling_exponent: best.scaling_exponent,
        conventions: per,
        var_error_raw: var_raw,
        var_error_excess: var_excess,
        n_fock: used_fock,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
