// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Influence of the traced-out qubit on a forward/backward pair of oscillator paths.
//!
//! A path `(q(tau), p(tau))` drives the qubit through
//! `H(tau) = g (sigma_x f_x(tau) - sigma_y f_y(tau))` with
//! `f_x = q cos tau - p sin tau` and `f_y = q sin tau + p cos tau`.
//! The influence functional is `<psi| U^dagger(X') U(X) |psi>`. To second order in
//! `g` it depends on the paths only through the functionals `F_x`, `F_y`, `F_z`
//! (first integrals and the ordered double integral) of each path, grouped into
//! `W_x`, `W_y`, `W_z`.
//!
//! The second-order Magnus term of `U(X)` is `+i g^2 sigma_z F_z` (the commutator
//! `[H(tau), H(tau')]` equals `-2 i g^2 sigma_z (f_x f_y' - f_x' f_y)`), and the
//! overlap is taken in the order `U^dagger(X') U(X)`. With those two facts
//! `U^dagger(X') U(X) = e^{i g W_x sx} e^{i g W_y sy} e^{i g^2 W_z sz} + O(g^3)` holds
//! with `W_z = F_z - F'_z + 2 F_x F'_y - F'_x F'_y - F_x F_y`. The
//! `verify_*` functions measure the remainder against the exact propagator.

use nalgebra::Vector2;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, log_log_slope, spin_rotation, Mat2};
use crate::params::QubitState;

/// Anything that yields oscillator quadratures `(q, p)` at a rescaled time.
pub trait PhasePath {
    fn at(&self, tau: f64) -> (f64, f64);
    fn t_final(&self) -> f64;
    /// Smallest number of propagator substeps that resolves the path.
    fn min_substeps(&self) -> usize {
        1
    }
}

/// A path known in closed form.
pub struct FnPath<F> {
    f: F,
    t_final: f64,
}

impl<F: Fn(f64) -> (f64, f64)> FnPath<F> {
    pub fn new(t_final: f64, f: F) -> Self {
        Self { f, t_final }
    }
}

impl<F: Fn(f64) -> (f64, f64)> PhasePath for FnPath<F> {
    fn at(&self, tau: f64) -> (f64, f64) {
        (self.f)(tau)
    }

    fn t_final(&self) -> f64 {
        self.t_final
    }
}

/// Samples of one path on a uniform grid starting at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    tau: Vec<f64>,
    q: Vec<f64>,
    p: Vec<f64>,
}

impl SampledPath {
    pub fn new(tau: Vec<f64>, q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if tau.len() < 2 {
            return Err(Error::InvalidInput("path grid needs at least two points".into()));
        }
        if q.len() != tau.len() || p.len() != tau.len() {
            return Err(Error::InvalidInput(format!(
                "path length mismatch: grid {}, q {}, p {}",
                tau.len(),
                q.len(),
                p.len()
            )));
        }
        check_uniform(&tau)?;
        Ok(Self { tau, q, p })
    }

    /// Samples `f` on `tau`.
    pub fn from_fn(tau: &[f64], f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (q, p) = tau.iter().map(|&t| f(t)).unzip();
        Self::new(tau.to_vec(), q, p)
    }

    pub fn zeros(tau: &[f64]) -> Result<Self> {
        Self::from_fn(tau, |_| (0.0, 0.0))
    }

    /// A smooth random path: three incommensurate harmonics per quadrature with
    /// Gaussian amplitudes of standard deviation `amplitude`.
    pub fn random_smooth<R: Rng + ?Sized>(rng: &mut R, tau: &[f64], amplitude: f64) -> Result<Self> {
        let mut modes = [[0.0; 4]; 3];
        for m in modes.iter_mut() {
            for c in m.iter_mut() {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                *c = amplitude * z;
            }
        }
        let freqs = [0.37, 0.81, 1.43];
        Self::from_fn(tau, |t| {
            let mut q = 0.0;
            let mut p = 0.0;
            for (m, w) in modes.iter().zip(freqs) {
                q += m[0] * (w * t).cos() + m[1] * (w * t).sin();
                p += m[2] * (1.1 * w * t).cos() + m[3] * (1.1 * w * t).sin();
            }
            (q, p)
        })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn dt(&self) -> f64 {
        self.tau[1] - self.tau[0]
    }

    /// `(f_x, f_y)` on the grid.
    pub fn drives(&self) -> (Vec<f64>, Vec<f64>) {
        self.tau
            .iter()
            .zip(self.q.iter().zip(&self.p))
            .map(|(&t, (&q, &p))| drive(t, q, p))
            .unzip()
    }
}

impl PhasePath for SampledPath {
    /// Linear interpolation, clamped to the grid.
    fn at(&self, tau: f64) -> (f64, f64) {
        let h = self.dt();
        let last = self.tau.len() - 1;
        let x = (tau - self.tau[0]) / h;
        let k = (x.floor().max(0.0) as usize).min(last - 1);
        let w = (x - k as f64).clamp(0.0, 1.0);
        (
            self.q[k] + w * (self.q[k + 1] - self.q[k]),
            self.p[k] + w * (self.p[k + 1] - self.p[k]),
        )
    }

    fn t_final(&self) -> f64 {
        *self.tau.last().unwrap()
    }

    fn min_substeps(&self) -> usize {
        self.tau.len()
    }
}

fn check_uniform(tau: &[f64]) -> Result<()> {
    let h = tau[1] - tau[0];
    if !(h > 0.0) || tau[0].abs() > 1e-12 * h.max(1.0) {
        return Err(Error::InvalidInput("grid must start at 0 and increase".into()));
    }
    for (k, w) in tau.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) * (k + 2) as f64 {
            return Err(Error::InvalidInput(format!("grid is not uniform at index {k}")));
        }
    }
    Ok(())
}

/// `(f_x, f_y)` of a single phase-space point at time `tau`.
#[inline]
pub fn drive(tau: f64, q: f64, p: f64) -> (f64, f64) {
    let (s, c) = tau.sin_cos();
    (q * c - p * s, q * s + p * c)
}

/// A forward and a backward path on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPair {
    pub forward: SampledPath,
    pub backward: SampledPath,
}

impl PathPair {
    pub fn new(forward: SampledPath, backward: SampledPath) -> Result<Self> {
        if forward.tau.len() != backward.tau.len()
            || forward.tau.iter().zip(&backward.tau).any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::InvalidInput("forward and backward paths use different grids".into()));
        }
        Ok(Self { forward, backward })
    }

    /// Same path forward and backward.
    pub fn diagonal(path: SampledPath) -> Self {
        Self { forward: path.clone(), backward: path }
    }

    /// Two independent [`SampledPath::random_smooth`] paths drawn from stream
    /// `index` of `seed`.
    pub fn random(seed: u64, index: u64, tau: &[f64], amplitude: f64) -> Result<Self> {
        let mut rng = crate::noise::trajectory_rng(seed, index);
        let forward = SampledPath::random_smooth(&mut rng, tau, amplitude)?;
        let backward = SampledPath::random_smooth(&mut rng, tau, amplitude)?;
        Self::new(forward, backward)
    }
}

/// `F_x`, `F_y` and the ordered double integral `F_z` of one path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DriveIntegrals {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl DriveIntegrals {
    /// Composite trapezoid for `F_x`, `F_y`; trapezoid of a running trapezoid for `F_z`.
    pub fn of(path: &SampledPath) -> Self {
        let h = path.dt();
        let (fx, fy) = path.drives();
        let mut ix = 0.0;
        let mut iy = 0.0;
        let mut z = 0.0;
        let mut prev = 0.0; // integrand f_x(t) I_y(t) - f_y(t) I_x(t) at t = 0
        for k in 1..fx.len() {
            ix += 0.5 * h * (fx[k - 1] + fx[k]);
            iy += 0.5 * h * (fy[k - 1] + fy[k]);
            let cur = fx[k] * iy - fy[k] * ix;
            z += 0.5 * h * (prev + cur);
            prev = cur;
        }
        Self { x: ix, y: iy, z }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathFunctionals {
    pub forward: DriveIntegrals,
    pub backward: DriveIntegrals,
    /// `F'_x - F_x`
    pub w_x: f64,
    /// `F_y - F'_y`
    pub w_y: f64,
    /// Second-order `sigma_z` coefficient of `U^dagger(X') U(X)`.
    pub w_z: f64,
}

impl PathFunctionals {
    pub fn from_integrals(forward: DriveIntegrals, backward: DriveIntegrals) -> Self {
        let (a, b, c) = (forward.x, forward.y, forward.z);
        let (a2, b2, c2) = (backward.x, backward.y, backward.z);
        Self {
            forward,
            backward,
            w_x: a2 - a,
            w_y: b - b2,
            w_z: c - c2 + 2.0 * a * b2 - a2 * b2 - a * b,
        }
    }

    /// Second-order `sigma_z` coefficient for the reversed product `U(X) U^dagger(X')`.
    pub fn w_z_forward_first(&self) -> f64 {
        let (a, b, c) = (self.forward.x, self.forward.y, self.forward.z);
        let (a2, b2, c2) = (self.backward.x, self.backward.y, self.backward.z);
        c - c2 + 2.0 * a2 * b - a2 * b2 - a * b
    }

    /// `U(X) U^dagger(X')` coefficient obtained with the opposite sign of the
    /// commutator `[sigma_x, sigma_y]` term. Differs from
    /// [`w_z_forward_first`](Self::w_z_forward_first) by `2 (F_z - F'_z)`, so the
    /// remainder it leaves is `O(g^2)` rather than `O(g^3)`. Kept as a diagnostic.
    pub fn w_z_flipped_commutator(&self) -> f64 {
        let (a, b, c) = (self.forward.x, self.forward.y, self.forward.z);
        let (a2, b2, c2) = (self.backward.x, self.backward.y, self.backward.z);
        c2 + 2.0 * a2 * b - a2 * b2 - a * b - c
    }
}

pub fn path_functionals(pair: &PathPair) -> PathFunctionals {
    PathFunctionals::from_integrals(DriveIntegrals::of(&pair.forward), DriveIntegrals::of(&pair.backward))
}

/// Exponents of the weak-coupling influence functional
/// `exp(fluctuation) * exp(i (forces_linear + forces_dissipative))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfluencePhases {
    /// Real exponent of the fluctuation factor; never positive.
    pub fluctuation: f64,
    /// `2 g sqrt(p(1-p)) (W_x cos phi + W_y sin phi)`.
    pub forces_linear: f64,
    /// `g^2 (1 - 2p) (W_z - W_x W_y)`. Reported only; the dynamics ignore it.
    pub forces_dissipative: f64,
}

impl InfluencePhases {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.fluctuation.exp(), self.forces_linear + self.forces_dissipative)
    }
}

/// Influence phases for `n_qubits` independent copies of the qubit state `s`.
pub fn influence_phases(f: &PathFunctionals, s: &QubitState, g: f64, n_qubits: u32) -> InfluencePhases {
    let n = f64::from(n_qubits);
    let p = s.p();
    let k = 2.0 * p * (1.0 - p);
    let (s2, c2) = (2.0 * s.phi()).sin_cos();
    let (wx, wy) = (f.w_x, f.w_y);
    let quad = wx * wx + wy * wy - k * (wx * wx * (1.0 + c2) + wy * wy * (1.0 - c2) + 2.0 * wx * wy * s2);
    let (sp, cp) = s.phi().sin_cos();
    InfluencePhases {
        fluctuation: -0.5 * g * g * quad * n,
        forces_linear: 2.0 * g * s.eta_f() * (wx * cp + wy * sp) * n,
        forces_dissipative: g * g * (1.0 - 2.0 * p) * (f.w_z - wx * wy) * n,
    }
}

/// `<psi| e^{i g W_x sx} e^{i g W_y sy} e^{i g^2 W_z sz} |psi>` written out in
/// trigonometric form.
pub fn influence_closed_form(f: &PathFunctionals, s: &QubitState, g: f64) -> Complex64 {
    let p = s.p();
    let eta = s.eta_f();
    let (sx, cx) = (g * f.w_x).sin_cos();
    let (sy, cy) = (g * f.w_y).sin_cos();
    let i = Complex64::i();
    let zp = Complex64::from_polar(1.0, g * g * f.w_z);
    let zm = zp.conj();
    let e_phi = Complex64::from_polar(1.0, s.phi());

    let upper = (1.0 - p) * (cy * cx - i * sy * sx) - e_phi.conj() * eta * (sy * cx - i * cy * sx);
    let lower = p * (cy * cx + i * sy * sx) + e_phi * eta * (sy * cx + i * cy * sx);
    zp * upper + zm * lower
}

/// Time-ordered `exp(-i g int (sigma_x f_x - sigma_y f_y) dtau)` over `[0, T]`,
/// as a product of `substeps` exact 2x2 exponentials with the drive sampled at
/// each substep midpoint.
pub fn qubit_propagator_exact(path: &impl PhasePath, g: f64, substeps: usize) -> Result<Mat2> {
    if substeps < path.min_substeps() {
        return Err(Error::InvalidInput(format!(
            "{substeps} substeps cannot resolve a path with {} samples",
            path.min_substeps()
        )));
    }
    let h = path.t_final() / substeps as f64;
    let mut u = Mat2::identity();
    for k in 0..substeps {
        let tm = (k as f64 + 0.5) * h;
        let (q, p) = path.at(tm);
        let (fx, fy) = drive(tm, q, p);
        u = spin_rotation(g * h * fx, -g * h * fy, 0.0) * u;
    }
    Ok(u)
}

/// `e^{i g W_x sx} e^{i g W_y sy} e^{i g^2 w_z sz}`.
pub fn bch_product(g: f64, w_x: f64, w_y: f64, w_z: f64) -> Mat2 {
    spin_rotation(-g * w_x, 0.0, 0.0) * spin_rotation(0.0, -g * w_y, 0.0) * spin_rotation(0.0, 0.0, -g * g * w_z)
}

fn expectation(m: &Mat2, s: &QubitState) -> Complex64 {
    let [a0, a1] = s.amplitudes();
    let v = Vector2::new(a0, a1);
    v.dotc(&(m * v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub g: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Fitted slope of `ln error` against `ln g`.
    pub slope: f64,
    /// Errors and slope of the comparison form noted on each function; `None`
    /// when no comparison form applies.
    pub comparison: Option<(Vec<ConvergencePoint>, f64)>,
}

fn check_couplings(gs: &[f64]) -> Result<()> {
    if gs.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 coupling values, got {}", gs.len())));
    }
    if let Some(g) = gs.iter().find(|&&g| !(g > 0.0 && g <= 0.2)) {
        return Err(Error::InvalidInput(format!("coupling {g} outside (0, 0.2]")));
    }
    Ok(())
}

fn report(gs: &[f64], errors: Vec<f64>, comparison: Option<Vec<f64>>) -> ConvergenceReport {
    let pts = |e: &[f64]| gs.iter().zip(e).map(|(&g, &error)| ConvergencePoint { g, error }).collect();
    ConvergenceReport {
        points: pts(&errors),
        slope: log_log_slope(gs, &errors),
        comparison: comparison.map(|c| (pts(&c), log_log_slope(gs, &c))),
    }
}

/// Frobenius error between the exact `U(X) U^dagger(X')` and the three-factor
/// product built from `W_x`, `W_y` and [`PathFunctionals::w_z_forward_first`].
/// The comparison series uses [`PathFunctionals::w_z_flipped_commutator`].
pub fn verify_bch(pair: &PathPair, gs: &[f64], substeps: usize) -> Result<ConvergenceReport> {
    check_couplings(gs)?;
    let f = path_functionals(pair);
    let mut errors = Vec::with_capacity(gs.len());
    let mut flipped = Vec::with_capacity(gs.len());
    for &g in gs {
        let exact = qubit_propagator_exact(&pair.forward, g, substeps)?
            * qubit_propagator_exact(&pair.backward, g, substeps)?.adjoint();
        errors.push(frobenius(&(exact - bch_product(g, f.w_x, f.w_y, f.w_z_forward_first()))));
        flipped.push(frobenius(&(exact - bch_product(g, f.w_x, f.w_y, f.w_z_flipped_commutator()))));
    }
    Ok(report(gs, errors, Some(flipped)))
}

/// `|<psi| U^dagger(X') U(X) |psi> - exp(fluctuation + i forces)|` for each `g`.
/// The comparison series is the closed-form three-factor overlap
/// [`influence_closed_form`] against the same exact value.
pub fn verify_influence_expansion(
    pair: &PathPair,
    s: &QubitState,
    gs: &[f64],
    substeps: usize,
) -> Result<ConvergenceReport> {
    check_couplings(gs)?;
    let f = path_functionals(pair);
    let mut errors = Vec::with_capacity(gs.len());
    let mut closed = Vec::with_capacity(gs.len());
    for &g in gs {
        let exact = exact_overlap(pair, s, g, substeps)?;
        errors.push((exact - influence_phases(&f, s, g, 1).value()).norm());
        closed.push((exact - influence_closed_form(&f, s, g)).norm());
    }
    Ok(report(gs, errors, Some(closed)))
}

/// `<psi| U^dagger(X') U(X) |psi>` from the exact propagators.
pub fn exact_overlap(pair: &PathPair, s: &QubitState, g: f64, substeps: usize) -> Result<Complex64> {
    let u = qubit_propagator_exact(&pair.forward, g, substeps)?;
    let ub = qubit_propagator_exact(&pair.backward, g, substeps)?;
    Ok(expectation(&(ub.adjoint() * u), s))
}

/// Exposed for tests that build the three-factor overlap directly from matrices.
pub fn three_factor_overlap(f: &PathFunctionals, s: &QubitState, g: f64) -> Complex64 {
    expectation(&bch_product(g, f.w_x, f.w_y, f.w_z), s)
}
