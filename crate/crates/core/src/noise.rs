// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! The qubit-induced Gaussian noise and its two-time kernel.
//!
//! The fluctuation exponent is a quadratic form in `(W_x, W_y)`, and both are
//! linear functionals of the path, so the noise vector `(lambda_q, lambda_p)`
//! spans a two-dimensional space of trigonometric functions:
//!
//! ```text
//! lambda_q(tau) = -zeta_x cos tau + zeta_y sin tau
//! lambda_p(tau) =  zeta_x sin tau + zeta_y cos tau
//! (zeta_x, zeta_y) ~ N(0, [[a, c], [c, b]])
//! ```
//!
//! Sampling one trajectory costs two Gaussian draws and is exact at every time.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{batch_mean_se, polar_stderr};
use crate::params::QubitState;

/// Coefficients of the fluctuation form `a W_x^2 + b W_y^2 + 2 c W_x W_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadFormCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadFormCoeffs {
    pub fn det(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }
}

pub fn quad_coeffs(s: &QubitState) -> QuadFormCoeffs {
    let k = 2.0 * s.p() * (1.0 - s.p());
    let (s2, c2) = (2.0 * s.phi()).sin_cos();
    QuadFormCoeffs { a: 1.0 - k * (1.0 + c2), b: 1.0 - k * (1.0 - c2), c: -k * s2 }
}

/// Kernel entries `[[M_qq, M_qp], [M_pq, M_pp]]` at `(tau, tau_prime)`.
///
/// With `k = 2p(1-p)`, `D = tau - tau'` and `S = tau + tau' + 2 phi`:
/// `M_qq = (1-k) cos D - k cos S`, `M_pp = (1-k) cos D + k cos S`,
/// `M_qp = (1-k) sin D + k sin S`, `M_pq = -(1-k) sin D + k sin S`.
pub fn kernel_matrix(tau: f64, tau_prime: f64, s: &QubitState) -> Matrix2<f64> {
    let k = 2.0 * s.p() * (1.0 - s.p());
    let st = 1.0 - k;
    let (sd, cd) = (tau - tau_prime).sin_cos();
    let (ss, cs) = (tau + tau_prime + 2.0 * s.phi()).sin_cos();
    Matrix2::new(st * cd - k * cs, st * sd + k * ss, -st * sd + k * ss, st * cd + k * cs)
}

/// Dense `2N x 2N` kernel on a grid, ordered `[lambda_q(tau_0..N), lambda_p(tau_0..N)]`.
pub fn kernel_block(tau: &[f64], s: &QubitState) -> DMatrix<f64> {
    let n = tau.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let k = kernel_matrix(tau[i], tau[j], s);
            m[(i, j)] = k[(0, 0)];
            m[(i, n + j)] = k[(0, 1)];
            m[(n + i, j)] = k[(1, 0)];
            m[(n + i, n + j)] = k[(1, 1)];
        }
    }
    m
}

/// One draw of the noise vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NoiseRealization {
    pub zeta_x: f64,
    pub zeta_y: f64,
}

impl NoiseRealization {
    pub fn new(zeta_x: f64, zeta_y: f64) -> Self {
        Self { zeta_x, zeta_y }
    }

    pub fn lambda_q(&self, tau: f64) -> f64 {
        let (s, c) = tau.sin_cos();
        -self.zeta_x * c + self.zeta_y * s
    }

    pub fn lambda_p(&self, tau: f64) -> f64 {
        let (s, c) = tau.sin_cos();
        self.zeta_x * s + self.zeta_y * c
    }

    /// `d lambda_q / d tau`, equal to `lambda_p`.
    pub fn dlambda_q(&self, tau: f64) -> f64 {
        self.lambda_p(tau)
    }

    /// `d lambda_p / d tau`, equal to `-lambda_q`.
    pub fn dlambda_p(&self, tau: f64) -> f64 {
        -self.lambda_q(tau)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.zeta_x * factor, self.zeta_y * factor)
    }
}

/// Independent generator for trajectory `index` under `seed`. Each index gets
/// its own ChaCha stream, so draws do not depend on scheduling.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Pivoted 2x2 Cholesky factor of the `zeta` covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSampler {
    // zeta = L z, stored as (l11, l21, l22) in the pivoted order
    l11: f64,
    l21: f64,
    l22: f64,
    swapped: bool,
}

const DEGENERATE: f64 = 1e-14;

impl NoiseSampler {
    pub fn new(s: &QubitState) -> Self {
        let QuadFormCoeffs { a, b, c } = quad_coeffs(s);
        let (first, second, swapped) = if a >= b { (a, b, false) } else { (b, a, true) };
        let l11 = first.max(0.0).sqrt();
        let l21 = if l11 > 0.0 { c / l11 } else { 0.0 };
        let rest = second - l21 * l21;
        let l22 = if rest < DEGENERATE { 0.0 } else { rest.sqrt() };
        Self { l11, l21, l22, swapped }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseRealization {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let u = self.l11 * z1;
        let v = self.l21 * z1 + self.l22 * z2;
        if self.swapped {
            NoiseRealization::new(v, u)
        } else {
            NoiseRealization::new(u, v)
        }
    }

    pub fn is_rank_one(&self) -> bool {
        self.l22 == 0.0
    }
}

pub fn sample_noise<R: Rng + ?Sized>(s: &QubitState, rng: &mut R) -> NoiseRealization {
    NoiseSampler::new(s).sample(rng)
}

/// `n` draws, trajectory `i` using [`trajectory_rng`]`(seed, i)`.
pub fn sample_many(s: &QubitState, seed: u64, n: usize) -> Vec<NoiseRealization> {
    let sampler = NoiseSampler::new(s);
    (0..n as u64).map(|i| sampler.sample(&mut trajectory_rng(seed, i))).collect()
}

/// Unbiased sample covariance of `[lambda_q, lambda_p]` evaluated on `tau`,
/// in the ordering of [`kernel_block`].
///
/// The realizations are linear in `(zeta_x, zeta_y)`, so this is computed as
/// `Phi C Phi^T` with `C` the sample covariance of `zeta`; identical to
/// stacking the evaluations, at `O(n + N^2)` cost.
pub fn empirical_covariance(realizations: &[NoiseRealization], tau: &[f64]) -> Result<DMatrix<f64>> {
    let c = zeta_covariance(realizations)?;
    let n = tau.len();
    // rows of Phi: coefficients of (zeta_x, zeta_y)
    let mut phi = DMatrix::zeros(2 * n, 2);
    for (i, &t) in tau.iter().enumerate() {
        let (s, co) = t.sin_cos();
        phi[(i, 0)] = -co;
        phi[(i, 1)] = s;
        phi[(n + i, 0)] = s;
        phi[(n + i, 1)] = co;
    }
    let cm = DMatrix::from_row_slice(2, 2, &[c[0], c[1], c[1], c[2]]);
    Ok(&phi * cm * phi.transpose())
}

/// `(var zeta_x, cov, var zeta_y)`, unbiased.
fn zeta_covariance(r: &[NoiseRealization]) -> Result<[f64; 3]> {
    if r.len() < 2 {
        return Err(Error::InvalidInput(format!("covariance needs at least 2 samples, got {}", r.len())));
    }
    let n = r.len() as f64;
    let mx = r.iter().map(|z| z.zeta_x).sum::<f64>() / n;
    let my = r.iter().map(|z| z.zeta_y).sum::<f64>() / n;
    let mut acc = [0.0; 3];
    for z in r {
        let (dx, dy) = (z.zeta_x - mx, z.zeta_y - my);
        acc[0] += dx * dx;
        acc[1] += dx * dy;
        acc[2] += dy * dy;
    }
    Ok(acc.map(|v| v / (n - 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    /// Eigenvalues of the grid-weighted kernel, descending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub min_eigenvalue: f64,
}

/// Eigendecomposition of the kernel on `tau`, weighted by the grid spacing.
pub fn kernel_rank_check(tau: &[f64], s: &QubitState) -> Result<RankReport> {
    if tau.len() < 4 {
        return Err(Error::InvalidInput(format!("rank check needs at least 4 grid points, got {}", tau.len())));
    }
    let w = (tau[tau.len() - 1] - tau[0]) / (tau.len() - 1) as f64;
    let m = kernel_block(tau, s) * w;
    let mut ev: Vec<f64> = SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("kernel eigendecomposition did not converge".into()))?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let max = ev[0];
    let cut = 1e-10 * max * tau.len() as f64;
    Ok(RankReport {
        rank: ev.iter().filter(|&&e| e > cut).count(),
        min_eigenvalue: *ev.last().unwrap(),
        eigenvalues: ev,
    })
}

/// Decomposition of a covariance into the stationary weight `A` of
/// `(cos D, sin D)` and the non-stationary mode `amplitude * cos(S)` with
/// `S = tau + tau' + phase`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelModes {
    pub stationary: f64,
    /// Coefficients of `cos(tau + tau')` and `-sin(tau + tau')` in `M_pp`.
    pub cos_part: f64,
    pub sin_part: f64,
}

impl KernelModes {
    pub fn amplitude(&self) -> f64 {
        self.cos_part.hypot(self.sin_part)
    }

    /// Phase offset of the non-stationary mode, `2 phi` for the exact kernel.
    pub fn phase(&self) -> f64 {
        self.sin_part.atan2(self.cos_part)
    }

    /// The modes of the exact kernel.
    pub fn exact(s: &QubitState) -> Self {
        let k = 2.0 * s.p() * (1.0 - s.p());
        let (s2, c2) = (2.0 * s.phi()).sin_cos();
        Self { stationary: 1.0 - k, cos_part: k * c2, sin_part: k * s2 }
    }
}

/// Least-squares fit of [`KernelModes`] to a block covariance on `tau`.
pub fn fit_kernel_modes(cov: &DMatrix<f64>, tau: &[f64]) -> Result<KernelModes> {
    let n = tau.len();
    if cov.nrows() != 2 * n || cov.ncols() != 2 * n {
        return Err(Error::InvalidInput("covariance does not match the grid".into()));
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    let mut add = |row: [f64; 3], y: f64| {
        let v = nalgebra::Vector3::from(row);
        ata += v * v.transpose();
        atb += v * y;
    };
    for i in 0..n {
        for j in 0..n {
            let (sd, cd) = (tau[i] - tau[j]).sin_cos();
            let (ss, cs) = (tau[i] + tau[j]).sin_cos();
            add([cd, -cs, ss], cov[(i, j)]);
            add([cd, cs, -ss], cov[(n + i, n + j)]);
            add([sd, ss, cs], cov[(i, n + j)]);
            add([-sd, ss, cs], cov[(n + i, j)]);
        }
    }
    let x = ata.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))? * atb;
    Ok(KernelModes { stationary: x[0], cos_part: x[1], sin_part: x[2] })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelModeEstimate {
    pub modes: KernelModes,
    pub stationary_stderr: f64,
    pub amplitude_stderr: f64,
    pub phase_stderr: f64,
}

/// [`fit_kernel_modes`] on the full sample, with standard errors from the
/// spread of the same fit over `batches` disjoint sub-samples.
pub fn estimate_kernel_modes(
    realizations: &[NoiseRealization],
    tau: &[f64],
    batches: usize,
) -> Result<KernelModeEstimate> {
    if batches < 2 || realizations.len() < 2 * batches {
        return Err(Error::InvalidInput(format!(
            "{} samples cannot form {batches} batches of at least 2",
            realizations.len()
        )));
    }
    let modes = fit_kernel_modes(&empirical_covariance(realizations, tau)?, tau)?;
    let size = realizations.len() / batches;
    let mut st = Vec::with_capacity(batches);
    let mut cos = Vec::with_capacity(batches);
    let mut sin = Vec::with_capacity(batches);
    for chunk in realizations.chunks_exact(size).take(batches) {
        let m = fit_kernel_modes(&empirical_covariance(chunk, tau)?, tau)?;
        st.push(m.stationary);
        cos.push(m.cos_part);
        sin.push(m.sin_part);
    }
    let (_, stationary_stderr) = batch_mean_se(&st);
    let (_, sc) = batch_mean_se(&cos);
    let (_, ss) = batch_mean_se(&sin);
    let (amplitude_stderr, phase_stderr) = polar_stderr(modes.cos_part, modes.sin_part, sc, ss);
    Ok(KernelModeEstimate { modes, stationary_stderr, amplitude_stderr, phase_stderr })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseReport {
    pub state: QubitState,
    pub samples: usize,
    pub max_cov_error: f64,
    pub max_mean: f64,
    pub rank: usize,
    pub min_eigenvalue: f64,
    pub modes: KernelModeEstimate,
}

/// Sampler faithfulness on `tau`: empirical against exact kernel, plus the
/// rank of the exact kernel and the fitted mode decomposition.
pub fn verify_noise(s: &QubitState, seed: u64, samples: usize, tau: &[f64]) -> Result<NoiseReport> {
    let draws = sample_many(s, seed, samples);
    let emp = empirical_covariance(&draws, tau)?;
    let max_cov_error = (&emp - kernel_block(tau, s)).abs().max();
    let n = samples as f64;
    let max_mean = tau
        .iter()
        .flat_map(|&t| {
            let mq = draws.iter().map(|z| z.lambda_q(t)).sum::<f64>() / n;
            let mp = draws.iter().map(|z| z.lambda_p(t)).sum::<f64>() / n;
            [mq.abs(), mp.abs()]
        })
        .fold(0.0, f64::max);
    let rank = kernel_rank_check(tau, s)?;
    Ok(NoiseReport {
        state: *s,
        samples,
        max_cov_error,
        max_mean,
        rank: rank.rank,
        min_eigenvalue: rank.min_eigenvalue,
        modes: estimate_kernel_modes(&draws, tau, 20)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(t: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn coefficient_examples() {
        let q = quad_coeffs(&QubitState::ground());
        assert_eq!((q.a, q.b, q.c), (1.0, 1.0, 0.0));
        let q = quad_coeffs(&QubitState::equator(0.0));
        assert_abs_diff_eq!(q.a, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.b, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.c, 0.0, epsilon = 1e-15);
        let q = quad_coeffs(&QubitState::equator(PI / 4.0));
        assert_abs_diff_eq!(q.a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.b, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.c, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.det(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coefficients_from_fluctuation_form() {
        // a, b, c recovered from the fluctuation form evaluated on unit W vectors
        let s = QubitState::new(0.17, 2.3).unwrap();
        let form = |wx: f64, wy: f64| {
            let k = 2.0 * s.p() * (1.0 - s.p());
            let (s2, c2) = (2.0 * s.phi()).sin_cos();
            wx * wx + wy * wy - k * (wx * wx * (1.0 + c2) + wy * wy * (1.0 - c2) + 2.0 * wx * wy * s2)
        };
        let q = quad_coeffs(&s);
        assert_abs_diff_eq!(q.a, form(1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(q.b, form(0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(q.c, 0.5 * (form(1.0, 1.0) - q.a - q.b), epsilon = 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let (t, tp) = (1.3, 0.4);
        let k = kernel_matrix(t, tp, &QubitState::ground());
        let d = t - tp;
        let expected = Matrix2::new(d.cos(), d.sin(), -d.sin(), d.cos());
        assert!((k - expected).abs().max() < 1e-15);
        assert!((kernel_matrix(0.9, 0.9, &QubitState::excited()) - Matrix2::identity()).abs().max() < 1e-15);
        let k = kernel_matrix(0.0, 0.0, &QubitState::equator(0.0));
        assert!((k - Matrix2::new(0.0, 0.0, 0.0, 1.0)).abs().max() < 1e-15);
    }

    #[test]
    fn kernel_is_noise_covariance_identity() {
        // The exact kernel equals Phi(t) C Phi(t')^T for the zeta covariance C.
        let s = QubitState::new(0.3, 1.0).unwrap();
        let q = quad_coeffs(&s);
        let c = Matrix2::new(q.a, q.c, q.c, q.b);
        let phi = |t: f64| Matrix2::new(-t.cos(), t.sin(), t.sin(), t.cos());
        for &(t, tp) in &[(0.0, 0.0), (1.0, 2.5), (-0.3, 4.0)] {
            let k = phi(t) * c * phi(tp).transpose();
            assert!((k - kernel_matrix(t, tp, &s)).abs().max() < 1e-14);
        }
    }

    #[test]
    fn derivative_accessors() {
        let z = NoiseRealization::new(0.7, -1.3);
        let h = 1e-6;
        for &t in &[0.0, 0.8, 3.0] {
            let fd = (z.lambda_p(t + h) - z.lambda_p(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(z.dlambda_p(t), fd, epsilon = 1e-9);
            let fd = (z.lambda_q(t + h) - z.lambda_q(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(z.dlambda_q(t), fd, epsilon = 1e-9);
        }
    }

    #[test]
    fn equator_samples_are_rank_one() {
        let s = QubitState::equator(0.7);
        assert!(NoiseSampler::new(&s).is_rank_one());
        let draws = sample_many(&s, 1, 50);
        // all draws on one line, so the zeta sample covariance is singular
        let c = zeta_covariance(&draws).unwrap();
        assert!((c[0] * c[2] - c[1] * c[1]).abs() < 1e-12 * (c[0] + c[2]).powi(2));
        assert!(!NoiseSampler::new(&QubitState::new(0.3, 0.7).unwrap()).is_rank_one());
    }

    #[test]
    fn sampler_reproduces_kernel() {
        let tau = grid(2.0 * PI, 24);
        for s in [
            QubitState::ground(),
            QubitState::new(0.3, 1.0).unwrap(),
            QubitState::equator(0.0),
            QubitState::new(0.8, -2.0).unwrap(),
        ] {
            let rep = verify_noise(&s, 42, 100_000, &tau).unwrap();
            assert!(rep.max_cov_error <= 0.02, "{s:?}: {}", rep.max_cov_error);
            assert!(rep.max_mean <= 4.0 / (1e5f64).sqrt(), "{}", rep.max_mean);
        }
    }

    #[test]
    fn stationary_variance_for_ground_state() {
        let draws = sample_many(&QubitState::ground(), 7, 100_000);
        for &t in &[0.0, 1.0, 2.0, 5.0] {
            let v = draws.iter().map(|z| z.lambda_q(t).powi(2)).sum::<f64>() / 1e5;
            assert_abs_diff_eq!(v, 1.0, epsilon = 0.02);
        }
    }

    #[test]
    fn nonstationary_mode_amplitude_and_phase() {
        let s = QubitState::new(0.3, 1.0).unwrap();
        let tau = grid(2.0 * PI, 32);
        let est = estimate_kernel_modes(&sample_many(&s, 5, 100_000), &tau, 20).unwrap();
        assert_abs_diff_eq!(est.modes.amplitude(), 0.42, epsilon = 0.02);
        assert_abs_diff_eq!(est.modes.stationary, 0.58, epsilon = 0.02);
        // sign of the phase offset: +2 phi
        assert_abs_diff_eq!(est.modes.phase(), 2.0, epsilon = 0.1);
        let exact = fit_kernel_modes(&kernel_block(&tau, &s), &tau).unwrap();
        assert_eq!(
            (exact.stationary * 1e12).round(),
            (KernelModes::exact(&s).stationary * 1e12).round()
        );
        assert_abs_diff_eq!(exact.phase(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn poles_are_stationary() {
        let tau = grid(2.0 * PI, 32);
        for s in [QubitState::ground(), QubitState::excited()] {
            let est = estimate_kernel_modes(&sample_many(&s, 9, 100_000), &tau, 20).unwrap();
            assert!(est.modes.amplitude() <= 0.02, "{est:?}");
        }
    }

    #[test]
    fn covariance_needs_two_samples() {
        assert!(empirical_covariance(&[NoiseRealization::new(1.0, 0.0)], &[0.0, 1.0]).is_err());
        let dup = vec![NoiseRealization::new(1.0, 2.0); 10];
        let c = empirical_covariance(&dup, &grid(1.0, 5)).unwrap();
        assert_eq!(c.abs().max(), 0.0);
        // two distinct draws span one direction
        let two = [NoiseRealization::new(1.0, 2.0), NoiseRealization::new(-0.5, 0.3)];
        let c = empirical_covariance(&two, &grid(3.0, 8)).unwrap();
        let ev = SymmetricEigen::new(c).eigenvalues;
        let max = ev.max();
        assert_eq!(ev.iter().filter(|&&e| e > 1e-12 * max).count(), 1);
    }

    #[test]
    fn rank_examples() {
        let tau = grid(2.0 * PI, 64);
        assert_eq!(kernel_rank_check(&tau, &QubitState::ground()).unwrap().rank, 2);
        for phi in [0.0, 1.0, 2.5] {
            assert_eq!(kernel_rank_check(&tau, &QubitState::equator(phi)).unwrap().rank, 1);
        }
        let s = QubitState::new(0.3, 1.0).unwrap();
        let coarse = kernel_rank_check(&tau, &s).unwrap();
        let fine = kernel_rank_check(&grid(2.0 * PI, 127), &s).unwrap();
        assert_eq!(coarse.rank, fine.rank);
        // a weighted kernel approximates the integral operator: leading eigenvalues stable
        assert_abs_diff_eq!(coarse.eigenvalues[0], fine.eigenvalues[0], epsilon = 0.15);
        assert!(kernel_rank_check(&tau[..3], &s).is_err());
    }

    #[test]
    fn stream_determinism() {
        let a = sample_many(&QubitState::new(0.2, 0.5).unwrap(), 99, 10);
        let b = sample_many(&QubitState::new(0.2, 0.5).unwrap(), 99, 10);
        assert_eq!(a, b);
        let mut r3 = trajectory_rng(99, 3);
        assert_eq!(sample_noise(&QubitState::new(0.2, 0.5).unwrap(), &mut r3), a[3]);
    }

    proptest! {
        #[test]
        fn determinant_identity(p in 0.0..=1.0f64, phi in -10.0..10.0f64) {
            let s = QubitState::new(p, phi).unwrap();
            let q = quad_coeffs(&s);
            prop_assert!((q.det() - (1.0 - 4.0 * p * (1.0 - p))).abs() < 1e-14);
            prop_assert!(q.a >= -1e-15 && q.b >= -1e-15);
            let m = quad_coeffs(&s.population_mirror());
            prop_assert!((m.a - q.a).abs() < 1e-15 && (m.b - q.b).abs() < 1e-15 && (m.c - q.c).abs() < 1e-15);
        }

        #[test]
        fn kernel_block_symmetry_and_mirror(p in 0.0..=1.0f64, phi in -4.0..4.0f64, t in -5.0..5.0f64, tp in -5.0..5.0f64) {
            let s = QubitState::new(p, phi).unwrap();
            let k = kernel_matrix(t, tp, &s);
            let kt = kernel_matrix(tp, t, &s);
            prop_assert!((k - kt.transpose()).abs().max() < 1e-14);
            prop_assert!((k - kernel_matrix(t, tp, &s.population_mirror())).abs().max() < 1e-14);
        }

        #[test]
        fn kernel_psd(p in 0.0..=1.0f64, phi in -4.0..4.0f64, n in 4usize..40, t in 0.5..20.0f64) {
            let s = QubitState::new(p, phi).unwrap();
            let r = kernel_rank_check(&grid(t, n), &s).unwrap();
            prop_assert!(r.min_eigenvalue >= -1e-10 * r.eigenvalues[0].max(1.0));
            prop_assert!(r.rank <= 2);
        }
    }
}
