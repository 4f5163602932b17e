// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense helpers: 2x2 spin algebra, a log-log slope fit and batch statistics.

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// `exp(-i (hx X + hy Y + hz Z))` in closed form:
/// `cos|h| - i sin|h| (h.sigma)/|h|`.
pub fn spin_rotation(hx: f64, hy: f64, hz: f64) -> Mat2 {
    let norm = (hx * hx + hy * hy + hz * hz).sqrt();
    let c = norm.cos();
    // sin(x)/x, stable near zero
    let sx = if norm < 1e-8 { 1.0 - norm * norm / 6.0 } else { norm.sin() / norm };
    let a = Complex64::new(c, -sx * hz);
    let d = Complex64::new(c, sx * hz);
    // -i sx (hx X + hy Y) off-diagonals: -i sx (hx - i hy), -i sx (hx + i hy)
    let b = Complex64::new(-sx * hy, -sx * hx);
    let e = Complex64::new(sx * hy, -sx * hx);
    Mat2::new(a, b, e, d)
}

pub fn frobenius(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Distance of `u` from the unitary group, `||u^dagger u - 1||_F`.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    frobenius(&(u.adjoint() * u - Mat2::identity()))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Mean of batch estimates and its standard error.
pub(crate) fn batch_mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// First-order standard errors of `hypot(x, y)` and `atan2(y, x)` from those of
/// `x` and `y`. At the origin the amplitude error is the rms of the two.
pub(crate) fn polar_stderr(x: f64, y: f64, sx: f64, sy: f64) -> (f64, f64) {
    let a2 = x * x + y * y;
    if a2 == 0.0 {
        return ((0.5 * (sx * sx + sy * sy)).sqrt(), std::f64::consts::PI);
    }
    let amp = ((x * sx).powi(2) + (y * sy).powi(2)).sqrt() / a2.sqrt();
    let phase = ((y * sx).powi(2) + (x * sy).powi(2)).sqrt() / a2;
    (amp, phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_exp(m: &Mat2) -> Mat2 {
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..40 {
            term = term * m / Complex64::new(k as f64, 0.0);
            sum += term;
        }
        sum
    }

    #[test]
    fn rotation_matches_power_series() {
        for &(hx, hy, hz) in &[(0.3, -0.2, 0.7), (1.5, 0.0, 0.0), (0.0, 0.0, 0.0), (1e-10, 2e-10, 0.0)] {
            let gen = (pauli_x() * Complex64::new(hx, 0.0)
                + pauli_y() * Complex64::new(hy, 0.0)
                + pauli_z() * Complex64::new(hz, 0.0))
                * (-I);
            let diff = spin_rotation(hx, hy, hz) - series_exp(&gen);
            assert!(frobenius(&diff) < 1e-14, "{hx} {hy} {hz}");
            assert!(unitarity_defect(&spin_rotation(hx, hy, hz)) < 1e-14);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        assert!((log_log_slope(&x, &y) - 3.0).abs() < 1e-12);
    }
}
