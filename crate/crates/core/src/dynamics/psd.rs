// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

use super::fmt_f64;

/// One-sided power spectral density per unit angular frequency.
///
/// `freq` is in radians per unit rescaled time. The normalization satisfies
/// `sum(psd) * d_freq ~ variance` for a stationary signal.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Psd {
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
    /// Number of windowed segments averaged.
    pub segments: usize,
}

impl Psd {
    pub fn peak_frequency(&self) -> f64 {
        let (k, _) = self
            .psd
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, f64::MIN), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        self.freq[k]
    }

    pub fn bin_width(&self) -> f64 {
        self.freq[1] - self.freq[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq,psd\n");
        for (f, p) in self.freq.iter().zip(&self.psd) {
            out.push_str(&format!("{},{}\n", fmt_f64(*f), fmt_f64(*p)));
        }
        out
    }
}

/// Accumulates Hann-windowed periodograms of equally sampled signals.
pub(crate) struct Welch {
    len: usize,
    step: usize,
    dt: f64,
    window: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    sum: Vec<f64>,
    segments: usize,
}

impl Welch {
    pub(crate) fn new(len: usize, overlap: f64, dt: f64) -> Result<Self> {
        if len < 4 {
            return Err(Error::InvalidInput(format!("segment length {len} is below 4")));
        }
        if !(0.0..=0.9).contains(&overlap) {
            return Err(Error::InvalidInput(format!("overlap {overlap} outside [0, 0.9]")));
        }
        let window = (0..len).map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos())).collect();
        let step = ((len as f64 * (1.0 - overlap)).round() as usize).max(1);
        Ok(Self {
            len,
            step,
            dt,
            window,
            fft: FftPlanner::new().plan_fft_forward(len),
            sum: vec![0.0; len / 2 + 1],
            segments: 0,
        })
    }

    pub(crate) fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() < self.len {
            return Err(Error::InvalidInput(format!(
                "segment length {} exceeds signal length {}",
                self.len,
                x.len()
            )));
        }
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        let mut start = 0;
        while start + self.len <= x.len() {
            let seg = &x[start..start + self.len];
            let mean = seg.iter().sum::<f64>() / self.len as f64;
            for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new((v - mean) * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (s, b) in self.sum.iter_mut().zip(&buf) {
                *s += b.norm_sqr();
            }
            self.segments += 1;
            start += self.step;
        }
        Ok(())
    }

    pub(crate) fn merge(&mut self, other: &Welch) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.segments += other.segments;
    }

    pub(crate) fn finish(&self) -> Psd {
        let u: f64 = self.window.iter().map(|w| w * w).sum();
        let m = self.segments.max(1) as f64;
        let nyq = self.len / 2;
        let psd = self
            .sum
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let one_sided = if k == 0 || (self.len.is_multiple_of(2) && k == nyq) { 1.0 } else { 2.0 };
                one_sided * self.dt * s / (2.0 * PI * u * m)
            })
            .collect();
        let dw = 2.0 * PI / (self.len as f64 * self.dt);
        Psd { freq: (0..=nyq).map(|k| k as f64 * dw).collect(), psd, segments: self.segments }
    }
}

/// Welch estimate averaged over every segment of every signal.
pub fn welch_psd(signals: &[&[f64]], dt: f64, segment_length: usize, overlap: f64) -> Result<Psd> {
    let mut w = Welch::new(segment_length, overlap, dt)?;
    for s in signals {
        w.push(s)?;
    }
    Ok(w.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn calibration_tone() {
        let dt = 0.05;
        let r = 0.63;
        let x: Vec<f64> = (0..8192).map(|k| (r * k as f64 * dt).sin()).collect();
        let psd = welch_psd(&[&x], dt, 2048, 0.5).unwrap();
        assert!((psd.peak_frequency() - r).abs() <= psd.bin_width());
    }

    #[test]
    fn white_noise_parseval() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..1 << 16).map(|_| StandardNormal.sample(&mut rng)).collect();
        let psd = welch_psd(&[&x], 0.1, 1024, 0.5).unwrap();
        let total: f64 = psd.psd.iter().sum::<f64>() * psd.bin_width();
        assert_relative_eq!(total, 1.0, max_relative = 0.03);
    }

    #[test]
    fn argument_checks() {
        let x = vec![0.0; 100];
        assert!(welch_psd(&[&x], 0.1, 200, 0.5).is_err());
        assert!(welch_psd(&[&x], 0.1, 50, 0.95).is_err());
        assert!(welch_psd(&[&x], 0.1, 50, -0.1).is_err());
    }
}
