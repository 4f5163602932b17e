// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{trajectory_rng, NoiseRealization, NoiseSampler};
use crate::params::SimConfig;

use super::psd::{Psd, Welch};
use super::{fmt_f64, Model};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Deterministic response plus `zeta_x R_x + zeta_y R_y`, with the unit
    /// noise responses `R_x`, `R_y` computed once in closed form.
    #[default]
    ClosedForm,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleOptions {
    pub solver: Solver,
    /// Size of the sub-grid carrying the two-time covariance.
    pub coarse_points: usize,
    /// Welch segment length; `None` picks the largest power of two not above
    /// half the grid.
    pub psd_segment: Option<usize>,
    pub psd_overlap: f64,
    pub with_psd: bool,
    /// Trajectory `i` of this run draws from stream `first_index + i`, so
    /// disjoint runs can partition one larger ensemble.
    pub first_index: u64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { solver: Solver::ClosedForm, coarse_points: 64, psd_segment: None, psd_overlap: 0.5, with_psd: true, first_index: 0 }
    }
}

// Trajectories per work unit. Fixed so the reduction tree does not depend on
// the thread count.
const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub seed: u64,
    pub tau: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_q: Vec<f64>,
    pub var_p: Vec<f64>,
    pub coarse_tau: Vec<f64>,
    /// Positions of `coarse_tau` in `tau`.
    pub coarse_index: Vec<usize>,
    /// Unbiased covariance of `q` between coarse grid points, row-major.
    pub cov_q: Vec<f64>,
    pub psd: Option<Psd>,
}

impl EnsembleStats {
    /// Standard error of `mean_q` at each grid point.
    pub fn stderr_q(&self) -> Vec<f64> {
        let n = self.n_traj as f64;
        self.var_q.iter().map(|v| (v / n).sqrt()).collect()
    }

    pub fn coarse_len(&self) -> usize {
        self.coarse_tau.len()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov_q[i * self.coarse_len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,mean_q,mean_p,var_q\n");
        for i in 0..self.tau.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(self.tau[i]),
                fmt_f64(self.mean_q[i]),
                fmt_f64(self.mean_p[i]),
                fmt_f64(self.var_q[i])
            ));
        }
        out
    }
}

/// Chan-style mergeable first and second moments.
struct Acc {
    n: f64,
    mean_q: Vec<f64>,
    m2_q: Vec<f64>,
    mean_p: Vec<f64>,
    m2_p: Vec<f64>,
    mean_c: Vec<f64>,
    co_c: Vec<f64>,
    welch: Option<Welch>,
}

impl Acc {
    fn new(len: usize, coarse: usize, welch: Option<Welch>) -> Self {
        Self {
            n: 0.0,
            mean_q: vec![0.0; len],
            m2_q: vec![0.0; len],
            mean_p: vec![0.0; len],
            m2_p: vec![0.0; len],
            mean_c: vec![0.0; coarse],
            co_c: vec![0.0; coarse * coarse],
            welch,
        }
    }

    fn push(&mut self, q: &[f64], p: &[f64], idx: &[usize]) -> Result<()> {
        self.n += 1.0;
        let n = self.n;
        welford(&mut self.mean_q, &mut self.m2_q, q, n);
        welford(&mut self.mean_p, &mut self.m2_p, p, n);
        let k = idx.len();
        let old: Vec<f64> = idx.iter().zip(&self.mean_c).map(|(&i, m)| q[i] - m).collect();
        for (m, d) in self.mean_c.iter_mut().zip(&old) {
            *m += d / n;
        }
        for a in 0..k {
            let new_a = q[idx[a]] - self.mean_c[a];
            for b in 0..k {
                self.co_c[a * k + b] += new_a * old[b];
            }
        }
        if let Some(w) = self.welch.as_mut() {
            w.push(q)?;
        }
        Ok(())
    }

    fn merge(&mut self, o: &Acc) {
        if o.n == 0.0 {
            return;
        }
        let (na, nb) = (self.n, o.n);
        let n = na + nb;
        merge_moments(&mut self.mean_q, &mut self.m2_q, &o.mean_q, &o.m2_q, na, nb);
        merge_moments(&mut self.mean_p, &mut self.m2_p, &o.mean_p, &o.m2_p, na, nb);
        let k = self.mean_c.len();
        let d: Vec<f64> = o.mean_c.iter().zip(&self.mean_c).map(|(b, a)| b - a).collect();
        for a in 0..k {
            for b in 0..k {
                self.co_c[a * k + b] += o.co_c[a * k + b] + d[a] * d[b] * na * nb / n;
            }
        }
        for (m, dd) in self.mean_c.iter_mut().zip(&d) {
            *m += dd * nb / n;
        }
        if let (Some(a), Some(b)) = (self.welch.as_mut(), o.welch.as_ref()) {
            a.merge(b);
        }
        self.n = n;
    }
}

fn welford(mean: &mut [f64], m2: &mut [f64], x: &[f64], n: f64) {
    for ((m, s), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(x) {
        let d = v - *m;
        *m += d / n;
        *s += d * (v - *m);
    }
}

fn merge_moments(mean: &mut [f64], m2: &mut [f64], mb: &[f64], m2b: &[f64], na: f64, nb: f64) {
    let n = na + nb;
    for i in 0..mean.len() {
        let d = mb[i] - mean[i];
        m2[i] += m2b[i] + d * d * na * nb / n;
        mean[i] += d * nb / n;
    }
}

fn coarse_indices(len: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, len);
    if k == 1 {
        return vec![0];
    }
    (0..k).map(|j| ((j * (len - 1)) as f64 / (k - 1) as f64).round() as usize).collect()
}

/// Monte Carlo ensemble over independent noise draws. Trajectory `i` uses
/// [`trajectory_rng`]`(seed, first_index + i)`, and moments are reduced over fixed-size
/// chunks in index order, so results are bit-identical for any thread count.
pub fn run_ensemble(model: &Model, sim: &SimConfig, opts: &EnsembleOptions) -> Result<EnsembleStats> {
    sim.validate(&model.params)?;
    if sim.n_traj < 2 {
        return Err(Error::param("n_traj", "an ensemble needs at least 2 trajectories"));
    }
    let tau = sim.grid(model.params.t_final);
    let len = tau.len();
    let h = tau[1] - tau[0];
    let idx = coarse_indices(len, opts.coarse_points);
    let segment = opts.psd_segment.unwrap_or_else(|| {
        let half = (len / 2).max(4);
        1 << (usize::BITS - 1 - half.leading_zeros())
    });
    let make_welch = || -> Result<Option<Welch>> {
        if opts.with_psd {
            Welch::new(segment, opts.psd_overlap, h).map(Some)
        } else {
            Ok(None)
        }
    };
    make_welch()?;
    if opts.with_psd && segment > len {
        return Err(Error::InvalidInput(format!("segment length {segment} exceeds signal length {len}")));
    }

    let ics = (sim.q0, sim.p0);
    let base = model.solve_closed_form(&NoiseRealization::default(), ics, &tau);
    let unit = |z: NoiseRealization| {
        let t = model.solve_closed_form(&z, ics, &tau);
        let q: Vec<f64> = t.q.iter().zip(&base.q).map(|(a, b)| a - b).collect();
        let p: Vec<f64> = t.p.iter().zip(&base.p).map(|(a, b)| a - b).collect();
        (q, p)
    };
    let rx = unit(NoiseRealization::new(1.0, 0.0));
    let ry = unit(NoiseRealization::new(0.0, 1.0));
    let sampler = NoiseSampler::new(&model.state);

    let n_chunks = sim.n_traj.div_ceil(CHUNK);
    let partials: Vec<Result<Acc>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Acc::new(len, idx.len(), make_welch()?);
            let mut q = vec![0.0; len];
            let mut p = vec![0.0; len];
            for i in c * CHUNK..((c + 1) * CHUNK).min(sim.n_traj) {
                let z = sampler.sample(&mut trajectory_rng(sim.seed, opts.first_index + i as u64));
                match opts.solver {
                    Solver::ClosedForm => {
                        for k in 0..len {
                            q[k] = base.q[k] + z.zeta_x * rx.0[k] + z.zeta_y * ry.0[k];
                            p[k] = base.p[k] + z.zeta_x * rx.1[k] + z.zeta_y * ry.1[k];
                        }
                        if q.iter().chain(&p).any(|v| !v.is_finite()) {
                            return Err(Error::Numeric { index: opts.first_index + i as u64, reason: "non-finite trajectory".into() });
                        }
                    }
                    Solver::Rk4 => {
                        let t = model.integrate_rk4(&z, ics, sim.dt, opts.first_index + i as u64)?;
                        q.copy_from_slice(&t.q);
                        p.copy_from_slice(&t.p);
                    }
                }
                acc.push(&q, &p, &idx)?;
            }
            Ok(acc)
        })
        .collect();

    let mut total = Acc::new(len, idx.len(), make_welch()?);
    for part in partials {
        total.merge(&part?);
    }
    let dof = total.n - 1.0;
    let k = idx.len();
    Ok(EnsembleStats {
        n_traj: sim.n_traj,
        seed: sim.seed,
        coarse_tau: idx.iter().map(|&i| tau[i]).collect(),
        coarse_index: idx.clone(),
        tau,
        mean_q: total.mean_q,
        mean_p: total.mean_p,
        var_q: total.m2_q.iter().map(|v| v / dof).collect(),
        var_p: total.m2_p.iter().map(|v| v / dof).collect(),
        cov_q: (0..k * k)
            .map(|ab| {
                let (a, b) = (ab / k, ab % k);
                // symmetrize the accumulated co-moment against rounding
                0.5 * (total.co_c[a * k + b] + total.co_c[b * k + a]) / dof
            })
            .collect(),
        psd: total.welch.as_ref().map(Welch::finish),
    })
}
