// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resonant frequency ratio r = {r}: use the secular solver")]
    Resonance { r: f64 },

    #[error("numerical failure in trajectory {index}: {reason}")]
    Numeric { index: u64, reason: String },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("Fock truncation too small: tail population {tail:.3e} at n_fock = {n_fock}; need at least {required}")]
    Truncation { n_fock: usize, tail: f64, required: usize },

    #[error("ill-conditioned fit: condition number {0:.3e}")]
    IllConditioned(f64),

    #[error("no signal: coupling g must be positive")]
    NoSignal,

    #[error("undersampled ensemble: {have} trajectories, need about {need}")]
    Undersampled { have: usize, need: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
