// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! `qubit-kick`: force tables, trajectories, ensembles, verification suites and
//! state reconstruction for an oscillator driven by a qubit.
//!
//! Exit status is 0 on success, 1 when a run or its built-in check fails, and
//! 2 for usage and configuration errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qubit_kick::dynamics::Solver;
use qubit_kick::forces::force_table;
use qubit_kick::params::RunConfig;

use commands::Outcome;
use output::{config_echo, emit, envelope, Format};

#[derive(Parser, Debug)]
#[command(name = "qubit-kick", version, about = "Qubit-induced forces on a classical mechanical oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file, written atomically; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare force magnitudes for the built-in ion, nanodiamond and piezo
    /// presets (Meekhof et al. 1996, Yin et al. 2013, Bild et al. 2023) with
    /// the published values.
    Table1 {
        /// Use the two-significant-figure parameters instead of the source values.
        #[arg(long)]
        rounded: bool,
    },
    /// One trajectory, CSV `tau,q,p`.
    Simulate {
        /// Trajectory index within the seed's ensemble.
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long, value_enum, default_value_t = SolverArg::ClosedForm)]
        solver: SolverArg,
    },
    /// Ensemble moments, CSV `tau,mean_q,mean_p,var_q`.
    Ensemble {
        #[arg(long, value_enum, default_value_t = SolverArg::ClosedForm)]
        solver: SolverArg,
        /// Also write the Welch PSD of `q` as CSV `freq,psd`.
        #[arg(long)]
        psd: Option<PathBuf>,
    },
    /// Verification suites.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Infer the qubit state from a generated ensemble.
    Reconstruct {
        /// Sub-ensembles used for the covariance-mode standard errors.
        #[arg(long, default_value_t = 20)]
        batches: usize,
    },
    /// `eta_f`, `eta_st` over the Bloch sphere, CSV `theta,phi,eta_f,eta_st`.
    BlochMap {
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Second-order product formula against the exact two-level propagator.
    Bch,
    /// Expanded influence functional against the exact overlap.
    Influence,
    /// Sampled noise covariance against the exact kernel.
    Noise {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Truncated Jaynes-Cummings evolution against the classical mean.
    Oracle {
        /// Final rescaled time.
        #[arg(long, default_value_t = 20.0)]
        horizon: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    ClosedForm,
    Rk4,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::ClosedForm => Solver::ClosedForm,
            SolverArg::Rk4 => Solver::Rk4,
        }
    }
}

enum Failure {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.sim.seed = s;
    }
    let dp = cfg.dimensionless().map_err(|e| Failure::Usage(e.to_string()))?;
    cfg.sim.validate(&dp).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<String>, Failure> {
    let cfg = load_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Run(e.into()))?;
    }

    let (name, extra, outcome): (&str, Vec<(&str, String)>, Outcome) = match &cli.command {
        Command::Table1 { rounded } => {
            let o = commands::table1(*rounded);
            if cli.format.is_none() {
                let text = commands::table1_text(&force_table(*rounded));
                emit(cli.out.as_deref(), &text)?;
                return Ok(o.failures);
            }
            ("table1", vec![("rounded", rounded.to_string())], o)
        }
        Command::Simulate { index, solver } => (
            "simulate",
            vec![("index", index.to_string()), ("solver", format!("{solver:?}"))],
            commands::simulate(&cfg, *index, (*solver).into())?,
        ),
        Command::Ensemble { solver, psd } => (
            "ensemble",
            vec![("solver", format!("{solver:?}"))],
            commands::ensemble(&cfg, (*solver).into(), psd.as_deref())?,
        ),
        Command::Verify { what } => match what {
            Verify::Bch => ("verify bch", vec![], commands::verify_bch_cmd(&cfg)?),
            Verify::Influence => ("verify influence", vec![], commands::verify_influence_cmd(&cfg)?),
            Verify::Noise { samples } => {
                ("verify noise", vec![("samples", samples.to_string())], commands::verify_noise_cmd(&cfg, *samples)?)
            }
            Verify::Oracle { horizon } => {
                ("verify oracle", vec![("horizon", horizon.to_string())], commands::verify_oracle_cmd(&cfg, *horizon)?)
            }
        },
        Command::Reconstruct { batches } => {
            ("reconstruct", vec![("batches", batches.to_string())], commands::reconstruct_cmd(&cfg, *batches)?)
        }
        Command::BlochMap { resolution } => (
            "bloch-map",
            vec![("resolution", resolution.to_string())],
            commands::bloch_map_cmd(*resolution)?,
        ),
    };

    let format = cli.format.unwrap_or(if name == "reconstruct" { Format::Json } else { Format::Csv });
    let text = match format {
        Format::Csv => outcome.payload.csv,
        Format::Json => envelope(name, config_echo(&cfg.to_text(), &extra), outcome.payload.data),
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(outcome.failures)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
