//! Command-line front end for `signalgame`: seeded simulation, exact
//! verification reports, stationary sweeps and replicator runs.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;

use clap::{Parser, Subcommand};

use config::{Overrides, Preset};
use error::{CliError, EXIT_CAP, EXIT_VERIFY_FAILED};

#[derive(Parser, Debug)]
#[command(name = "signalgame", version, about = "Atomic signaling games: simulate, verify, sweep")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Seeded trajectories, one CSV per seed plus a summary.
    Simulate(Overrides),
    /// Recurrent classes, resistances and stochastic potentials; exits 2 if
    /// the stable set differs from the optimal states.
    Verify(Overrides),
    /// Exact stationary mass on optimal states across epsilon.
    Sweep(Overrides),
    /// Replicator dynamics over the full language set.
    Replicator(Overrides),
    /// Print the built-in presets as JSON.
    Presets,
}

/// Every preset, keyed by name.
pub fn presets_json() -> serde_json::Value {
    Preset::ALL
        .iter()
        .map(|p| (p.name().to_string(), serde_json::to_value(p.config()).expect("serializes")))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

/// Run a parsed command, writing human-readable output to `out`. Returns the
/// process exit code.
pub fn execute<W: Write>(cli: Cli, out: &mut W) -> Result<i32, CliError> {
    let io = |e| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match cli.command {
        Command::Presets => {
            writeln!(out, "{}", serde_json::to_string_pretty(&presets_json()).unwrap()).map_err(io)?;
            Ok(0)
        }
        Command::Simulate(o) => {
            let cfg = o.resolve()?;
            let summary = commands::simulate(&cfg)?;
            for r in &summary.runs {
                writeln!(
                    out,
                    "seed {}: tail mean aligned {:.4}, terminal majority {}",
                    r.seed, r.tail_mean_frac_aligned, r.terminal_majority
                )
                .map_err(io)?;
            }
            writeln!(out, "wrote {}", cfg.out.display()).map_err(io)?;
            Ok(0)
        }
        Command::Verify(o) => {
            let cfg = o.resolve()?;
            let report = commands::verify(&cfg)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).map_err(io)?;
            Ok(match report.verdict {
                signalgame::chain::Verdict::Fail => EXIT_VERIFY_FAILED,
                _ => 0,
            })
        }
        Command::Sweep(o) => {
            let cfg = o.resolve()?;
            writeln!(out, "eps,optimal_mass,top_state_id,top_state_mass").map_err(io)?;
            for r in commands::sweep(&cfg)? {
                writeln!(out, "{},{},{},{}", r.eps, r.optimal_mass, r.top_state, r.top_state_mass)
                    .map_err(io)?;
            }
            Ok(0)
        }
        Command::Replicator(o) => {
            let mut cfg = o.resolve()?;
            cfg.dynamic = config::DynamicKind::Replicator;
            let (_, summary) = commands::replicator(&cfg)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&summary).unwrap()).map_err(io)?;
            Ok(0)
        }
    }
}

/// Extra guidance printed after an error.
pub fn hint(err: &CliError) -> Option<String> {
    (err.exit_code() == EXIT_CAP).then(|| {
        format!(
            "tractable instances: (m, n, N) in {{(2, 2, 2), (2, 2, 3)}}; \
             raise the limit with --max-states or {}",
            config::MAX_STATES_ENV
        )
    })
}
