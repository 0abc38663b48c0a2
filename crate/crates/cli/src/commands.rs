use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use signalgame::chain::{epsilon_sweep, verify as verify_game, StateSpace, SweepRow, VerifyReport};
use signalgame::dynamics::{fraction_aligned, random_profile, run, Trajectory};
use signalgame::replicator::{integrate, payoff_matrix, suboptimal_start, ReplicatorRun};
use signalgame::LanguageId;

use crate::config::{parse_start, DynamicKind, RunConfig, Start};
use crate::error::CliError;

pub const PRNG: &str = "ChaCha8Rng (rand_chacha 0.3)";

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    prng: &'a str,
    /// What each generator stream is used for.
    streams: [&'a str; 2],
    config: &'a RunConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_with<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    body(&mut out).and_then(|_| out.flush()).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_with(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

/// Create the output directory and record the resolved run.
fn prepare(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    write_json(
        &cfg.out.join("metadata.json"),
        &Metadata {
            command,
            version: env!("CARGO_PKG_VERSION"),
            prng: PRNG,
            streams: [
                "stream 0: initial profile, then dynamics draws",
                "stream 1: random neighbor probabilities",
            ],
            config: cfg,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub csv: PathBuf,
    pub initial_frac_aligned: f64,
    /// Mean aligned fraction over the last half of the horizon.
    pub tail_mean_frac_aligned: f64,
    pub terminal_frac_aligned: f64,
    pub terminal_majority: LanguageId,
    /// Aligned languages that held a strict majority at some recorded step.
    pub aligned_majorities: Vec<LanguageId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub tail_window: (u64, u64),
    pub mean_tail_frac_aligned: f64,
    pub runs: Vec<SeedSummary>,
}

/// Run one seed without writing anything.
pub fn simulate_seed(cfg: &RunConfig, seed: u64) -> Result<Trajectory, CliError> {
    let dynamic = cfg.dynamic_for_seed(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_profile(cfg.game()?, &mut rng)?;
    Ok(run(initial, &dynamic, cfg.horizon, cfg.record_every, &mut rng)?)
}

pub fn summarize(cfg: &RunConfig, seed: u64, traj: &Trajectory, csv: PathBuf) -> SeedSummary {
    let first = traj.records.first().expect("initial record");
    let last = traj.records.last().expect("initial record");
    let half = cfg.agents;
    let aligned_majorities = traj
        .aligned_ids
        .iter()
        .enumerate()
        .filter(|&(k, _)| traj.records.iter().any(|r| 2 * r.aligned_counts[k] > half))
        .map(|(_, &id)| id)
        .collect();
    SeedSummary {
        seed,
        csv,
        initial_frac_aligned: first.frac_aligned.to_f64(),
        tail_mean_frac_aligned: traj
            .mean_fraction_aligned(cfg.horizon / 2, cfg.horizon)
            .unwrap_or(f64::NAN),
        terminal_frac_aligned: last.frac_aligned.to_f64(),
        terminal_majority: last.majority,
        aligned_majorities,
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

/// One CSV per seed plus `summary.json`, seeds in parallel.
pub fn simulate(cfg: &RunConfig) -> Result<SimulateSummary, CliError> {
    if cfg.dynamic == DynamicKind::Replicator {
        return Err(CliError::Usage("use the replicator subcommand for the replicator".into()));
    }
    prepare(cfg, "simulate")?;
    let runs = pool(cfg.threads)?.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let traj = simulate_seed(cfg, seed)?;
                let csv = cfg.out.join(format!("seed_{seed}.csv"));
                write_with(&csv, |out| traj.write_csv(out))?;
                Ok(summarize(cfg, seed, &traj, csv))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let summary = SimulateSummary {
        tail_window: (cfg.horizon / 2, cfg.horizon),
        mean_tail_frac_aligned: runs.iter().map(|r| r.tail_mean_frac_aligned).sum::<f64>() / runs.len() as f64,
        runs,
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    if cfg.gnuplot {
        let files: Vec<String> = summary
            .runs
            .iter()
            .map(|r| r.csv.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        let k = signalgame::space::aligned_language_ids(cfg.m, cfg.n)?.len();
        write_with(&cfg.out.join("plot.gp"), |out| {
            writeln!(out, "set datafile separator ','")?;
            writeln!(out, "set key autotitle columnhead")?;
            writeln!(out, "set xlabel 't'")?;
            writeln!(out, "set ylabel 'fraction aligned'")?;
            writeln!(out, "plot for [f in \"{}\"] f using 1:2 with lines title f", files.join(" "))?;
            writeln!(out, "pause -1")?;
            writeln!(out, "set ylabel 'agents'")?;
            writeln!(out, "plot for [c=5:{}] '{}' using 1:c with lines", 4 + k, files[0])?;
            writeln!(out, "pause -1")
        })?;
    }
    Ok(summary)
}

pub fn verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let dynamic = cfg.dynamic_for_seed(cfg.seeds[0])?;
    let report = verify_game(cfg.game()?, &dynamic, cfg.max_states, &cfg.sweep_eps)?;
    prepare(cfg, "verify")?;
    write_json(&cfg.out.join("verify.json"), &report)?;
    Ok(report)
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let dynamic = cfg.dynamic_for_seed(cfg.seeds[0])?;
    let space = StateSpace::new(cfg.game()?, cfg.max_states)?;
    let rows = epsilon_sweep(&space, &dynamic, &cfg.sweep_eps)?;
    prepare(cfg, "sweep")?;
    write_with(&cfg.out.join("sweep.csv"), |out| {
        writeln!(out, "eps,optimal_mass,top_state_id,top_state_mass")?;
        for r in &rows {
            writeln!(out, "{},{},{},{}", r.eps, r.optimal_mass, r.top_state, r.top_state_mass)?;
        }
        Ok(())
    })?;
    if cfg.gnuplot {
        write_with(&cfg.out.join("plot.gp"), |out| {
            writeln!(out, "set datafile separator ','")?;
            writeln!(out, "set logscale x")?;
            writeln!(out, "set xlabel 'epsilon'")?;
            writeln!(out, "set ylabel 'stationary mass on optimal states'")?;
            writeln!(out, "plot 'sweep.csv' using 1:2 skip 1 with linespoints notitle")?;
            writeln!(out, "pause -1")
        })?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicatorSummary {
    pub languages: usize,
    pub initial_w: f64,
    pub terminal_w: f64,
    pub terminal_residual: f64,
    /// Largest single-record decrease of `W`; zero when `W` never drops.
    pub max_w_drop: f64,
}

pub fn initial_state(start: Start, k: usize, seed: u64) -> Vec<f64> {
    match start {
        Start::Uniform => vec![1.0 / k as f64; k],
        Start::Fixture => suboptimal_start(),
        Start::Vertex(v) => (0..k).map(|i| if i == v { 1.0 } else { 0.0 }).collect(),
        Start::Random => {
            // Flat Dirichlet from normalized exponentials.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        }
    }
}

pub fn replicator(cfg: &RunConfig) -> Result<(ReplicatorRun, ReplicatorSummary), CliError> {
    let start = parse_start(&cfg.start, cfg.m, cfg.n)?;
    let a = payoff_matrix(cfg.m, cfg.n)?;
    let x0 = initial_state(start, a.len(), cfg.seeds[0]);
    let run = integrate(&x0, &a, cfg.dt, cfg.steps, cfg.record_every as usize)?;
    prepare(cfg, "replicator")?;
    write_with(&cfg.out.join("replicator.csv"), |out| run.write_csv(out))?;
    let ws = &run.mean_fitness;
    let summary = ReplicatorSummary {
        languages: a.len(),
        initial_w: ws[0],
        terminal_w: *ws.last().unwrap(),
        terminal_residual: run.terminal_residual,
        max_w_drop: ws.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max),
    };
    write_json(&cfg.out.join("replicator_summary.json"), &summary)?;
    if cfg.gnuplot {
        write_with(&cfg.out.join("plot.gp"), |out| {
            writeln!(out, "set datafile separator ','")?;
            writeln!(out, "set xlabel 't'")?;
            writeln!(out, "plot 'replicator.csv' using 1:2 skip 1 with lines title 'W'")?;
            writeln!(out, "pause -1")
        })?;
    }
    Ok((run, summary))
}

/// Initial profile's aligned fraction for a seed, as drawn by [`simulate_seed`].
pub fn initial_fraction_aligned(cfg: &RunConfig, seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(fraction_aligned(&random_profile(cfg.game()?, &mut rng)?).to_f64())
}
