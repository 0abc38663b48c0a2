//! Run configuration: defaults, presets, JSON files and flag overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use signalgame::chain::StateSpace;
use signalgame::dynamics::{Dynamic, ImitationParams, LocalParams};
use signalgame::GameParams;

use crate::error::CliError;

pub const MAX_STATES_ENV: &str = "SIGNALGAME_MAX_STATES";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DynamicKind {
    Imitation,
    Localized,
    Replicator,
}

/// A probability shared by every agent, or one per agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborKeyword {
    /// Every off-diagonal `p_ij` drawn from `Open01` per seed.
    Random,
}

/// Neighbor inclusion probabilities for localized competition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NeighborProbs {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    Keyword(NeighborKeyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2, Preset::Fig3, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn config(self) -> RunConfig {
        let base = RunConfig {
            m: 3,
            n: 3,
            agents: 20,
            epsilon: 0.01,
            d: 3,
            revision_prob: PerAgent::Scalar(0.3),
            record_every: 1,
            ..RunConfig::default()
        };
        match self {
            Preset::Fig2 => RunConfig {
                dynamic: DynamicKind::Imitation,
                horizon: 300,
                ..base
            },
            Preset::Fig3 => RunConfig {
                dynamic: DynamicKind::Localized,
                neighbor_prob: NeighborProbs::Keyword(NeighborKeyword::Random),
                horizon: 1000,
                ..base
            },
            Preset::Fig4 => RunConfig {
                dynamic: DynamicKind::Imitation,
                agents: 10,
                epsilon: 0.2,
                horizon: 50_000,
                ..base
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub agents: usize,
    pub dynamic: DynamicKind,
    pub epsilon: f64,
    pub d: usize,
    pub revision_prob: PerAgent,
    pub neighbor_prob: NeighborProbs,
    pub horizon: u64,
    pub record_every: u64,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Worker threads for multi-seed runs; 0 picks the core count.
    pub threads: usize,
    pub max_states: u64,
    pub sweep_eps: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    /// Replicator start: `uniform`, `fixture`, `random` or `vertex:<id>`.
    pub start: String,
    pub gnuplot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 2,
            n: 2,
            agents: 3,
            dynamic: DynamicKind::Imitation,
            epsilon: 0.01,
            d: 2,
            revision_prob: PerAgent::Scalar(0.3),
            neighbor_prob: NeighborProbs::Scalar(0.5),
            horizon: 300,
            record_every: 1,
            seeds: vec![0],
            out: PathBuf::from("out"),
            threads: 0,
            max_states: StateSpace::DEFAULT_CAP,
            sweep_eps: vec![0.1, 0.03, 0.01, 0.003],
            dt: 0.01,
            steps: 10_000,
            start: "uniform".into(),
            gnuplot: false,
        }
    }
}

/// Flags shared by every subcommand. Anything given here overrides the
/// preset and the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of agents.
    #[arg(long = "N")]
    pub agents: Option<usize>,
    #[arg(long, value_enum)]
    pub dynamic: Option<DynamicKind>,
    /// Mutation radius.
    #[arg(long)]
    pub d: Option<usize>,
    /// Mutation probability.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Revision probability, shared by all agents.
    #[arg(long)]
    pub p: Option<f64>,
    /// Neighbor inclusion probability for localized competition.
    #[arg(long = "neighbor-p")]
    pub neighbor_p: Option<f64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long = "record-every")]
    pub record_every: Option<u64>,
    /// First seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// State-space limit for exact analysis.
    #[arg(long = "max-states")]
    pub max_states: Option<u64>,
    /// Comma-separated epsilons for the stationary sweep.
    #[arg(long = "sweep-eps", value_delimiter = ',')]
    pub sweep_eps: Option<Vec<f64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub start: Option<String>,
    /// Also write a gnuplot script next to the data.
    #[arg(long)]
    pub gnuplot: bool,
}

impl Overrides {
    /// Defaults, then preset, then config file, then the environment limit,
    /// then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        self.resolve_with_env(std::env::var(MAX_STATES_ENV).ok().as_deref())
    }

    pub fn resolve_with_env(&self, max_states_env: Option<&str>) -> Result<RunConfig, CliError> {
        let mut cfg = self.preset.map(Preset::config).unwrap_or_default();
        if let Some(path) = &self.config {
            cfg = load_config(path, cfg)?;
        }
        if let Some(raw) = max_states_env {
            cfg.max_states = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{MAX_STATES_ENV}={raw:?} is not an integer")))?;
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { cfg.$field = v; })*
            };
        }
        set!(
            m => m, n => n, agents => agents, dynamic => dynamic, d => d, eps => epsilon,
            horizon => horizon, record_every => record_every, out => out, threads => threads,
            max_states => max_states, sweep_eps => sweep_eps, dt => dt, steps => steps,
            start => start,
        );
        if let Some(p) = self.p {
            cfg.revision_prob = PerAgent::Scalar(p);
        }
        if let Some(p) = self.neighbor_p {
            cfg.neighbor_prob = NeighborProbs::Scalar(p);
        }
        if self.seed.is_some() || self.runs.is_some() {
            let first = self.seed.or(cfg.seeds.first().copied()).unwrap_or(0);
            cfg.seeds = (first..first + self.runs.unwrap_or(1)).collect();
        }
        cfg.gnuplot |= self.gnuplot;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Read a JSON config; missing fields keep the values of `base`.
pub fn load_config(path: &Path, base: RunConfig) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut merged = serde_json::to_value(base).expect("config serializes");
    let patch: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })?;
    let serde_json::Value::Object(patch) = patch else {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    for (k, v) in patch {
        merged[k] = v;
    }
    serde_json::from_value(merged).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

impl RunConfig {
    pub fn game(&self) -> Result<GameParams, CliError> {
        Ok(GameParams::new(self.m, self.n, self.agents)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.game()?;
        if self.dynamic == DynamicKind::Replicator {
            signalgame::space::LanguageSpace::new(self.m, self.n)?;
            if !(self.dt > 0.0) || self.steps == 0 {
                return usage("replicator needs dt > 0 and steps >= 1");
            }
            parse_start(&self.start, self.m, self.n)?;
        } else {
            self.dynamic_for_seed(self.seeds.first().copied().unwrap_or(0))?;
        }
        if self.horizon == 0 || self.record_every == 0 {
            return usage("horizon and record_every must be at least 1");
        }
        if self.seeds.is_empty() {
            return usage("at least one seed is required");
        }
        if let Some(e) = self.sweep_eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return usage(format!("sweep epsilon {e} outside (0, 1)"));
        }
        Ok(())
    }

    /// Dynamic for one seeded run. Random neighbor matrices come from stream 1
    /// of the seed's generator, so they never consume dynamics draws.
    pub fn dynamic_for_seed(&self, seed: u64) -> Result<Dynamic, CliError> {
        let n = self.agents;
        match self.dynamic {
            DynamicKind::Imitation => {
                let probs = match &self.revision_prob {
                    PerAgent::Scalar(p) => vec![*p; n],
                    PerAgent::List(v) if v.len() == n => v.clone(),
                    PerAgent::List(v) => {
                        return usage(format!("revision_prob lists {} agents, N = {n}", v.len()))
                    }
                };
                Ok(Dynamic::Imitation(ImitationParams::new(self.epsilon, self.d, probs)?))
            }
            DynamicKind::Localized => {
                let matrix = match &self.neighbor_prob {
                    NeighborProbs::Scalar(p) => vec![vec![*p; n]; n],
                    NeighborProbs::Matrix(rows) => rows.clone(),
                    NeighborProbs::Keyword(NeighborKeyword::Random) => random_neighbors(n, seed),
                };
                Ok(Dynamic::Localized(LocalParams::new(self.epsilon, matrix)?))
            }
            DynamicKind::Replicator => usage("the replicator has no agent dynamic"),
        }
    }
}

/// Off-diagonal entries drawn row by row from `Open01`; diagonal set to 1.
pub fn random_neighbors(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { rng.sample(Open01) })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Uniform,
    Fixture,
    Random,
    Vertex(usize),
}

pub fn parse_start(raw: &str, m: usize, n: usize) -> Result<Start, CliError> {
    let start = match raw {
        "uniform" => Start::Uniform,
        "random" => Start::Random,
        "fixture" if (m, n) == (2, 2) => Start::Fixture,
        "fixture" => return usage("the fixture start is defined for m = n = 2 only"),
        other => match other.strip_prefix("vertex:").map(str::parse::<usize>) {
            Some(Ok(k)) => Start::Vertex(k),
            _ => return usage(format!("unknown start {other:?}")),
        },
    };
    if let Start::Vertex(k) = start {
        let count = signalgame::lang::language_count(m, n).unwrap_or(u64::MAX);
        if k as u64 >= count {
            return usage(format!("vertex {k} out of range for {count} languages"));
        }
    }
    Ok(start)
}
