//! Seeded simulation of the imitation-with-mutation and localized-competition
//! dynamics.
//!
//! # Random draw order
//!
//! Every step walks the agents in index order and draws, per agent:
//!
//! * imitation: one uniform `f64` for the revision decision; if active, one
//!   uniform `f64` for imitate-vs-mutate, then one `gen_range` index into
//!   either the fittest-agent list or the sorted mutation disk.
//! * localized: one uniform `f64` per other agent `j != i` for neighborhood
//!   membership (in `j` order), one uniform `f64` for imitate-vs-mutate, then
//!   one `gen_range` index into the neighborhood's fittest list or into the
//!   full language set.
//!
//! Initial profiles drawn by [`random_profile`] take one `gen_range` id per
//! agent. With a fixed generator (the CLI uses `ChaCha8Rng`) the trajectory is
//! a pure function of the seed.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{disk_ids, is_aligned, GameParams, Language, LanguageId, Profile};
use crate::ratio::Ratio;
use crate::space::aligned_language_ids;

/// Parameters of the global imitation dynamic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImitationParams {
    /// Mutation probability. Zero is accepted and gives the unperturbed chain.
    pub epsilon: f64,
    /// Mutation radius `d >= 1`.
    pub radius: usize,
    /// Per-agent revision probabilities, each in `(0, 1)`.
    pub revision_probs: Vec<f64>,
}

impl ImitationParams {
    pub fn new(epsilon: f64, radius: usize, revision_probs: Vec<f64>) -> Result<Self> {
        check_epsilon(epsilon)?;
        if radius < 1 {
            return Err(Error::InvalidParams("mutation radius must be at least 1".into()));
        }
        if let Some(p) = revision_probs.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidParams(format!(
                "revision probability {p} outside (0, 1)"
            )));
        }
        Ok(ImitationParams {
            epsilon,
            radius,
            revision_probs,
        })
    }

    pub fn uniform(epsilon: f64, radius: usize, revision_prob: f64, agents: usize) -> Result<Self> {
        Self::new(epsilon, radius, vec![revision_prob; agents])
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.radius, self.revision_probs.clone())
    }
}

/// Parameters of the localized-competition dynamic.
///
/// Agent `i` always observes itself; the diagonal of `neighbor_probs` is not
/// used. Off-diagonal entries must lie in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalParams {
    pub epsilon: f64,
    pub neighbor_probs: Vec<Vec<f64>>,
}

impl LocalParams {
    pub fn new(epsilon: f64, neighbor_probs: Vec<Vec<f64>>) -> Result<Self> {
        check_epsilon(epsilon)?;
        let n = neighbor_probs.len();
        for (i, row) in neighbor_probs.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParams(format!(
                    "neighbor matrix row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if i != j && !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "neighbor probability p[{i}][{j}] = {p} outside (0, 1]"
                    )));
                }
            }
        }
        Ok(LocalParams {
            epsilon,
            neighbor_probs,
        })
    }

    pub fn uniform(epsilon: f64, p: f64, agents: usize) -> Result<Self> {
        Self::new(epsilon, vec![vec![p; agents]; agents])
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.neighbor_probs.clone())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParams(format!(
            "mutation probability {epsilon} outside [0, 1)"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dynamic {
    Imitation(ImitationParams),
    Localized(LocalParams),
}

impl Dynamic {
    pub fn epsilon(&self) -> f64 {
        match self {
            Dynamic::Imitation(p) => p.epsilon,
            Dynamic::Localized(p) => p.epsilon,
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Ok(match self {
            Dynamic::Imitation(p) => Dynamic::Imitation(p.with_epsilon(epsilon)?),
            Dynamic::Localized(p) => Dynamic::Localized(p.with_epsilon(epsilon)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dynamic::Imitation(_) => "imitation",
            Dynamic::Localized(_) => "localized",
        }
    }

    /// True when relabeling agents leaves the transition law unchanged.
    pub fn is_exchangeable(&self) -> bool {
        match self {
            Dynamic::Imitation(p) => p.revision_probs.windows(2).all(|w| w[0] == w[1]),
            Dynamic::Localized(p) => {
                let mut off = p.neighbor_probs.iter().enumerate().flat_map(|(i, row)| {
                    row.iter().enumerate().filter(move |&(j, _)| j != i).map(|(_, &x)| x)
                });
                match off.next() {
                    Some(first) => off.all(|x| x == first),
                    None => true,
                }
            }
        }
    }

    pub(crate) fn check_agents(&self, agents: usize) -> Result<()> {
        let len = match self {
            Dynamic::Imitation(p) => p.revision_probs.len(),
            Dynamic::Localized(p) => p.neighbor_probs.len(),
        };
        if len != agents {
            return Err(Error::InvalidParams(format!(
                "{} parameters sized for {len} agents, profile has {agents}",
                self.name()
            )));
        }
        Ok(())
    }
}

/// What happened to one agent during a step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Update {
    /// Did not revise, or had an empty choice set.
    Kept,
    /// Copied the language agent `source` held before the step.
    Imitated { source: usize },
    /// Drew a language from the mutation set.
    Mutated,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub profile: Profile,
    pub updates: Vec<Update>,
}

/// One step of the global imitation dynamic.
pub fn step_imitation<R: Rng + ?Sized>(
    profile: &Profile,
    params: &ImitationParams,
    rng: &mut R,
) -> Result<Profile> {
    step_imitation_traced(profile, params, rng).map(|o| o.profile)
}

/// [`step_imitation`] that also reports each agent's update.
pub fn step_imitation_traced<R: Rng + ?Sized>(
    profile: &Profile,
    params: &ImitationParams,
    rng: &mut R,
) -> Result<StepOutcome> {
    Dynamic::Imitation(params.clone()).check_agents(profile.len())?;
    let fittest = profile.fittest();
    let prev = profile.langs();
    let mut next = Vec::with_capacity(prev.len());
    let mut updates = Vec::with_capacity(prev.len());
    for (i, own) in prev.iter().enumerate() {
        if rng.gen::<f64>() >= params.revision_probs[i] {
            next.push(own.clone());
            updates.push(Update::Kept);
            continue;
        }
        if rng.gen::<f64>() < params.epsilon {
            let choices = disk_ids(own, params.radius);
            let pick = choices[rng.gen_range(0..choices.len())];
            next.push(Language::from_id(own.m(), own.n(), pick)?);
            updates.push(Update::Mutated);
        } else {
            let source = fittest[rng.gen_range(0..fittest.len())];
            next.push(prev[source].clone());
            updates.push(Update::Imitated { source });
        }
    }
    Ok(StepOutcome {
        profile: Profile::new(next)?,
        updates,
    })
}

/// One step of the localized-competition dynamic.
pub fn step_localized<R: Rng + ?Sized>(
    profile: &Profile,
    params: &LocalParams,
    rng: &mut R,
) -> Result<Profile> {
    step_localized_traced(profile, params, rng).map(|o| o.profile)
}

pub fn step_localized_traced<R: Rng + ?Sized>(
    profile: &Profile,
    params: &LocalParams,
    rng: &mut R,
) -> Result<StepOutcome> {
    Dynamic::Localized(params.clone()).check_agents(profile.len())?;
    let game = profile.params();
    let count = game
        .language_count()
        .ok_or_else(|| Error::InvalidParams("language count overflows".into()))?;
    let fitness = profile.all_fitness_scaled();
    let prev = profile.langs();
    let mut next = Vec::with_capacity(prev.len());
    let mut updates = Vec::with_capacity(prev.len());
    let mut neighborhood = Vec::with_capacity(prev.len());
    for i in 0..prev.len() {
        neighborhood.clear();
        for j in 0..prev.len() {
            if j == i || rng.gen::<f64>() < params.neighbor_probs[i][j] {
                neighborhood.push(j);
            }
        }
        if rng.gen::<f64>() < params.epsilon {
            let pick = LanguageId(rng.gen_range(0..count));
            next.push(Language::from_id(game.m, game.n, pick)?);
            updates.push(Update::Mutated);
        } else {
            let best = neighborhood.iter().map(|&j| fitness[j]).max().unwrap_or(0);
            let tied: Vec<usize> = neighborhood
                .iter()
                .copied()
                .filter(|&j| fitness[j] == best)
                .collect();
            let source = tied[rng.gen_range(0..tied.len())];
            next.push(prev[source].clone());
            updates.push(if source == i {
                Update::Kept
            } else {
                Update::Imitated { source }
            });
        }
    }
    Ok(StepOutcome {
        profile: Profile::new(next)?,
        updates,
    })
}

pub fn step<R: Rng + ?Sized>(profile: &Profile, dynamic: &Dynamic, rng: &mut R) -> Result<Profile> {
    match dynamic {
        Dynamic::Imitation(p) => step_imitation(profile, p, rng),
        Dynamic::Localized(p) => step_localized(profile, p, rng),
    }
}

/// Each agent independently uniform over the full language set.
pub fn random_profile<R: Rng + ?Sized>(params: GameParams, rng: &mut R) -> Result<Profile> {
    let count = params
        .language_count()
        .ok_or_else(|| Error::InvalidParams("language count overflows".into()))?;
    let ids: Vec<LanguageId> = (0..params.agents)
        .map(|_| LanguageId(rng.gen_range(0..count)))
        .collect();
    Profile::from_ids(params, &ids)
}

/// Share of agents on an aligned language.
pub fn fraction_aligned(profile: &Profile) -> Ratio {
    let aligned = profile.langs().iter().filter(|l| is_aligned(l)).count();
    Ratio::new(aligned as u64, profile.len() as u64)
}

/// Number of agents on each aligned language, zero entries included.
pub fn aligned_census(profile: &Profile) -> Result<BTreeMap<LanguageId, usize>> {
    let params = profile.params();
    let mut census: BTreeMap<LanguageId, usize> = aligned_language_ids(params.m, params.n)?
        .into_iter()
        .map(|id| (id, 0))
        .collect();
    for lang in profile.langs().iter().filter(|l| is_aligned(l)) {
        *census.entry(lang.id()).or_default() += 1;
    }
    Ok(census)
}

/// Most common language; ties go to the smallest id.
pub fn majority_language(profile: &Profile) -> LanguageId {
    let mut counts: BTreeMap<LanguageId, usize> = BTreeMap::new();
    for id in profile.ids() {
        *counts.entry(id).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, c)| c == best)
        .map(|(id, _)| id)
        .expect("non-empty profile")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub ids: Vec<LanguageId>,
    pub frac_aligned: Ratio,
    pub avg_fitness: Ratio,
    pub majority: LanguageId,
    /// Counts aligned with [`Trajectory::aligned_ids`].
    pub aligned_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: GameParams,
    pub dynamic: Dynamic,
    pub aligned_ids: Vec<LanguageId>,
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    fn record(&mut self, t: u64, profile: &Profile) {
        let ids = profile.ids();
        let aligned_counts = self
            .aligned_ids
            .iter()
            .map(|a| ids.iter().filter(|&id| id == a).count())
            .collect();
        self.records.push(TrajectoryRecord {
            t,
            ids,
            frac_aligned: fraction_aligned(profile),
            avg_fitness: profile.avg_fitness(),
            majority: majority_language(profile),
            aligned_counts,
        });
    }

    /// `t,frac_aligned,avg_fitness,majority_lang_id,count_<id>...`
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t,frac_aligned,avg_fitness,majority_lang_id")?;
        for id in &self.aligned_ids {
            write!(out, ",count_{id}")?;
        }
        writeln!(out)?;
        for r in &self.records {
            write!(
                out,
                "{},{},{},{}",
                r.t,
                r.frac_aligned.to_f64(),
                r.avg_fitness.to_f64(),
                r.majority
            )?;
            for c in &r.aligned_counts {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// One JSON array of language ids per recorded step.
    pub fn write_snapshots<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, &r.ids)?;
            writeln!(out)?;
        }
        Ok(())
    }

    /// Mean aligned fraction over records with `from <= t <= to`.
    pub fn mean_fraction_aligned(&self, from: u64, to: u64) -> Option<f64> {
        let window: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.t >= from && r.t <= to)
            .map(|r| r.frac_aligned.to_f64())
            .collect();
        if window.is_empty() {
            None
        } else {
            Some(window.iter().sum::<f64>() / window.len() as f64)
        }
    }
}

/// Iterate `dynamic` for `horizon` steps, recording at `t = 0` and every
/// `record_every` steps after.
pub fn run<R: Rng + ?Sized>(
    initial: Profile,
    dynamic: &Dynamic,
    horizon: u64,
    record_every: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    if record_every == 0 {
        return Err(Error::InvalidParams("record_every must be at least 1".into()));
    }
    dynamic.check_agents(initial.len())?;
    let params = initial.params();
    let mut traj = Trajectory {
        params,
        dynamic: dynamic.clone(),
        aligned_ids: aligned_language_ids(params.m, params.n)?,
        records: Vec::new(),
    };
    traj.record(0, &initial);
    let mut profile = initial;
    for t in 1..=horizon {
        profile = step(&profile, dynamic, rng)?;
        if t % record_every == 0 {
            traj.record(t, &profile);
        }
    }
    Ok(traj)
}
