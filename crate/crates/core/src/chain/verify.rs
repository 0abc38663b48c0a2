//! End-to-end check that the stochastically stable states are exactly the
//! optimal ones.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dynamics::Dynamic;
use crate::error::{Error, Result};
use crate::lang::{GameParams, LanguageId};

use super::arborescence::stochastic_potential;
use super::kernel::TransitionModel;
use super::resistance::least_resistance;
use super::state::StateSpace;
use super::stationary::{gth, AgentLumping};

/// Largest dense system handed to the exact stationary solver.
pub const MAX_DENSE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Two agents: every unilateral deviation is payoff-neutral, so the test
    /// does not apply.
    Degenerate,
}

/// Stationary masses at one epsilon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub optimal_mass: f64,
    /// Mass of each optimal state, in ascending language order.
    pub optimal_masses: Vec<f64>,
    pub top_state: usize,
    pub top_state_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub params: GameParams,
    pub dynamic: Dynamic,
    pub states: usize,
    pub classes: Vec<LanguageId>,
    /// `[from, to, r]` for every ordered pair; `r` is null when infinite.
    pub resistances: Vec<(LanguageId, LanguageId, Option<u32>)>,
    pub gamma: BTreeMap<LanguageId, Option<u64>>,
    pub stable_set: Vec<LanguageId>,
    pub optimal_set: Vec<LanguageId>,
    pub epsilon_sweep: Vec<SweepRow>,
    pub verdict: Verdict,
    /// Set when the instance lies outside the case where optimal states are
    /// known to be the complete stable set.
    pub empirical: bool,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Build the exact stationary solver for a space, lumping over agents when the
/// dynamic is exchangeable. `None` if the dense system would be too large.
fn sweep_plan(space: &StateSpace, dynamic: &Dynamic) -> Option<Option<AgentLumping>> {
    if dynamic.is_exchangeable() {
        let lumping = AgentLumping::new(space);
        (lumping.orbits() <= MAX_DENSE).then_some(Some(lumping))
    } else {
        (space.len() <= MAX_DENSE).then_some(None)
    }
}

/// Whether [`epsilon_sweep`] can run on this instance.
pub fn sweep_feasible(space: &StateSpace, dynamic: &Dynamic) -> bool {
    sweep_plan(space, dynamic).is_some()
}

/// Exact stationary masses on the optimal states at each epsilon.
pub fn epsilon_sweep(space: &StateSpace, dynamic: &Dynamic, epsilons: &[f64]) -> Result<Vec<SweepRow>> {
    let plan = sweep_plan(space, dynamic).ok_or(Error::StateSpaceTooLarge {
        states: space.len() as u128,
        cap: MAX_DENSE as u64,
    })?;
    let optimal = space.optimal_states();
    epsilons
        .iter()
        .map(|&eps| {
            if !(eps > 0.0) {
                return Err(Error::InvalidParams(format!("sweep epsilon {eps} must be positive")));
            }
            let d = dynamic.with_epsilon(eps)?;
            let model = TransitionModel::build(space, &d)?;
            let mass_of: Box<dyn Fn(usize) -> f64> = match &plan {
                Some(lumping) => {
                    let nu = gth(lumping.lumped_kernel(&model), lumping.orbits())?;
                    Box::new(move |s| {
                        let o = lumping.orbit_of(s);
                        nu[o] / lumping.orbit_size(o) as f64
                    })
                }
                None => {
                    let mu = gth(model.to_dense()?, model.len())?;
                    Box::new(move |s| mu[s])
                }
            };
            let optimal_masses: Vec<f64> = optimal.iter().map(|&s| mass_of(s)).collect();
            let (top_state, top_state_mass) = (0..space.len())
                .map(|s| (s, mass_of(s)))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            Ok(SweepRow {
                eps,
                optimal_mass: optimal_masses.iter().sum(),
                optimal_masses,
                top_state,
                top_state_mass,
            })
        })
        .collect()
}

/// Compute recurrent classes, least resistances and stochastic potentials,
/// and compare the minimizers with the optimal states. `sweep` lists epsilons
/// for the stationary corroboration; it is skipped with a warning when the
/// instance is too large for the exact solver.
pub fn verify(game: GameParams, dynamic: &Dynamic, cap: u64, sweep: &[f64]) -> Result<VerifyReport> {
    let space = StateSpace::new(game, cap)?;
    dynamic.check_agents(space.agents())?;
    let mut warnings = Vec::new();

    let rg = least_resistance(&space, dynamic)?;
    let classes = (0..rg.len())
        .map(|i| {
            rg.language_id(i).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "recurrent class {:?} is not a homogeneous state",
                    rg.classes()[i]
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let potential = stochastic_potential(&rg)?;

    let mut resistances = Vec::with_capacity(classes.len() * classes.len());
    for (i, &a) in classes.iter().enumerate() {
        for (j, &b) in classes.iter().enumerate() {
            resistances.push((a, b, rg.resistance(i, j)));
        }
    }
    let gamma = classes.iter().copied().zip(potential.gamma.iter().copied()).collect();
    let stable_set: Vec<LanguageId> = potential.minimizers.iter().map(|&i| classes[i]).collect();
    let optimal_set = space.languages().aligned_ids().to_vec();

    let empirical = game.m != game.n;
    if empirical {
        warnings.push(
            "m != n: optimal states are not known to be the complete stable set; \
             this result is empirical"
                .to_string(),
        );
    }
    let verdict = if game.agents == 2 {
        warnings.push(
            "N = 2: deviation gains carry a factor N - 2 and vanish, so fitness does not \
             separate optimal from suboptimal states; no verdict"
                .to_string(),
        );
        Verdict::Degenerate
    } else if stable_set == optimal_set {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let epsilon_sweep = if sweep.is_empty() {
        Vec::new()
    } else if sweep_feasible(&space, dynamic) {
        epsilon_sweep(&space, dynamic, sweep)?
    } else {
        warnings.push(format!(
            "stationary sweep skipped: exact solve limited to {MAX_DENSE} (lumped) states"
        ));
        Vec::new()
    };

    Ok(VerifyReport {
        params: game,
        dynamic: dynamic.clone(),
        states: space.len(),
        classes,
        resistances,
        gamma,
        stable_set,
        optimal_set,
        epsilon_sweep,
        verdict,
        empirical,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ImitationParams;

    #[test]
    fn two_agent_instance_is_degenerate() {
        let game = GameParams::new(2, 2, 2).unwrap();
        let dynamic = Dynamic::Imitation(ImitationParams::uniform(0.01, 2, 0.3, 2).unwrap());
        let report = verify(game, &dynamic, 1000, &[0.1]).unwrap();
        assert_eq!(report.verdict, Verdict::Degenerate);
        assert_eq!(report.classes.len(), 16);
        assert_eq!(report.epsilon_sweep.len(), 1);
        assert!(report.warnings.iter().any(|w| w.contains("N = 2")));
    }

    #[test]
    fn cap_and_size_checks() {
        let game = GameParams::new(2, 3, 3).unwrap();
        let dynamic = Dynamic::Imitation(ImitationParams::uniform(0.01, 2, 0.3, 3).unwrap());
        assert!(matches!(
            verify(game, &dynamic, 100_000, &[]),
            Err(Error::StateSpaceTooLarge { .. })
        ));
        let game = GameParams::new(2, 2, 3).unwrap();
        let wrong = Dynamic::Imitation(ImitationParams::uniform(0.01, 2, 0.3, 4).unwrap());
        assert!(verify(game, &wrong, 100_000, &[]).is_err());
    }

    #[test]
    fn report_json_shape() {
        let game = GameParams::new(2, 2, 2).unwrap();
        let dynamic = Dynamic::Imitation(ImitationParams::uniform(0.01, 1, 0.3, 2).unwrap());
        let report = verify(game, &dynamic, 1000, &[]).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["resistances"][1].as_array().unwrap().len(), 3);
        assert!(json["gamma"].as_object().unwrap().contains_key("0"));
        assert_eq!(json["verdict"], "degenerate");
        assert_eq!(json["dynamic"]["kind"], "imitation");
    }
}
