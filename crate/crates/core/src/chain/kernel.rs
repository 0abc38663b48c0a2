//! One-step transition law of the perturbed chain.
//!
//! Agents update independently given the previous state, so every row of the
//! kernel is a product of per-agent distributions. Rows are stored in that
//! factored form and expanded on demand.

use crate::dynamics::Dynamic;
use crate::error::{Error, Result};
use crate::lang::argmax_indices;

use super::state::StateSpace;

/// Marker for an unreachable per-agent outcome.
pub const INFINITE: u8 = u8::MAX;

/// One possible next language for an agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentOption {
    pub lang: usize,
    pub prob: f64,
    /// Exponent of epsilon in `prob`: 0 when reachable without mutation.
    pub cost: u8,
}

/// Per-agent options from a decoded state, sorted by `(cost, lang)`.
///
/// Only options with finite cost are listed; at `epsilon = 0` the cost-one
/// options carry probability zero.
pub(crate) fn agent_options(
    space: &StateSpace,
    dynamic: &Dynamic,
    langs: &[usize],
    fitness: &[u64],
    agent: usize,
    disks: &DiskCache,
) -> Vec<AgentOption> {
    let k = space.languages().len();
    let mut prob = vec![0.0f64; k];
    let mut zero_cost = vec![false; k];
    let mut one_cost = vec![false; k];
    let own = langs[agent];
    match dynamic {
        Dynamic::Imitation(params) => {
            let p = params.revision_probs[agent];
            let eps = params.epsilon;
            prob[own] += 1.0 - p;
            zero_cost[own] = true;
            let fittest = argmax_indices(fitness);
            let share = p * (1.0 - eps) / fittest.len() as f64;
            for &j in &fittest {
                prob[langs[j]] += share;
                zero_cost[langs[j]] = true;
            }
            let disk = disks.get(own);
            let share = p * eps / disk.len() as f64;
            for &l in disk {
                prob[l] += share;
                one_cost[l] = true;
            }
        }
        Dynamic::Localized(params) => {
            let eps = params.epsilon;
            for (j, q) in choice_probabilities(&params.neighbor_probs[agent], fitness, agent)
                .into_iter()
                .enumerate()
            {
                if q > 0.0 {
                    prob[langs[j]] += (1.0 - eps) * q;
                    zero_cost[langs[j]] = true;
                }
            }
            let share = eps / k as f64;
            for l in 0..k {
                prob[l] += share;
                one_cost[l] = true;
            }
        }
    }
    let mut out: Vec<AgentOption> = (0..k)
        .filter_map(|l| {
            let cost = if zero_cost[l] {
                0
            } else if one_cost[l] {
                1
            } else {
                return None;
            };
            Some(AgentOption {
                lang: l,
                prob: prob[l],
                cost,
            })
        })
        .collect();
    out.sort_by_key(|o| (o.cost, o.lang));
    out
}

/// Probability that agent `agent` copies agent `j` under localized
/// competition, for every `j`.
///
/// The agent always observes itself; every other `j` joins the neighborhood
/// independently with probability `row[j]`. Ties at the top are broken
/// uniformly.
pub(crate) fn choice_probabilities(row: &[f64], fitness: &[u64], agent: usize) -> Vec<f64> {
    let n = fitness.len();
    let others: Vec<usize> = (0..n).filter(|&j| j != agent).collect();
    assert!(others.len() < 26, "neighborhood enumeration is exponential in N");
    let mut out = vec![0.0; n];
    let mut members = Vec::with_capacity(n);
    for mask in 0u32..(1 << others.len()) {
        let mut weight = 1.0;
        members.clear();
        members.push(agent);
        for (b, &j) in others.iter().enumerate() {
            if mask & (1 << b) != 0 {
                weight *= row[j];
                members.push(j);
            } else {
                weight *= 1.0 - row[j];
            }
        }
        if weight == 0.0 {
            continue;
        }
        let best = members.iter().map(|&j| fitness[j]).max().unwrap_or(0);
        let tied: Vec<usize> = members.iter().copied().filter(|&j| fitness[j] == best).collect();
        let share = weight / tied.len() as f64;
        for j in tied {
            out[j] += share;
        }
    }
    out
}

/// Mutation disks per language, computed once.
#[derive(Clone, Debug)]
pub(crate) struct DiskCache {
    disks: Vec<Vec<usize>>,
}

impl DiskCache {
    pub(crate) fn new(space: &StateSpace, dynamic: &Dynamic) -> Self {
        let k = space.languages().len();
        let disks = match dynamic {
            Dynamic::Imitation(p) => (0..k).map(|l| space.languages().disk(l, p.radius)).collect(),
            Dynamic::Localized(_) => Vec::new(),
        };
        DiskCache { disks }
    }

    fn get(&self, lang: usize) -> &[usize] {
        &self.disks[lang]
    }
}

/// Per-agent option lists for one state.
pub(crate) fn state_options(
    space: &StateSpace,
    dynamic: &Dynamic,
    disks: &DiskCache,
    state: usize,
) -> Vec<Vec<AgentOption>> {
    let langs = space.decode(state);
    let fitness = space.languages().fitness_scaled(&langs);
    (0..langs.len())
        .map(|i| agent_options(space, dynamic, &langs, &fitness, i, disks))
        .collect()
}

/// Exact one-step distribution from `state`, sparse and sorted by successor.
pub fn transition_row(space: &StateSpace, dynamic: &Dynamic, state: usize) -> Result<Vec<(usize, f64)>> {
    dynamic.check_agents(space.agents())?;
    let disks = DiskCache::new(space, dynamic);
    let factors = to_factors(&state_options(space, dynamic, &disks, state));
    let mut row = Vec::new();
    expand(space.languages().len(), &factors, |s, p| row.push((s, p)));
    row.sort_by_key(|&(s, _)| s);
    Ok(row)
}

type Factor = Vec<(usize, f64)>;

fn to_factors(options: &[Vec<AgentOption>]) -> Vec<Factor> {
    options
        .iter()
        .map(|opts| {
            opts.iter()
                .filter(|o| o.prob > 0.0)
                .map(|o| (o.lang, o.prob))
                .collect()
        })
        .collect()
}

fn expand<F: FnMut(usize, f64)>(k: usize, factors: &[Factor], mut emit: F) {
    fn rec<F: FnMut(usize, f64)>(
        k: usize,
        factors: &[Factor],
        stride: usize,
        index: usize,
        prob: f64,
        emit: &mut F,
    ) {
        match factors.split_first() {
            None => emit(index, prob),
            Some((head, rest)) => {
                for &(l, p) in head {
                    rec(k, rest, stride * k, index + l * stride, prob * p, emit);
                }
            }
        }
    }
    rec(k, factors, 1, 0, 1.0, &mut emit);
}

/// Full kernel in factored form.
#[derive(Clone, Debug)]
pub struct TransitionModel {
    size: usize,
    k: usize,
    factors: Vec<Vec<Factor>>,
}

impl TransitionModel {
    pub fn build(space: &StateSpace, dynamic: &Dynamic) -> Result<Self> {
        dynamic.check_agents(space.agents())?;
        let disks = DiskCache::new(space, dynamic);
        let factors = (0..space.len())
            .map(|s| to_factors(&state_options(space, dynamic, &disks, s)))
            .collect();
        Ok(TransitionModel {
            size: space.len(),
            k: space.languages().len(),
            factors,
        })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Expanded row of `state`, sorted by successor.
    pub fn row(&self, state: usize) -> Vec<(usize, f64)> {
        let mut row = Vec::new();
        self.for_each_in_row(state, |s, p| row.push((s, p)));
        row.sort_by_key(|&(s, _)| s);
        row
    }

    pub fn for_each_in_row<F: FnMut(usize, f64)>(&self, state: usize, emit: F) {
        expand(self.k, &self.factors[state], emit);
    }

    /// `K(from, to)` as a product of per-agent factors.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        let mut to = to;
        let mut p = 1.0;
        for factor in &self.factors[from] {
            let l = to % self.k;
            to /= self.k;
            p *= factor
                .iter()
                .find(|&&(x, _)| x == l)
                .map(|&(_, q)| q)
                .unwrap_or(0.0);
        }
        p
    }

    /// `mu K`.
    pub fn left_mul(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (s, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            self.for_each_in_row(s, |t, p| out[t] += m * p);
        }
        out
    }

    /// Row-major dense copy of the kernel.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        const LIMIT: usize = 8192;
        if self.size > LIMIT {
            return Err(Error::StateSpaceTooLarge {
                states: self.size as u128,
                cap: LIMIT as u64,
            });
        }
        let n = self.size;
        let mut dense = vec![0.0; n * n];
        for s in 0..n {
            let row = &mut dense[s * n..(s + 1) * n];
            self.for_each_in_row(s, |t, p| row[t] += p);
        }
        Ok(dense)
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.size)
            .map(|s| {
                let mut sum = 0.0;
                self.for_each_in_row(s, |_, p| sum += p);
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{step_imitation, ImitationParams, LocalParams};
    use crate::lang::GameParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(m: usize, n: usize, agents: usize) -> StateSpace {
        StateSpace::new(GameParams::new(m, n, agents).unwrap(), 1 << 20).unwrap()
    }

    #[test]
    fn rows_are_distributions() {
        let sp = space(2, 2, 2);
        for dynamic in [
            Dynamic::Imitation(ImitationParams::new(0.1, 1, vec![0.3, 0.6]).unwrap()),
            Dynamic::Localized(LocalParams::new(0.05, vec![vec![0.0, 0.4], vec![0.7, 0.0]]).unwrap()),
        ] {
            let model = TransitionModel::build(&sp, &dynamic).unwrap();
            assert!(model.max_row_defect() < 1e-12);
            for s in [0, 17, 100, 255] {
                for (t, p) in model.row(s) {
                    assert!(p >= 0.0);
                    assert!((model.prob(s, t) - p).abs() < 1e-15);
                }
                assert_eq!(model.row(s), transition_row(&sp, &dynamic, s).unwrap());
            }
        }
    }

    fn assert_absorbing(row: &[(usize, f64)], h: usize) {
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].0, h);
        assert!((row[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_rows_absorb_without_mutation() {
        let sp = space(2, 2, 3);
        let dynamic = Dynamic::Imitation(ImitationParams::uniform(0.0, 2, 0.3, 3).unwrap());
        for l in 0..16 {
            let h = sp.homogeneous(l);
            assert_absorbing(&transition_row(&sp, &dynamic, h).unwrap(), h);
        }
        let local = Dynamic::Localized(LocalParams::uniform(0.0, 0.5, 3).unwrap());
        let h = sp.homogeneous(6);
        assert_absorbing(&transition_row(&sp, &local, h).unwrap(), h);
    }

    #[test]
    fn non_homogeneous_can_become_homogeneous() {
        let sp = space(2, 2, 3);
        let dynamic = Dynamic::Imitation(ImitationParams::uniform(0.0, 2, 0.3, 3).unwrap());
        for s in (0..sp.len()).step_by(13) {
            if sp.homogeneous_language(s).is_some() {
                continue;
            }
            let row = transition_row(&sp, &dynamic, s).unwrap();
            assert!(row.iter().any(|&(t, p)| p > 0.0 && sp.homogeneous_language(t).is_some()));
        }
    }

    #[test]
    fn choice_probabilities_sum_to_one() {
        let fitness = [3, 5, 5, 1];
        let q = choice_probabilities(&[0.0, 0.5, 0.25, 0.9], &fitness, 0);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(q[3], 0.0);
        // Self kept only when neither fitter agent shows up.
        assert!((q[0] - 0.5 * 0.75).abs() < 1e-15);
        // Forced inclusion removes the chance to keep.
        let q = choice_probabilities(&[0.0, 1.0, 0.25, 0.9], &fitness, 0);
        assert_eq!(q[0], 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_exact_row() {
        let sp = space(2, 2, 2);
        let params = ImitationParams::new(0.2, 1, vec![0.4, 0.7]).unwrap();
        let dynamic = Dynamic::Imitation(params.clone());
        let start = sp.encode(&[3, 9]);
        let row = transition_row(&sp, &dynamic, start).unwrap();
        let profile = sp.profile(start);
        let trials = 200_000usize;
        let mut counts = vec![0usize; sp.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..trials {
            let next = step_imitation(&profile, &params, &mut rng).unwrap();
            counts[sp.index_of(&next).unwrap()] += 1;
        }
        let mut exact = vec![0.0; sp.len()];
        for &(t, p) in &row {
            exact[t] = p;
        }
        // Pooled chi-square over the support; no mass outside it.
        let mut chi2 = 0.0;
        let mut cells = 0usize;
        for t in 0..sp.len() {
            let expected = exact[t] * trials as f64;
            if expected == 0.0 {
                assert_eq!(counts[t], 0, "state {t} outside the exact support");
                continue;
            }
            chi2 += (counts[t] as f64 - expected).powi(2) / expected;
            cells += 1;
        }
        let df = (cells - 1) as f64;
        assert!(chi2 < df + 5.0 * (2.0 * df).sqrt(), "chi2 {chi2} on {df} dof");
    }
}
