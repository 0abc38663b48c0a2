//! Resistances of the perturbed chain.
//!
//! The one-step resistance is the epsilon-exponent of `K_eps(z, z')`. Agents
//! move independently, so it is the sum of per-agent exponents: zero when the
//! agent's new language is reachable without mutation, one when only a
//! mutation reaches it, infinite otherwise.

use crate::dynamics::Dynamic;
use crate::error::Result;
use crate::lang::LanguageId;

use super::kernel::{state_options, AgentOption, DiskCache};
use super::state::StateSpace;

/// One-step resistance from `from` to `to`; `None` when the step is impossible
/// at every epsilon.
pub fn step_resistance(space: &StateSpace, dynamic: &Dynamic, from: usize, to: usize) -> Result<Option<u32>> {
    dynamic.check_agents(space.agents())?;
    let disks = DiskCache::new(space, dynamic);
    let options = state_options(space, dynamic, &disks, from);
    let target = space.decode(to);
    Ok(options
        .iter()
        .zip(&target)
        .map(|(opts, &l)| opts.iter().find(|o| o.lang == l).map(|o| o.cost as u32))
        .sum())
}

/// Calls `emit(successor, cost)` for every one-step successor whose
/// resistance is at most `budget`. Sets `pruned` if anything was cut.
fn for_each_successor<F: FnMut(usize, u32)>(
    k: usize,
    options: &[Vec<AgentOption>],
    budget: u32,
    pruned: &mut bool,
    emit: &mut F,
) {
    fn rec<F: FnMut(usize, u32)>(
        k: usize,
        options: &[Vec<AgentOption>],
        budget: u32,
        stride: usize,
        index: usize,
        cost: u32,
        pruned: &mut bool,
        emit: &mut F,
    ) {
        let Some((head, rest)) = options.split_first() else {
            emit(index, cost);
            return;
        };
        for o in head {
            let c = cost + o.cost as u32;
            if c > budget {
                *pruned = true;
                break;
            }
            rec(k, rest, budget, stride * k, index + o.lang * stride, c, pruned, emit);
        }
    }
    rec(k, options, budget, 1, 0, 0, pruned, emit);
}

fn zero_cost_successors(space: &StateSpace, dynamic: &Dynamic, disks: &DiskCache, state: usize) -> Vec<usize> {
    let options = state_options(space, dynamic, disks, state);
    let mut out = Vec::new();
    let mut pruned = false;
    for_each_successor(space.languages().len(), &options, 0, &mut pruned, &mut |t, _| out.push(t));
    out.sort_unstable();
    out.dedup();
    out
}

/// Closed communicating classes of the unperturbed chain, each sorted, in
/// order of their smallest state.
pub fn recurrent_classes(space: &StateSpace, dynamic: &Dynamic) -> Result<Vec<Vec<usize>>> {
    dynamic.check_agents(space.agents())?;
    let disks = DiskCache::new(space, dynamic);
    let adj: Vec<Vec<usize>> = (0..space.len())
        .map(|s| zero_cost_successors(space, dynamic, &disks, s))
        .collect();
    let comp = tarjan(&adj);
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut closed = vec![true; ncomp];
    let mut members = vec![Vec::new(); ncomp];
    for (s, succ) in adj.iter().enumerate() {
        members[comp[s]].push(s);
        if succ.iter().any(|&t| comp[t] != comp[s]) {
            closed[comp[s]] = false;
        }
    }
    let mut classes: Vec<Vec<usize>> = members
        .into_iter()
        .zip(closed)
        .filter_map(|(m, c)| c.then_some(m))
        .collect();
    classes.sort_by_key(|c| c[0]);
    Ok(classes)
}

/// Iterative Tarjan; returns the component index of every node.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos == 0 && index[v] == UNSEEN {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Least resistances between recurrent classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceGraph {
    classes: Vec<Vec<usize>>,
    languages: Vec<Option<usize>>,
    r: Vec<Vec<Option<u32>>>,
}

impl ResistanceGraph {
    /// Graph with no state-space backing, for working directly on weights.
    pub fn from_matrix(r: Vec<Vec<Option<u32>>>) -> Self {
        let n = r.len();
        ResistanceGraph {
            classes: (0..n).map(|i| vec![i]).collect(),
            languages: vec![None; n],
            r,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Language index of class `i` if it is a homogeneous singleton.
    pub fn language(&self, i: usize) -> Option<usize> {
        self.languages[i]
    }

    pub fn language_id(&self, i: usize) -> Option<LanguageId> {
        self.languages[i].map(|l| LanguageId(l as u64))
    }

    /// Class holding the homogeneous state of `lang`.
    pub fn class_of_language(&self, lang: usize) -> Option<usize> {
        self.languages.iter().position(|&l| l == Some(lang))
    }

    pub fn resistance(&self, i: usize, j: usize) -> Option<u32> {
        self.r[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Option<u32>>] {
        &self.r
    }
}

/// Least path resistance from each recurrent class to every other.
///
/// Runs a bucketed Dijkstra from each source over the full state space,
/// enumerating only the successors that fit under a resistance ceiling. The
/// ceiling doubles until every class is settled or nothing was pruned.
pub fn least_resistance(space: &StateSpace, dynamic: &Dynamic) -> Result<ResistanceGraph> {
    let classes = recurrent_classes(space, dynamic)?;
    let disks = DiskCache::new(space, dynamic);
    let mut class_of = vec![usize::MAX; space.len()];
    for (c, members) in classes.iter().enumerate() {
        for &s in members {
            class_of[s] = c;
        }
    }
    let r = (0..classes.len())
        .map(|a| resistances_from(space, dynamic, &disks, &classes, &class_of, a))
        .collect();
    let languages = classes
        .iter()
        .map(|c| match c[..] {
            [s] => space.homogeneous_language(s),
            _ => None,
        })
        .collect();
    Ok(ResistanceGraph { classes, languages, r })
}

fn resistances_from(
    space: &StateSpace,
    dynamic: &Dynamic,
    disks: &DiskCache,
    classes: &[Vec<usize>],
    class_of: &[usize],
    source: usize,
) -> Vec<Option<u32>> {
    let k = space.languages().len();
    let nclass = classes.len();
    let mut ceiling = 1u32;
    loop {
        let mut out = vec![None; nclass];
        let mut settled = 0;
        let mut pruned = false;
        let mut dist = vec![u32::MAX; space.len()];
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); ceiling as usize + 1];
        for &s in &classes[source] {
            dist[s] = 0;
            buckets[0].push(s);
        }
        'search: for d in 0..=ceiling {
            while let Some(s) = buckets[d as usize].pop() {
                if dist[s] != d {
                    continue;
                }
                let c = class_of[s];
                if c != usize::MAX && out[c].is_none() {
                    out[c] = Some(d);
                    settled += 1;
                    if settled == nclass {
                        break 'search;
                    }
                }
                let options = state_options(space, dynamic, disks, s);
                for_each_successor(k, &options, ceiling - d, &mut pruned, &mut |t, cost| {
                    let nd = d + cost;
                    if nd < dist[t] {
                        dist[t] = nd;
                        buckets[nd as usize].push(t);
                    }
                });
            }
        }
        if settled == nclass || !pruned {
            return out;
        }
        ceiling *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ImitationParams, LocalParams};
    use crate::lang::{claim2_neighbor, GameParams};

    fn space(m: usize, n: usize, agents: usize) -> StateSpace {
        StateSpace::new(GameParams::new(m, n, agents).unwrap(), 1 << 20).unwrap()
    }

    fn imitation(d: usize, agents: usize) -> Dynamic {
        Dynamic::Imitation(ImitationParams::uniform(0.01, d, 0.3, agents).unwrap())
    }

    #[test]
    fn tarjan_components() {
        let adj = vec![vec![1], vec![2], vec![0, 3], vec![4], vec![3], vec![]];
        let comp = tarjan(&adj);
        assert_eq!(comp[0], comp[1]);
        assert_eq!(comp[1], comp[2]);
        assert_eq!(comp[3], comp[4]);
        assert_ne!(comp[0], comp[3]);
        assert_ne!(comp[5], comp[3]);
    }

    #[test]
    fn step_resistance_examples() {
        let sp = space(2, 2, 3);
        let dynamic = imitation(1, 3);
        let h = sp.homogeneous(5);
        assert_eq!(step_resistance(&sp, &dynamic, h, h).unwrap(), Some(0));
        let near = sp.languages().disk(5, 1);
        let far: Vec<usize> = (0..16).filter(|l| !near.contains(l)).collect();
        for &l in near.iter().filter(|&&l| l != 5) {
            assert_eq!(step_resistance(&sp, &dynamic, h, sp.encode(&[5, l, 5])).unwrap(), Some(1));
        }
        for &l in &far {
            assert_eq!(step_resistance(&sp, &dynamic, h, sp.encode(&[5, 5, l])).unwrap(), None);
        }
        let l = near[0];
        assert_eq!(step_resistance(&sp, &dynamic, h, sp.encode(&[l, l, 5])).unwrap(), Some(2));
    }

    #[test]
    fn homogeneous_states_are_the_recurrent_classes() {
        for agents in [2, 3] {
            let sp = space(2, 2, agents);
            for dynamic in [
                imitation(1, agents),
                Dynamic::Localized(LocalParams::uniform(0.01, 0.5, agents).unwrap()),
            ] {
                let classes = recurrent_classes(&sp, &dynamic).unwrap();
                assert_eq!(classes.len(), 16);
                for (l, c) in classes.iter().enumerate() {
                    assert_eq!(c, &vec![sp.homogeneous(l)]);
                }
            }
        }
    }

    #[test]
    fn least_resistance_structure() {
        let sp = space(2, 2, 3);
        let rg = least_resistance(&sp, &imitation(2, 3)).unwrap();
        assert_eq!(rg.len(), 16);
        let langs = sp.languages();
        for i in 0..16 {
            assert_eq!(rg.resistance(i, i), Some(0));
            for j in (0..16).filter(|&j| j != i) {
                assert!(rg.resistance(i, j).unwrap() >= 1);
            }
        }
        for l in 0..16 {
            let lang = langs.language(l);
            if langs.is_aligned(l) {
                for j in (0..16).filter(|&j| langs.self_trace(j) < langs.self_trace(l)) {
                    assert!(rg.resistance(l, j).unwrap() >= 2);
                }
            } else {
                let up = claim2_neighbor(lang).unwrap().id().0 as usize;
                assert_eq!(rg.resistance(l, up), Some(1));
            }
        }
    }

    #[test]
    fn resistances_respect_object_relabeling() {
        let sp = space(2, 2, 3);
        let rg = least_resistance(&sp, &imitation(1, 3)).unwrap();
        let map = sp.language_permutation(&[1, 0]).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(rg.resistance(i, j), rg.resistance(map[i], map[j]));
            }
        }
    }
}
