//! Minimum spanning in-arborescences and stochastic potential.
//!
//! An in-arborescence rooted at `r` gives every other node exactly one
//! outgoing edge so that all paths lead to `r`. This is Chu-Liu/Edmonds run on
//! the reversed graph: each node greedily takes its cheapest outgoing edge,
//! cycles are contracted with reduced weights, and the contracted solution is
//! expanded back.

use serde::Serialize;

use crate::error::{Error, Result};

use super::resistance::ResistanceGraph;

#[derive(Clone, Copy, Debug)]
struct Edge {
    from: usize,
    to: usize,
    w: i64,
}

const NONE: usize = usize::MAX;

/// Chosen edge index per node (`NONE` at the root), or `None` if some node
/// cannot reach the root.
fn solve(n: usize, edges: &[Edge], root: usize) -> Option<Vec<usize>> {
    let mut best = vec![NONE; n];
    for (i, e) in edges.iter().enumerate() {
        if e.from == root || e.from == e.to {
            continue;
        }
        let b = best[e.from];
        if b == NONE || (e.w, e.to) < (edges[b].w, edges[b].to) {
            best[e.from] = i;
        }
    }
    if (0..n).any(|v| v != root && best[v] == NONE) {
        return None;
    }

    // Cycles of the functional graph v -> best[v].to.
    let mut comp = vec![NONE; n];
    let mut stamp = vec![NONE; n];
    let mut in_cycle = vec![false; n];
    let mut ncomp = 0;
    for start in 0..n {
        let mut v = start;
        while v != root && stamp[v] == NONE && comp[v] == NONE {
            stamp[v] = start;
            v = edges[best[v]].to;
        }
        if v != root && stamp[v] == start && comp[v] == NONE {
            let mut u = v;
            loop {
                comp[u] = ncomp;
                in_cycle[u] = true;
                u = edges[best[u]].to;
                if u == v {
                    break;
                }
            }
            ncomp += 1;
        }
    }
    if ncomp == 0 {
        return Some(best);
    }
    for c in comp.iter_mut().filter(|c| **c == NONE) {
        *c = ncomp;
        ncomp += 1;
    }

    let mut reduced = Vec::new();
    let mut origin = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        let (cf, ct) = (comp[e.from], comp[e.to]);
        if cf == ct {
            continue;
        }
        let w = if in_cycle[e.from] { e.w - edges[best[e.from]].w } else { e.w };
        reduced.push(Edge { from: cf, to: ct, w });
        origin.push(i);
    }
    let sub = solve(ncomp, &reduced, comp[root])?;

    let mut chosen = vec![NONE; n];
    for (c, &e) in sub.iter().enumerate() {
        if c != comp[root] {
            let orig = origin[e];
            chosen[edges[orig].from] = orig;
        }
    }
    for v in 0..n {
        if in_cycle[v] && chosen[v] == NONE {
            chosen[v] = best[v];
        }
    }
    Some(chosen)
}

/// Minimum in-arborescence rooted at `root` over weights `w[i][j]` for the
/// edge `i -> j` (`None` = absent). Returns total weight and the successor of
/// every node (`None` at the root).
pub fn min_in_arborescence(w: &[Vec<Option<u32>>], root: usize) -> Option<(u64, Vec<Option<usize>>)> {
    let n = w.len();
    let edges: Vec<Edge> = w
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter().enumerate().filter_map(move |(j, &x)| {
                (i != j).then_some(x).flatten().map(|x| Edge { from: i, to: j, w: x as i64 })
            })
        })
        .collect();
    let chosen = solve(n, &edges, root)?;
    let mut total = 0u64;
    let next = chosen
        .iter()
        .map(|&e| {
            (e != NONE).then(|| {
                total += edges[e].w as u64;
                edges[e].to
            })
        })
        .collect();
    Some((total, next))
}

/// Stochastic potential of every recurrent class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StochasticPotential {
    /// `gamma[i]`, `None` when no finite tree is rooted at `i`.
    pub gamma: Vec<Option<u64>>,
    /// A minimizing tree per root, as successor pointers.
    pub trees: Vec<Option<Vec<Option<usize>>>>,
    /// Classes attaining the minimum, ascending.
    pub minimizers: Vec<usize>,
}

pub fn stochastic_potential(rg: &ResistanceGraph) -> Result<StochasticPotential> {
    let n = rg.len();
    let solved: Vec<_> = (0..n).map(|root| min_in_arborescence(rg.matrix(), root)).collect();
    let gamma: Vec<Option<u64>> = solved.iter().map(|s| s.as_ref().map(|(g, _)| *g)).collect();
    let Some(min) = gamma.iter().flatten().copied().min() else {
        return Err(Error::Disconnected);
    };
    let minimizers = (0..n).filter(|&i| gamma[i] == Some(min)).collect();
    let trees = solved.into_iter().map(|s| s.map(|(_, t)| t)).collect();
    Ok(StochasticPotential {
        gamma,
        trees,
        minimizers,
    })
}
