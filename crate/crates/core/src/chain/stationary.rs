//! Stationary distributions of the perturbed chain.
//!
//! [`stationary`] is plain power iteration. It is fine for well-mixed chains
//! but the signaling chain at small epsilon leaves its optimal states at rate
//! `O(epsilon^2)`, so its mixing time explodes. [`stationary_exact`] instead
//! runs Grassmann-Taksar-Heyman elimination, which uses no subtractions and
//! stays accurate on nearly decomposable kernels. When all agents are
//! interchangeable the chain is first lumped onto multisets of languages.

use std::collections::HashMap;

use crate::dynamics::Dynamic;
use crate::error::{Error, Result};

use super::kernel::TransitionModel;
use super::state::StateSpace;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Power iteration from the uniform distribution until `|mu K - mu|_1 <= tol`.
pub fn stationary(model: &TransitionModel, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = model.len();
    let mut mu = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = model.left_mul(&mu);
        residual = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        let total: f64 = next.iter().sum();
        mu = next.into_iter().map(|x| x / total).collect();
        if residual <= tol {
            return Ok(mu);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Stationary vector of a dense row-major stochastic matrix by GTH
/// elimination. Consumes the matrix as scratch space.
pub fn gth(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    if n == 0 {
        return Ok(Vec::new());
    }
    for k in (1..n).rev() {
        let (top, rest) = a.split_at_mut(k * n);
        let row_k = &rest[..k];
        let s: f64 = row_k.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Reducible);
        }
        for row_i in top.chunks_exact_mut(n) {
            let f = row_i[k] / s;
            row_i[k] = f;
            if f != 0.0 {
                for (x, &y) in row_i[..k].iter_mut().zip(row_k) {
                    *x += f * y;
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * a[i * n + j]).sum();
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|x| x / total).collect())
}

/// Exact stationary distribution of the full kernel.
pub fn stationary_exact(model: &TransitionModel) -> Result<Vec<f64>> {
    gth(model.to_dense()?, model.len())
}

/// Partition of joint states into orbits under permutations of agents.
#[derive(Clone, Debug)]
pub struct AgentLumping {
    orbit_of: Vec<u32>,
    reps: Vec<usize>,
    sizes: Vec<usize>,
}

impl AgentLumping {
    pub fn new(space: &StateSpace) -> Self {
        let mut index: HashMap<usize, u32> = HashMap::new();
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        let mut orbit_of = Vec::with_capacity(space.len());
        let mut langs = Vec::new();
        for s in 0..space.len() {
            space.decode_into(s, &mut langs);
            langs.sort_unstable();
            let key = space.encode(&langs);
            let o = *index.entry(key).or_insert_with(|| {
                reps.push(key);
                sizes.push(0);
                (reps.len() - 1) as u32
            });
            sizes[o as usize] += 1;
            orbit_of.push(o);
        }
        AgentLumping {
            orbit_of,
            reps,
            sizes,
        }
    }

    pub fn orbits(&self) -> usize {
        self.reps.len()
    }

    pub fn orbit_of(&self, state: usize) -> usize {
        self.orbit_of[state] as usize
    }

    pub fn orbit_size(&self, orbit: usize) -> usize {
        self.sizes[orbit]
    }

    /// Dense lumped kernel over orbits.
    pub fn lumped_kernel(&self, model: &TransitionModel) -> Vec<f64> {
        let n = self.orbits();
        let mut dense = vec![0.0; n * n];
        for (o, &rep) in self.reps.iter().enumerate() {
            let row = &mut dense[o * n..(o + 1) * n];
            model.for_each_in_row(rep, |t, p| row[self.orbit_of[t] as usize] += p);
        }
        dense
    }
}

/// Stationary distribution via the agent-lumped chain, spread evenly over each
/// orbit. Valid only when the dynamic treats all agents alike.
pub fn stationary_lumped(space: &StateSpace, model: &TransitionModel) -> Result<Vec<f64>> {
    let lumping = AgentLumping::new(space);
    let nu = gth(lumping.lumped_kernel(model), lumping.orbits())?;
    Ok((0..space.len())
        .map(|s| {
            let o = lumping.orbit_of(s);
            nu[o] / lumping.orbit_size(o) as f64
        })
        .collect())
}

/// Exact stationary distribution, lumping over agents when the dynamic allows.
pub fn stationary_distribution(space: &StateSpace, dynamic: &Dynamic) -> Result<Vec<f64>> {
    if !(dynamic.epsilon() > 0.0) {
        return Err(Error::InvalidParams(
            "stationary distribution needs a positive mutation probability".into(),
        ));
    }
    let model = TransitionModel::build(space, dynamic)?;
    if dynamic.is_exchangeable() {
        stationary_lumped(space, &model)
    } else {
        stationary_exact(&model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ImitationParams, LocalParams};
    use crate::lang::GameParams;

    fn residual(model: &TransitionModel, mu: &[f64]) -> f64 {
        model
            .left_mul(mu)
            .iter()
            .zip(mu)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    #[test]
    fn gth_small_chains() {
        let q = 0.3;
        let pi = gth(vec![1.0 - q, q, q, 1.0 - q], 2).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);

        // Doubly stochastic.
        let k = vec![0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2];
        for x in gth(k, 3).unwrap() {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }

        // Birth-death chain with known answer pi = (1, 2, 4) / 7.
        let k = vec![0.5, 0.5, 0.0, 0.25, 0.25, 0.5, 0.0, 0.25, 0.75];
        let pi = gth(k, 3).unwrap();
        for (x, e) in pi.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((x - e).abs() < 1e-14);
        }

        assert_eq!(gth(vec![1.0, 0.0, 0.0, 1.0], 2), Err(Error::Reducible));
    }

    #[test]
    fn power_iteration_matches_exact() {
        let space = StateSpace::new(GameParams::new(2, 2, 2).unwrap(), 1000).unwrap();
        let dynamic = Dynamic::Imitation(ImitationParams::new(0.3, 1, vec![0.4, 0.6]).unwrap());
        let model = TransitionModel::build(&space, &dynamic).unwrap();
        let exact = stationary_exact(&model).unwrap();
        let power = stationary(&model, 1e-13, 200_000).unwrap();
        assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(residual(&model, &exact) < 1e-12);
        let gap: f64 = exact.iter().zip(&power).map(|(a, b)| (a - b).abs()).sum();
        assert!(gap < 1e-8, "gap {gap}");

        let err = stationary(&model, 1e-15, 3).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }

    #[test]
    fn lumped_matches_full() {
        let space = StateSpace::new(GameParams::new(2, 2, 2).unwrap(), 1000).unwrap();
        for dynamic in [
            Dynamic::Imitation(ImitationParams::uniform(0.05, 1, 0.3, 2).unwrap()),
            Dynamic::Localized(LocalParams::uniform(0.05, 0.5, 2).unwrap()),
        ] {
            assert!(dynamic.is_exchangeable());
            let model = TransitionModel::build(&space, &dynamic).unwrap();
            let full = stationary_exact(&model).unwrap();
            let lumped = stationary_lumped(&space, &model).unwrap();
            for (a, b) in full.iter().zip(&lumped) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(AgentLumping::new(&space).orbits(), 136);
    }

    #[test]
    fn needs_positive_epsilon() {
        let space = StateSpace::new(GameParams::new(2, 2, 2).unwrap(), 1000).unwrap();
        let dynamic = Dynamic::Imitation(ImitationParams::uniform(0.0, 1, 0.3, 2).unwrap());
        assert!(stationary_distribution(&space, &dynamic).is_err());
        let model = TransitionModel::build(&space, &dynamic).unwrap();
        assert_eq!(stationary_exact(&model), Err(Error::Reducible));
    }
}
