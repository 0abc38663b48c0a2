use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signalgame::chain::{
    epsilon_sweep, least_resistance, stationary_distribution, step_resistance, stochastic_potential,
    transition_row, StateSpace, TransitionModel,
};
use signalgame::dynamics::{Dynamic, ImitationParams, LocalParams};
use signalgame::GameParams;

fn small() -> StateSpace {
    StateSpace::new(GameParams::new(2, 2, 3).unwrap(), 10_000).unwrap()
}

fn imitation(eps: f64) -> Dynamic {
    Dynamic::Imitation(ImitationParams::uniform(eps, 2, 0.3, 3).unwrap())
}

fn prob(space: &StateSpace, dynamic: &Dynamic, from: usize, to: usize) -> f64 {
    transition_row(space, dynamic, from)
        .unwrap()
        .into_iter()
        .find(|&(t, _)| t == to)
        .map_or(0.0, |(_, p)| p)
}

#[test]
fn transition_exponents_match_resistance() {
    let space = small();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = [0usize; 4];
    while checked.iter().any(|&c| c < 15) {
        let from = rng.gen_range(0..space.len());
        let row = transition_row(&space, &imitation(0.1), from).unwrap();
        let to = row[rng.gen_range(0..row.len())].0;
        let to = if rng.gen_bool(0.5) { to } else { row.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0 };
        let r = step_resistance(&space, &imitation(0.1), from, to).unwrap().unwrap();
        if checked[r as usize] >= 15 {
            continue;
        }
        let (p2, p3) = (
            prob(&space, &imitation(1e-2), from, to),
            prob(&space, &imitation(1e-3), from, to),
        );
        let slope = (p2.ln() - p3.ln()) / (1e-2f64.ln() - 1e-3f64.ln());
        assert!(
            (slope - r as f64).abs() <= 0.1 * (r as f64).max(1.0),
            "{from} -> {to}: slope {slope}, r {r}"
        );
        checked[r as usize] += 1;
    }
}

#[test]
fn stationary_is_invariant_and_symmetric() {
    let space = small();
    for dynamic in [
        imitation(0.05),
        Dynamic::Localized(LocalParams::uniform(0.05, 0.5, 3).unwrap()),
    ] {
        let mu = stationary_distribution(&space, &dynamic).unwrap();
        let model = TransitionModel::build(&space, &dynamic).unwrap();
        let residual: f64 = model.left_mul(&mu).iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        assert!(residual < 1e-12, "residual {residual}");
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let map = space.language_permutation(&[1, 0]).unwrap();
        for s in 0..space.len() {
            assert!((mu[s] - mu[space.permute_state(s, &map)]).abs() < 1e-12);
        }
    }
}

#[test]
fn optimal_mass_grows_as_mutations_vanish() {
    let space = small();
    let rows = epsilon_sweep(&space, &imitation(0.01), &[0.1, 0.03, 0.01]).unwrap();
    assert!(rows.windows(2).all(|w| w[1].optimal_mass > w[0].optimal_mass));
}

/// Classes with minimal stochastic potential keep their mass as epsilon
/// shrinks; the others lose it at rate about epsilon^(gamma - min gamma).
#[test]
fn potential_minimizers_keep_stationary_mass() {
    let space = small();
    let rg = least_resistance(&space, &imitation(0.01)).unwrap();
    let sp = stochastic_potential(&rg).unwrap();
    let min = sp.gamma.iter().flatten().min().copied().unwrap();
    let mu_hi = stationary_distribution(&space, &imitation(0.003)).unwrap();
    let mu_lo = stationary_distribution(&space, &imitation(0.0003)).unwrap();
    for c in 0..rg.len() {
        let s = rg.classes()[c][0];
        let slope = (mu_hi[s].ln() - mu_lo[s].ln()) / (0.003f64.ln() - 0.0003f64.ln());
        let excess = (sp.gamma[c].unwrap() - min) as f64;
        assert!((slope - excess).abs() < 0.1, "class {c}: slope {slope}, excess {excess}");
    }
}

#[test]
fn unaligned_roots_have_larger_potential() {
    let space = small();
    let rg = least_resistance(&space, &imitation(0.01)).unwrap();
    let sp = stochastic_potential(&rg).unwrap();
    let min = sp.gamma.iter().flatten().min().copied().unwrap();
    for c in 0..rg.len() {
        let lang = rg.language(c).unwrap();
        if !space.languages().is_aligned(lang) {
            assert!(sp.gamma[c].unwrap() > min);
        }
    }
}
