use crate::error::{Error, Result};
use crate::lang::{permute, GameParams, Language, Profile};
use crate::space::LanguageSpace;

/// Dense indexing of joint states `L^N`.
///
/// State index is `sum_i lang_i * K^i` with agent 0 least significant.
#[derive(Clone, Debug)]
pub struct StateSpace {
    game: GameParams,
    langs: LanguageSpace,
    size: usize,
}

impl StateSpace {
    pub const DEFAULT_CAP: u64 = 100_000;

    pub fn new(game: GameParams, cap: u64) -> Result<Self> {
        let count = game.language_count().unwrap_or(u64::MAX);
        let size = (count as u128)
            .checked_pow(game.agents as u32)
            .unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::StateSpaceTooLarge { states: size, cap });
        }
        let langs = LanguageSpace::new(game.m, game.n)?;
        Ok(StateSpace {
            game,
            langs,
            size: size as usize,
        })
    }

    pub fn game(&self) -> GameParams {
        self.game
    }

    pub fn languages(&self) -> &LanguageSpace {
        &self.langs
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn agents(&self) -> usize {
        self.game.agents
    }

    pub fn decode_into(&self, mut state: usize, out: &mut Vec<usize>) {
        let k = self.langs.len();
        out.clear();
        for _ in 0..self.game.agents {
            out.push(state % k);
            state /= k;
        }
    }

    pub fn decode(&self, state: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.game.agents);
        self.decode_into(state, &mut out);
        out
    }

    pub fn encode(&self, langs: &[usize]) -> usize {
        let k = self.langs.len();
        langs.iter().rev().fold(0, |acc, &l| acc * k + l)
    }

    pub fn profile(&self, state: usize) -> Profile {
        let langs = self
            .decode(state)
            .into_iter()
            .map(|l| self.langs.language(l).clone())
            .collect();
        Profile::new(langs).expect("valid state")
    }

    pub fn index_of(&self, profile: &Profile) -> Result<usize> {
        if profile.params() != self.game {
            return Err(Error::InvalidParams(format!(
                "profile {:?} does not match state space {:?}",
                profile.params(),
                self.game
            )));
        }
        let ids: Vec<usize> = profile.ids().into_iter().map(|id| id.0 as usize).collect();
        Ok(self.encode(&ids))
    }

    pub fn homogeneous(&self, lang: usize) -> usize {
        self.encode(&vec![lang; self.game.agents])
    }

    /// Language index if `state` is homogeneous.
    pub fn homogeneous_language(&self, state: usize) -> Option<usize> {
        let langs = self.decode(state);
        langs.windows(2).all(|w| w[0] == w[1]).then(|| langs[0])
    }

    pub fn optimal_states(&self) -> Vec<usize> {
        self.langs
            .aligned_ids()
            .iter()
            .map(|id| self.homogeneous(id.0 as usize))
            .collect()
    }

    /// Language index map for relabeling objects by `sigma`.
    pub fn language_permutation(&self, sigma: &[usize]) -> Result<Vec<usize>> {
        self.langs
            .languages()
            .iter()
            .map(|l| permute(l, sigma).map(|p| p.id().0 as usize))
            .collect()
    }

    /// Apply a language relabeling to every agent of `state`.
    pub fn permute_state(&self, state: usize, lang_map: &[usize]) -> usize {
        let langs: Vec<usize> = self.decode(state).into_iter().map(|l| lang_map[l]).collect();
        self.encode(&langs)
    }

    pub fn language(&self, lang: usize) -> &Language {
        self.langs.language(lang)
    }

}
