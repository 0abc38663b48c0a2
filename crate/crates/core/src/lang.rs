//! Languages of the signaling game and the payoff structure built on them.
//!
//! A language is a speaking map (objects to symbols) together with a hearing
//! map (symbols to objects). Storing both maps as index vectors is the same
//! thing as storing the binary row-stochastic matrices `(P, Q)`: row `i` of
//! `P` has its single one in column `speak[i]`, row `j` of `Q` in column
//! `hear[j]`.
//!
//! Fitness values are kept as integers scaled by `N - 1`, so that argmax
//! selection and the potential identity are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratio::Ratio;

/// Sizes of a game instance: `m` objects, `n` symbols, `agents` players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameParams {
    pub m: usize,
    pub n: usize,
    pub agents: usize,
}

impl GameParams {
    pub fn new(m: usize, n: usize, agents: usize) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 objects and 2 symbols, got m={m}, n={n}"
            )));
        }
        if agents < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 agents, got {agents}"
            )));
        }
        Ok(GameParams { m, n, agents })
    }

    /// `m^n * n^m`, or `None` on overflow.
    pub fn language_count(&self) -> Option<u64> {
        language_count(self.m, self.n)
    }
}

pub fn language_count(m: usize, n: usize) -> Option<u64> {
    let a = (m as u64).checked_pow(n as u32)?;
    let b = (n as u64).checked_pow(m as u32)?;
    a.checked_mul(b)
}

/// Canonical integer label of a language: `speak_index * m^n + hear_index`,
/// with both indices read as little-endian mixed-radix numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageId(pub u64);

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLanguage")]
pub struct Language {
    m: usize,
    n: usize,
    speak: Vec<usize>,
    hear: Vec<usize>,
}

#[derive(Deserialize)]
struct RawLanguage {
    m: usize,
    n: usize,
    speak: Vec<usize>,
    hear: Vec<usize>,
}

impl TryFrom<RawLanguage> for Language {
    type Error = Error;

    fn try_from(raw: RawLanguage) -> Result<Self> {
        Language::new(raw.m, raw.n, raw.speak, raw.hear)
    }
}

impl fmt::Debug for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Language(speak={:?}, hear={:?})", self.speak, self.hear)
    }
}

impl Language {
    pub fn new(m: usize, n: usize, speak: Vec<usize>, hear: Vec<usize>) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidLanguage(format!("m={m}, n={n} below 2")));
        }
        if speak.len() != m || hear.len() != n {
            return Err(Error::InvalidLanguage(format!(
                "expected speak of length {m} and hear of length {n}, got {} and {}",
                speak.len(),
                hear.len()
            )));
        }
        if let Some(s) = speak.iter().find(|&&s| s >= n) {
            return Err(Error::InvalidLanguage(format!("symbol {s} >= n={n}")));
        }
        if let Some(o) = hear.iter().find(|&&o| o >= m) {
            return Err(Error::InvalidLanguage(format!("object {o} >= m={m}")));
        }
        Ok(Language { m, n, speak, hear })
    }

    /// The language mapping object `i` to symbol `i` and back, for `m = n = k`.
    pub fn identity(k: usize) -> Self {
        Language::new(k, k, (0..k).collect(), (0..k).collect()).expect("k >= 2")
    }

    pub fn from_id(m: usize, n: usize, id: LanguageId) -> Result<Self> {
        let count = language_count(m, n)
            .ok_or_else(|| Error::InvalidParams(format!("language count overflows at m={m}, n={n}")))?;
        if id.0 >= count {
            return Err(Error::IndexOutOfRange {
                index: id.0 as usize,
                len: count as usize,
            });
        }
        let hear_radix = (m as u64).pow(n as u32);
        let mut speak_index = id.0 / hear_radix;
        let mut hear_index = id.0 % hear_radix;
        let speak = (0..m)
            .map(|_| {
                let s = (speak_index % n as u64) as usize;
                speak_index /= n as u64;
                s
            })
            .collect();
        let hear = (0..n)
            .map(|_| {
                let o = (hear_index % m as u64) as usize;
                hear_index /= m as u64;
                o
            })
            .collect();
        Language::new(m, n, speak, hear)
    }

    pub fn id(&self) -> LanguageId {
        let speak_index = self
            .speak
            .iter()
            .rev()
            .fold(0u64, |acc, &s| acc * self.n as u64 + s as u64);
        let hear_index = self
            .hear
            .iter()
            .rev()
            .fold(0u64, |acc, &o| acc * self.m as u64 + o as u64);
        LanguageId(speak_index * (self.m as u64).pow(self.n as u32) + hear_index)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn speak(&self) -> &[usize] {
        &self.speak
    }

    pub fn hear(&self) -> &[usize] {
        &self.hear
    }

    /// `tr(P Q)` for this language with itself.
    pub fn self_trace(&self) -> usize {
        trace_unchecked(self, self)
    }

    fn check_dims(&self, other: &Language) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn trace_unchecked(speaker: &Language, hearer: &Language) -> usize {
    speaker
        .speak
        .iter()
        .enumerate()
        .filter(|&(i, &s)| hearer.hear[s] == i)
        .count()
}

/// Number of objects that survive a round trip through `a`'s speaking map and
/// `b`'s hearing map, i.e. `tr(P_a Q_b)`.
pub fn cross_trace(a: &Language, b: &Language) -> Result<usize> {
    a.check_dims(b)?;
    Ok(trace_unchecked(a, b))
}

/// Four times the Hamming distance between the matrix encodings.
///
/// Each differing speak or hear entry flips two matrix cells, so the result is
/// `2 * (#differing entries)`.
pub fn hamming_q(a: &Language, b: &Language) -> Result<usize> {
    a.check_dims(b)?;
    let speak = a.speak.iter().zip(&b.speak).filter(|(x, y)| x != y).count();
    let hear = a.hear.iter().zip(&b.hear).filter(|(x, y)| x != y).count();
    Ok(2 * (speak + hear))
}

/// All languages within Hamming distance `d` of `center`, sorted by id.
///
/// Distance at most `d` means at most `2d` of the `m + n` map entries differ,
/// so the disk is enumerated directly rather than by filtering the whole set.
pub fn disk(center: &Language, d: usize) -> Vec<Language> {
    disk_ids(center, d)
        .into_iter()
        .map(|id| Language::from_id(center.m, center.n, id).expect("valid id"))
        .collect()
}

/// Ids of [`disk`], sorted.
pub fn disk_ids(center: &Language, d: usize) -> Vec<LanguageId> {
    let (m, n) = center.dims();
    let budget = d.saturating_mul(2).min(m + n);
    let mut entries: Vec<usize> = center.speak.iter().chain(&center.hear).copied().collect();
    let mut out = Vec::new();
    fill_disk(center, &mut entries, 0, budget, &mut out);
    out.sort_unstable();
    out
}

fn fill_disk(
    center: &Language,
    entries: &mut [usize],
    pos: usize,
    budget: usize,
    out: &mut Vec<LanguageId>,
) {
    let (m, n) = center.dims();
    if pos == entries.len() {
        let lang = Language {
            m,
            n,
            speak: entries[..m].to_vec(),
            hear: entries[m..].to_vec(),
        };
        out.push(lang.id());
        return;
    }
    let original = entries[pos];
    fill_disk(center, entries, pos + 1, budget, out);
    if budget > 0 {
        let radix = if pos < m { n } else { m };
        for v in (0..radix).filter(|&v| v != original) {
            entries[pos] = v;
            fill_disk(center, entries, pos + 1, budget - 1, out);
        }
        entries[pos] = original;
    }
}

/// A language is aligned when its self-trace reaches `min(m, n)`.
pub fn is_aligned(lang: &Language) -> bool {
    lang.self_trace() == lang.m.min(lang.n)
}

/// Relabel objects by `sigma`: object `k` becomes object `sigma[k]`.
pub fn permute(lang: &Language, sigma: &[usize]) -> Result<Language> {
    let m = lang.m;
    if sigma.len() != m {
        return Err(Error::NotAPermutation(m));
    }
    let mut inverse = vec![usize::MAX; m];
    for (k, &s) in sigma.iter().enumerate() {
        if s >= m || inverse[s] != usize::MAX {
            return Err(Error::NotAPermutation(m));
        }
        inverse[s] = k;
    }
    let speak = (0..m).map(|i| lang.speak[inverse[i]]).collect();
    let hear = lang.hear.iter().map(|&o| sigma[o]).collect();
    Ok(Language {
        m,
        n: lang.n,
        speak,
        hear,
    })
}

/// `(N - 1)` times the fitness gap between an incumbent and a single mutant
/// `mutant` in an otherwise homogeneous population of `incumbent` users.
///
/// Non-positive exactly when the mutant is at least as fit as the incumbents.
pub fn delta_scaled(incumbent: &Language, mutant: &Language, agents: usize) -> Result<i64> {
    incumbent.check_dims(mutant)?;
    if agents < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 agents, got {agents}")));
    }
    let own = trace_unchecked(incumbent, incumbent) as i64;
    let cross =
        trace_unchecked(incumbent, mutant) as i64 + trace_unchecked(mutant, incumbent) as i64;
    Ok((agents as i64 - 2) * (2 * own - cross))
}

/// A neighbor with self-trace exactly one higher, differing in at most one
/// speak entry and one hear entry.
///
/// Picks the smallest non-contributing object and the smallest unused symbol
/// and wires them to each other.
pub fn claim2_neighbor(lang: &Language) -> Result<Language> {
    if is_aligned(lang) {
        return Err(Error::AlreadyAligned);
    }
    let contributing: Vec<bool> = (0..lang.m)
        .map(|i| lang.hear[lang.speak[i]] == i)
        .collect();
    let mut used = vec![false; lang.n];
    for (i, &c) in contributing.iter().enumerate() {
        if c {
            used[lang.speak[i]] = true;
        }
    }
    let object = contributing.iter().position(|&c| !c).expect("unaligned");
    let symbol = used.iter().position(|&u| !u).expect("unaligned");
    let mut out = lang.clone();
    out.speak[object] = symbol;
    out.hear[symbol] = object;
    Ok(out)
}

/// Joint state of the society: one language per agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    langs: Vec<Language>,
}

impl Profile {
    pub fn new(langs: Vec<Language>) -> Result<Self> {
        let first = langs
            .first()
            .ok_or_else(|| Error::InvalidParams("empty profile".into()))?;
        if langs.len() < 2 {
            return Err(Error::InvalidParams("profile needs at least 2 agents".into()));
        }
        if let Some(bad) = langs.iter().find(|l| l.dims() != first.dims()) {
            return Err(Error::DimensionMismatch {
                left: first.dims(),
                right: bad.dims(),
            });
        }
        Ok(Profile { langs })
    }

    pub fn homogeneous(lang: Language, agents: usize) -> Result<Self> {
        Profile::new(vec![lang; agents])
    }

    pub fn from_ids(params: GameParams, ids: &[LanguageId]) -> Result<Self> {
        if ids.len() != params.agents {
            return Err(Error::InvalidParams(format!(
                "expected {} agents, got {}",
                params.agents,
                ids.len()
            )));
        }
        let langs = ids
            .iter()
            .map(|&id| Language::from_id(params.m, params.n, id))
            .collect::<Result<Vec<_>>>()?;
        Profile::new(langs)
    }

    pub fn len(&self) -> usize {
        self.langs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.langs.is_empty()
    }

    pub fn langs(&self) -> &[Language] {
        &self.langs
    }

    pub fn get(&self, i: usize) -> Option<&Language> {
        self.langs.get(i)
    }

    pub fn params(&self) -> GameParams {
        let (m, n) = self.langs[0].dims();
        GameParams {
            m,
            n,
            agents: self.langs.len(),
        }
    }

    pub fn ids(&self) -> Vec<LanguageId> {
        self.langs.iter().map(Language::id).collect()
    }

    /// Copy of this profile with agent `i` switched to `lang`.
    pub fn with_agent(&self, i: usize, lang: Language) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        self.langs[0].check_dims(&lang)?;
        let mut langs = self.langs.clone();
        langs[i] = lang;
        Ok(Profile { langs })
    }

    /// `(N - 1) * f_i`: the sum over all other agents of both round-trip traces.
    pub fn fitness_scaled(&self, i: usize) -> Result<u64> {
        let me = self.langs.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })?;
        Ok(self
            .langs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, other)| (trace_unchecked(me, other) + trace_unchecked(other, me)) as u64)
            .sum())
    }

    pub fn all_fitness_scaled(&self) -> Vec<u64> {
        (0..self.len())
            .map(|i| self.fitness_scaled(i).expect("in range"))
            .collect()
    }

    /// `2 (N - 1) * Phi`, the sum of all scaled fitnesses.
    pub fn potential_scaled(&self) -> u64 {
        self.all_fitness_scaled().iter().sum()
    }

    /// `(N - 1) * Phi`, on the same scale as [`Profile::fitness_scaled`], so a
    /// unilateral deviation changes it by exactly the deviator's change.
    pub fn phi_scaled(&self) -> u64 {
        // Every pair is counted once from each side.
        self.potential_scaled() / 2
    }

    /// Average societal fitness `W = (1/N) sum_i f_i`, exactly.
    pub fn avg_fitness(&self) -> Ratio {
        let n = self.len() as u64;
        Ratio::new(self.potential_scaled(), n * (n - 1))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.langs.windows(2).all(|w| w[0] == w[1])
    }

    /// Homogeneous on an aligned language.
    pub fn is_optimal(&self) -> bool {
        self.is_homogeneous() && is_aligned(&self.langs[0])
    }

    /// Agent indices attaining the maximum scaled fitness, ascending.
    pub fn fittest(&self) -> Vec<usize> {
        argmax_indices(&self.all_fitness_scaled())
    }
}

pub(crate) fn argmax_indices(values: &[u64]) -> Vec<usize> {
    let best = values.iter().copied().max().unwrap_or(0);
    values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == best)
        .map(|(i, _)| i)
        .collect()
}
