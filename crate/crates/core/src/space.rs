//! Enumerated language set with a precomputed pairwise trace table.

use crate::error::{Error, Result};
use crate::lang::{disk_ids, is_aligned, language_count, trace_unchecked, Language, LanguageId};

/// Every language of an `(m, n)` game, indexed by canonical id.
#[derive(Clone, Debug)]
pub struct LanguageSpace {
    m: usize,
    n: usize,
    langs: Vec<Language>,
    trace: Vec<u8>,
    aligned: Vec<LanguageId>,
}

impl LanguageSpace {
    /// Largest language set for which the `K x K` trace table is built.
    pub const MAX_LANGUAGES: u64 = 4096;

    pub fn new(m: usize, n: usize) -> Result<Self> {
        let count = language_count(m, n).unwrap_or(u64::MAX);
        if count > Self::MAX_LANGUAGES {
            return Err(Error::InvalidParams(format!(
                "{count} languages at m={m}, n={n} exceeds the enumeration limit of {}",
                Self::MAX_LANGUAGES
            )));
        }
        let langs = (0..count)
            .map(|id| Language::from_id(m, n, LanguageId(id)))
            .collect::<Result<Vec<_>>>()?;
        let k = langs.len();
        let mut trace = vec![0u8; k * k];
        for (a, la) in langs.iter().enumerate() {
            for (b, lb) in langs.iter().enumerate() {
                trace[a * k + b] = trace_unchecked(la, lb) as u8;
            }
        }
        let aligned = langs.iter().filter(|l| is_aligned(l)).map(Language::id).collect();
        Ok(LanguageSpace {
            m,
            n,
            langs,
            trace,
            aligned,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.langs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.langs.is_empty()
    }

    pub fn language(&self, id: usize) -> &Language {
        &self.langs[id]
    }

    pub fn languages(&self) -> &[Language] {
        &self.langs
    }

    /// `cross_trace(a, b)` by table lookup.
    #[inline]
    pub fn trace(&self, a: usize, b: usize) -> u32 {
        self.trace[a * self.langs.len() + b] as u32
    }

    /// Symmetric pair payoff `tr(P_a Q_b) + tr(P_b Q_a)`.
    #[inline]
    pub fn pair_payoff(&self, a: usize, b: usize) -> u32 {
        self.trace(a, b) + self.trace(b, a)
    }

    pub fn self_trace(&self, a: usize) -> u32 {
        self.trace(a, a)
    }

    pub fn is_aligned(&self, a: usize) -> bool {
        self.trace(a, a) as usize == self.m.min(self.n)
    }

    pub fn aligned_ids(&self) -> &[LanguageId] {
        &self.aligned
    }

    pub fn disk(&self, a: usize, d: usize) -> Vec<usize> {
        disk_ids(&self.langs[a], d)
            .into_iter()
            .map(|id| id.0 as usize)
            .collect()
    }

    /// Scaled fitness of every agent for a profile given as language indices.
    pub fn fitness_scaled(&self, profile: &[usize]) -> Vec<u64> {
        profile
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                profile
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &b)| self.pair_payoff(a, b) as u64)
                    .sum()
            })
            .collect()
    }
}

/// Aligned language ids of an `(m, n)` game, ascending, by filtering the full set.
pub fn aligned_language_ids(m: usize, n: usize) -> Result<Vec<LanguageId>> {
    const LIMIT: u64 = 1 << 22;
    let count = language_count(m, n).unwrap_or(u64::MAX);
    if count > LIMIT {
        return Err(Error::InvalidParams(format!(
            "{count} languages at m={m}, n={n} is too many to enumerate"
        )));
    }
    (0..count)
        .map(|id| Language::from_id(m, n, LanguageId(id)))
        .filter(|l| l.as_ref().map(is_aligned).unwrap_or(true))
        .map(|l| l.map(|l| l.id()))
        .collect()
}
