//! Length-preserving bijective string perturbations.
//!
//! Every family permutes positions only, so each is a bijection on every
//! length class of `Σ*`: string multisets, lengths and the distribution over
//! whole strings (up to relabelling) are preserved, while local order is
//! destroyed to different degrees.
//!
//! The shuffle families draw their permutations lazily from SplitMix64
//! streams keyed by `(family, seed, length)` for whole-string shuffles and
//! `(family, seed, k, window index, window length)` for windowed ones. Window
//! indices are 1-based; a trailing window shorter than `k` uses the
//! permutation for its own length at its own index.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sample::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Reverse,
    #[serde(rename = "detshuffle")]
    DeterministicShuffle,
    #[serde(rename = "evenodd")]
    EvenOdd,
    #[serde(rename = "oddeven")]
    OddEven,
    #[serde(rename = "klocal")]
    KLocal,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Reverse,
        Family::DeterministicShuffle,
        Family::EvenOdd,
        Family::OddEven,
        Family::KLocal,
    ];

    fn tag(self) -> u64 {
        match self {
            Family::Reverse => 1,
            Family::DeterministicShuffle => 2,
            Family::EvenOdd => 3,
            Family::OddEven => 4,
            Family::KLocal => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Reverse => "reverse",
            Family::DeterministicShuffle => "detshuffle",
            Family::EvenOdd => "evenodd",
            Family::OddEven => "oddeven",
            Family::KLocal => "klocal",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown perturbation family {s:?}")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully specified perturbation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub family: Family,
    pub seed: u64,
    /// Window size, for [`Family::KLocal`] only.
    pub k: Option<usize>,
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if let Some(k) = self.k {
            write!(f, "(k={k})")?;
        }
        write!(f, "[seed={}]", self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PermutationKey {
    Length(usize),
    Window {
        k: usize,
        index: usize,
        len: usize,
    },
}

/// Lazily sampled permutations for one family and seed. Each key is sampled
/// at most once; concurrent readers only ever see finished entries.
#[derive(Debug)]
pub struct PermutationCache {
    family: Family,
    seed: u64,
    table: RwLock<HashMap<PermutationKey, Arc<Vec<usize>>>>,
}

impl PermutationCache {
    pub fn new(family: Family, seed: u64) -> Self {
        Self {
            family,
            seed,
            table: RwLock::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sample(&self, key: PermutationKey) -> Vec<usize> {
        let tag = self.family.tag();
        let (n, mut rng) = match key {
            PermutationKey::Length(n) => (n, SplitMix64::keyed(self.seed, &[tag, n as u64])),
            PermutationKey::Window { k, index, len } => (
                len,
                SplitMix64::keyed(self.seed, &[tag, k as u64, index as u64, len as u64]),
            ),
        };
        rng.permutation(n)
    }

    /// The permutation for `key`; output position `t` reads input position
    /// `perm[t]`.
    pub fn get(&self, key: PermutationKey) -> Arc<Vec<usize>> {
        if let Some(p) = self.table.read().expect("cache lock").get(&key) {
            return Arc::clone(p);
        }
        let fresh = Arc::new(self.sample(key));
        let mut table = self.table.write().expect("cache lock");
        Arc::clone(table.entry(key).or_insert(fresh))
    }
}

fn check_cache(cache: &PermutationCache, family: Family) -> Result<()> {
    if cache.family != family {
        return Err(Error::InvalidConfig(format!(
            "cache is for {}, not {family}",
            cache.family
        )));
    }
    Ok(())
}

pub fn reverse<T: Clone>(y: &[T]) -> Vec<T> {
    y.iter().rev().cloned().collect()
}

/// Symbols at even (1-based) positions, then those at odd positions.
pub fn even_odd_shuffle<T: Clone>(y: &[T]) -> Vec<T> {
    y.iter().skip(1).step_by(2).chain(y.iter().step_by(2)).cloned().collect()
}

/// Symbols at odd (1-based) positions, then those at even positions.
pub fn odd_even_shuffle<T: Clone>(y: &[T]) -> Vec<T> {
    y.iter().step_by(2).chain(y.iter().skip(1).step_by(2)).cloned().collect()
}

fn undo_interleave<T: Clone>(y: &[T], odd_first: bool) -> Vec<T> {
    let n_odd = y.len().div_ceil(2);
    let (odd, even) = if odd_first {
        y.split_at(n_odd)
    } else {
        let (e, o) = y.split_at(y.len() - n_odd);
        (o, e)
    };
    let mut out = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        out.push(if i % 2 == 0 { odd[i / 2].clone() } else { even[i / 2].clone() });
    }
    out
}

/// Applies one permutation to the whole string; strings of equal length share
/// it.
pub fn deterministic_shuffle<T: Clone>(y: &[T], cache: &PermutationCache) -> Result<Vec<T>> {
    check_cache(cache, Family::DeterministicShuffle)?;
    let perm = cache.get(PermutationKey::Length(y.len()));
    Ok(perm.iter().map(|&i| y[i].clone()).collect())
}

fn windows(len: usize, k: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    // (1-based window index, start, window length)
    (0..len.div_ceil(k)).map(move |w| {
        let start = w * k;
        (w + 1, start, k.min(len - start))
    })
}

/// Permutes each consecutive window of size `k` with its own permutation.
pub fn k_local_shuffle<T: Clone>(y: &[T], k: usize, cache: &PermutationCache) -> Result<Vec<T>> {
    check_cache(cache, Family::KLocal)?;
    if k < 2 {
        return Err(Error::InvalidWindowSize(k));
    }
    let mut out = Vec::with_capacity(y.len());
    for (index, start, len) in windows(y.len(), k) {
        let perm = cache.get(PermutationKey::Window { k, index, len });
        out.extend(perm.iter().map(|&i| y[start + i].clone()));
    }
    Ok(out)
}

/// A perturbation bound to its permutation cache.
#[derive(Debug)]
pub struct Perturbation {
    spec: PerturbationSpec,
    cache: PermutationCache,
}

impl Perturbation {
    pub fn new(spec: PerturbationSpec) -> Result<Self> {
        match (spec.family, spec.k) {
            (Family::KLocal, None) => {
                return Err(Error::InvalidConfig("klocal requires a window size k".into()))
            }
            (Family::KLocal, Some(k)) if k < 2 => return Err(Error::InvalidWindowSize(k)),
            (Family::KLocal, _) | (_, None) => {}
            (family, Some(_)) => {
                return Err(Error::InvalidConfig(format!("{family} takes no window size")))
            }
        }
        Ok(Self {
            cache: PermutationCache::new(spec.family, spec.seed),
            spec,
        })
    }

    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }

    pub fn apply<T: Clone>(&self, y: &[T]) -> Vec<T> {
        match self.spec.family {
            Family::Reverse => reverse(y),
            Family::EvenOdd => even_odd_shuffle(y),
            Family::OddEven => odd_even_shuffle(y),
            Family::DeterministicShuffle => {
                deterministic_shuffle(y, &self.cache).expect("cache family matches")
            }
            Family::KLocal => k_local_shuffle(y, self.spec.k.expect("checked in new"), &self.cache)
                .expect("window size checked in new"),
        }
    }

    /// The inverse map: `invert(apply(y)) == y`.
    pub fn invert<T: Clone>(&self, y: &[T]) -> Vec<T> {
        let scatter = |out: &mut Vec<Option<T>>, perm: &[usize], offset: usize, src: &[T]| {
            for (t, &i) in perm.iter().enumerate() {
                out[offset + i] = Some(src[t].clone());
            }
        };
        match self.spec.family {
            Family::Reverse => reverse(y),
            Family::EvenOdd => undo_interleave(y, false),
            Family::OddEven => undo_interleave(y, true),
            Family::DeterministicShuffle => {
                let perm = self.cache.get(PermutationKey::Length(y.len()));
                let mut out = vec![None; y.len()];
                scatter(&mut out, &perm, 0, y);
                out.into_iter().map(|x| x.expect("bijection")).collect()
            }
            Family::KLocal => {
                let k = self.spec.k.expect("checked in new");
                let mut out = vec![None; y.len()];
                for (index, start, len) in windows(y.len(), k) {
                    let perm = self.cache.get(PermutationKey::Window { k, index, len });
                    scatter(&mut out, &perm, start, &y[start..start + len]);
                }
                out.into_iter().map(|x| x.expect("bijection")).collect()
            }
        }
    }

    /// Applies the perturbation to every string, preserving order, and records
    /// the spec in the corpus metadata.
    pub fn perturb_corpus(&self, corpus: &Corpus) -> Corpus {
        let strings = corpus.strings.par_iter().map(|s| self.apply(s)).collect();
        let mut metadata = corpus.metadata.clone();
        metadata.perturbations.push(self.spec.to_string());
        Corpus { strings, metadata }
    }
}

pub fn perturb_corpus(corpus: &Corpus, spec: &PerturbationSpec) -> Result<Corpus> {
    Ok(Perturbation::new(spec.clone())?.perturb_corpus(corpus))
}
