//! Fixed-context counting, the plug-in m-local entropy estimator, smoothed
//! n-gram learners and held-out next-symbol cross-entropy.
//!
//! Everything is parameterized by the context length `m - 1`. Outcomes range
//! over `Σ ∪ {EOS}`, with EOS encoded as `alphabet_size`. Contexts range over
//! `Σ` only, except in padded mode, where `alphabet_size` doubles as the BOS
//! filler so that every position of a string has a full-length context.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyReport, LogBase};
use crate::error::{Error, Result};
use crate::matrices::TransitionMatrices;
use crate::pfsa::Symbol;
use crate::sample::Corpus;

/// Largest number of distinct contexts a count table may hold.
pub const MAX_CONTEXTS: usize = 1 << 31;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// How string-initial positions are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Positions with fewer than `m - 1` preceding symbols are skipped, so
    /// every context is a genuine infix.
    Exclude,
    /// `m - 1` BOS fillers are prepended, so every position is counted.
    Bos,
}

/// Outcome counts following one context.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextCounts {
    pub total: u64,
    /// `(outcome, count)`, sorted by outcome.
    pub next: Vec<(Symbol, u64)>,
}

impl ContextCounts {
    fn add(&mut self, outcome: Symbol, count: u64) {
        self.total += count;
        match self.next.binary_search_by_key(&outcome, |e| e.0) {
            Ok(i) => self.next[i].1 += count,
            Err(i) => self.next.insert(i, (outcome, count)),
        }
    }

    pub fn count(&self, outcome: Symbol) -> u64 {
        self.next
            .binary_search_by_key(&outcome, |e| e.0)
            .map_or(0, |i| self.next[i].1)
    }
}

/// Context-to-outcome count table for a fixed context length.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramCounts {
    context_length: usize,
    alphabet_size: usize,
    padding: Padding,
    radix: u128,
    table: HashMap<u128, ContextCounts>,
    n_total: u64,
}

impl NgramCounts {
    pub fn new(context_length: usize, alphabet_size: usize, padding: Padding) -> Result<Self> {
        let radix = alphabet_size as u128 + 1;
        if radix.checked_pow(context_length as u32).is_none() {
            return Err(Error::ContextTooLong {
                context_length,
                alphabet_size,
            });
        }
        Ok(Self {
            context_length,
            alphabet_size,
            padding,
            radix,
            table: HashMap::new(),
            n_total: 0,
        })
    }

    pub fn context_length(&self) -> usize {
        self.context_length
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn eos(&self) -> Symbol {
        self.alphabet_size as Symbol
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn num_contexts(&self) -> usize {
        self.table.len()
    }

    pub fn pack(&self, context: &[Symbol]) -> u128 {
        debug_assert_eq!(context.len(), self.context_length);
        context
            .iter()
            .fold(0u128, |acc, &s| acc * self.radix + s as u128)
    }

    pub fn unpack(&self, mut key: u128) -> Vec<Symbol> {
        let mut out = vec![0; self.context_length];
        for slot in out.iter_mut().rev() {
            *slot = (key % self.radix) as Symbol;
            key /= self.radix;
        }
        out
    }

    pub fn get(&self, context: &[Symbol]) -> Option<&ContextCounts> {
        self.table.get(&self.pack(context))
    }

    /// `N(c)`, the number of windows with context `c`.
    pub fn context_total(&self, context: &[Symbol]) -> u64 {
        self.get(context).map_or(0, |c| c.total)
    }

    pub fn count(&self, context: &[Symbol], outcome: Symbol) -> u64 {
        self.get(context).map_or(0, |c| c.count(outcome))
    }

    /// Context keys in ascending order, for deterministic iteration.
    pub fn sorted_keys(&self) -> Vec<u128> {
        let mut keys: Vec<u128> = self.table.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn entry(&self, key: u128) -> Option<&ContextCounts> {
        self.table.get(&key)
    }

    fn add(&mut self, key: u128, outcome: Symbol, count: u64) {
        self.table.entry(key).or_default().add(outcome, count);
        self.n_total += count;
    }

    fn add_string(&mut self, y: &[Symbol]) -> Result<()> {
        if let Some(&symbol) = y.iter().find(|&&s| s as usize >= self.alphabet_size) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: self.alphabet_size,
            });
        }
        let k = self.context_length;
        let eos = self.eos();
        match self.padding {
            Padding::Exclude => {
                for t in k..=y.len() {
                    let key = self.pack(&y[t - k..t]);
                    self.add(key, y.get(t).copied().unwrap_or(eos), 1);
                }
            }
            Padding::Bos => {
                let bos = self.alphabet_size as Symbol;
                let mut padded = vec![bos; k];
                padded.extend_from_slice(y);
                for t in 0..=y.len() {
                    let key = self.pack(&padded[t..t + k]);
                    self.add(key, y.get(t).copied().unwrap_or(eos), 1);
                }
            }
        }
        if self.table.len() > MAX_CONTEXTS {
            return Err(Error::InvalidConfig(format!(
                "count table exceeds {MAX_CONTEXTS} contexts"
            )));
        }
        Ok(())
    }

    /// Adds another table's counts. The result does not depend on how a
    /// corpus was sharded.
    pub fn merge(&mut self, other: &NgramCounts) {
        assert_eq!(self.context_length, other.context_length);
        assert_eq!(self.alphabet_size, other.alphabet_size);
        assert_eq!(self.padding, other.padding);
        for (&key, counts) in &other.table {
            for &(o, c) in &counts.next {
                self.add(key, o, c);
            }
        }
    }
}

/// Counts every window of `m` symbols in the corpus (context of `m - 1`
/// symbols plus the following symbol or EOS).
pub fn count_corpus(corpus: &Corpus, m: usize, padding: Padding) -> Result<NgramCounts> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let observed = corpus
        .strings
        .iter()
        .flatten()
        .max()
        .map_or(0, |&s| s as usize + 1);
    let alphabet_size = corpus.metadata.alphabet_size.max(observed);
    let empty = NgramCounts::new(m - 1, alphabet_size, padding)?;
    corpus
        .strings
        .par_chunks(4096)
        .map(|shard| {
            let mut counts = empty.clone();
            for y in shard {
                counts.add_string(y)?;
            }
            Ok(counts)
        })
        .try_reduce(
            || empty.clone(),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )
}

/// Plug-in estimate of the m-local entropy: the average in-sample surprisal
/// of each window under the empirical conditional distribution of the same
/// corpus. String-initial positions without a full context are excluded.
pub fn plugin_m_local_entropy(corpus: &Corpus, m: usize, base: LogBase) -> Result<EntropyReport> {
    let counts = count_corpus(corpus, m, Padding::Exclude)?;
    plugin_entropy_from_counts(&counts, base)
}

pub fn plugin_entropy_from_counts(counts: &NgramCounts, base: LogBase) -> Result<EntropyReport> {
    if counts.n_total == 0 {
        return Err(Error::EmptyCorpusWindows);
    }
    // -Σ n(c,y) ln(n(c,y)/N(c)) = Σ N(c) ln N(c) - Σ n(c,y) ln n(c,y)
    let mut acc = 0.0;
    for key in counts.sorted_keys() {
        let c = &counts.table[&key];
        let total = c.total as f64;
        acc += total * total.ln();
        for &(_, n) in &c.next {
            let n = n as f64;
            acc -= n * n.ln();
        }
    }
    let nats = (acc / counts.n_total as f64).max(0.0);
    let possible = (counts.alphabet_size as u128)
        .checked_pow(counts.context_length as u32)
        .unwrap_or(u128::MAX);
    let evaluated = counts.table.len() as u128;
    Ok(EntropyReport {
        m: Some(counts.context_length + 1),
        value: base.from_nats(nats),
        log_base: base,
        contexts_evaluated: evaluated,
        contexts_skipped_zero_mass: possible.saturating_sub(evaluated),
    })
}

/// Smoothing policy of a [`SmoothedModel`]. Serializes as its string form,
/// e.g. `"absdisc:0.75"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Smoothing {
    /// Empirical conditional probabilities; unseen events get zero.
    Mle,
    /// Add `κ` to every outcome count.
    AddK(f64),
    /// Interpolated absolute discounting against the uniform distribution
    /// over `Σ ∪ {EOS}`, with discount `d ∈ (0, 1]`.
    AbsoluteDiscount(f64),
}

pub const DEFAULT_DISCOUNT: f64 = 0.75;

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AbsoluteDiscount(DEFAULT_DISCOUNT)
    }
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = |default: f64| -> Result<f64> {
            arg.map_or(Ok(default), |a| {
                a.parse::<f64>()
                    .map_err(|e| Error::InvalidConfig(format!("smoothing parameter {a:?}: {e}")))
            })
        };
        let policy = match name {
            "mle" | "plugin" => Smoothing::Mle,
            "addk" => Smoothing::AddK(param(1.0)?),
            "absdisc" => Smoothing::AbsoluteDiscount(param(DEFAULT_DISCOUNT)?),
            _ => return Err(Error::InvalidConfig(format!("unknown smoothing {s:?}"))),
        };
        match policy {
            Smoothing::AddK(k) if !(k > 0.0) => Err(Error::InvalidConfig("add-k needs k > 0".into())),
            Smoothing::AbsoluteDiscount(d) if !(d > 0.0 && d <= 1.0) => {
                Err(Error::InvalidConfig("discount must lie in (0, 1]".into()))
            }
            p => Ok(p),
        }
    }
}

impl TryFrom<String> for Smoothing {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Smoothing> for String {
    fn from(s: Smoothing) -> String {
        s.to_string()
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::Mle => write!(f, "mle"),
            Smoothing::AddK(k) => write!(f, "addk:{k}"),
            Smoothing::AbsoluteDiscount(d) => write!(f, "absdisc:{d}"),
        }
    }
}

/// An n-gram model over a fixed context length.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedModel {
    counts: NgramCounts,
    policy: Smoothing,
}

impl SmoothedModel {
    pub fn new(counts: NgramCounts, policy: Smoothing) -> Self {
        Self { counts, policy }
    }

    /// Trains on BOS-padded counts, so every position of a held-out string
    /// has a context.
    pub fn train(corpus: &Corpus, m: usize, policy: Smoothing) -> Result<Self> {
        Ok(Self::new(count_corpus(corpus, m, Padding::Bos)?, policy))
    }

    pub fn counts(&self) -> &NgramCounts {
        &self.counts
    }

    pub fn policy(&self) -> Smoothing {
        self.policy
    }

    /// `m`, one more than the context length.
    pub fn order(&self) -> usize {
        self.counts.context_length + 1
    }

    fn outcomes(&self) -> f64 {
        (self.counts.alphabet_size + 1) as f64
    }

    fn prob_from(&self, entry: Option<&ContextCounts>, outcome: Symbol) -> f64 {
        let v = self.outcomes();
        match (self.policy, entry) {
            (Smoothing::Mle, None) => 0.0,
            (Smoothing::Mle, Some(c)) => c.count(outcome) as f64 / c.total as f64,
            (_, None) => 1.0 / v,
            (Smoothing::AddK(k), Some(c)) => {
                (c.count(outcome) as f64 + k) / (c.total as f64 + k * v)
            }
            (Smoothing::AbsoluteDiscount(d), Some(c)) => {
                let total = c.total as f64;
                let n = c.count(outcome) as f64;
                let discounted = (n - d).max(0.0) / total;
                let backoff = d * c.next.len() as f64 / total;
                discounted + backoff / v
            }
        }
    }

    /// `p̂(outcome | context)`; `outcome == alphabet_size` is EOS.
    pub fn prob(&self, context: &[Symbol], outcome: Symbol) -> f64 {
        self.prob_from(self.counts.get(context), outcome)
    }

    /// The full conditional distribution over `Σ ∪ {EOS}`.
    pub fn distribution(&self, context: &[Symbol]) -> Vec<f64> {
        let entry = self.counts.get(context);
        (0..=self.counts.alphabet_size as Symbol)
            .map(|o| self.prob_from(entry, o))
            .collect()
    }

    /// Summed log-probability (nats) of the string including its EOS, and the
    /// number of scored events `|y| + 1`.
    pub fn string_log_prob(&self, y: &[Symbol]) -> Result<(f64, usize)> {
        if self.counts.padding != Padding::Bos {
            return Err(Error::InvalidConfig(
                "held-out scoring needs a model trained with BOS padding".into(),
            ));
        }
        let a = self.counts.alphabet_size;
        if let Some(&symbol) = y.iter().find(|&&s| s as usize >= a) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: a,
            });
        }
        let k = self.counts.context_length;
        let mut padded = vec![a as Symbol; k];
        padded.extend_from_slice(y);
        let mut total = 0.0;
        for t in 0..=y.len() {
            let p = self.prob(&padded[t..t + k], y.get(t).copied().unwrap_or(a as Symbol));
            if !(p > 0.0) {
                return Err(Error::ZeroProbabilityEvent);
            }
            total += p.ln();
        }
        Ok((total, y.len() + 1))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_document())? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_document(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn to_document(&self) -> ModelDocument {
        let contexts = self
            .counts
            .sorted_keys()
            .into_iter()
            .map(|key| {
                ContextEntry {
                    context: self.counts.unpack(key),
                    next: self.counts.table[&key].next.clone(),
                }
            })
            .collect();
        ModelDocument {
            version: MODEL_FORMAT_VERSION,
            context_length: self.counts.context_length,
            alphabet_size: self.counts.alphabet_size,
            padding: self.counts.padding,
            policy: self.policy.to_string(),
            contexts,
        }
    }

    fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: doc.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let mut counts = NgramCounts::new(doc.context_length, doc.alphabet_size, doc.padding)?;
        for entry in doc.contexts {
            if entry.context.len() != doc.context_length
                || entry.context.iter().any(|&s| s as usize > doc.alphabet_size)
            {
                return Err(Error::InvalidConfig(format!("bad context {:?}", entry.context)));
            }
            let key = counts.pack(&entry.context);
            for (o, c) in entry.next {
                counts.add(key, o, c);
            }
        }
        Ok(Self::new(counts, doc.policy.parse()?))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ContextEntry {
    context: Vec<Symbol>,
    next: Vec<(Symbol, u64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    context_length: usize,
    alphabet_size: usize,
    padding: Padding,
    policy: String,
    contexts: Vec<ContextEntry>,
}

/// Per-symbol cross-entropy of a held-out corpus: the summed negative
/// log-probability of every symbol and every EOS, divided by
/// `Σ (|y| + 1)`.
pub fn heldout_cross_entropy(model: &SmoothedModel, corpus: &Corpus, base: LogBase) -> Result<f64> {
    if model.policy == Smoothing::Mle {
        return Err(Error::InvalidConfig(
            "held-out scoring needs a smoothed model".into(),
        ));
    }
    let parts = corpus
        .strings
        .par_iter()
        .map(|y| model.string_log_prob(y))
        .collect::<Result<Vec<_>>>()?;
    let (log_prob, events) = parts
        .into_iter()
        .fold((0.0, 0usize), |(lp, n), (l, k)| (lp + l, n + k));
    Ok(base.from_nats(-log_prob / events as f64))
}

/// Cross-entropy of a corpus under the generating automaton itself, with the
/// same normalizer as [`heldout_cross_entropy`].
pub fn pfsa_cross_entropy(mats: &TransitionMatrices, corpus: &Corpus, base: LogBase) -> Result<f64> {
    let parts = corpus
        .strings
        .par_iter()
        .map(|y| mats.string_log_prob(y))
        .collect::<Result<Vec<_>>>()?;
    let log_prob: f64 = parts.into_iter().sum();
    let events: usize = corpus.strings.iter().map(|y| y.len() + 1).sum();
    Ok(base.from_nats(-log_prob / events as f64))
}

/// Learner cross-entropy minus the generator's exact next-symbol entropy, in
/// the same base. Sampling noise can make it slightly negative.
pub fn kl_estimate(heldout_ce: f64, exact_next_symbol_entropy: f64) -> f64 {
    heldout_ce - exact_next_symbol_entropy
}
