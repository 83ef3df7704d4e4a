//! Reference computations that never touch the matrix code: explicit string
//! enumeration for tiny automata and a length-by-length forward recursion for
//! larger ones.
#![allow(dead_code)]

use std::collections::HashMap;

use locent::{Pfsa, Symbol};

fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -(w / total) * (w / total).ln())
        .sum()
}

fn step(pfsa: &Pfsa, alpha: &[f64], symbol: Symbol) -> Vec<f64> {
    let mut out = vec![0.0; alpha.len()];
    for (q, &a) in alpha.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for arc in pfsa.arcs_from(q).filter(|t| t.symbol == symbol) {
            out[arc.target] += a * arc.weight;
        }
    }
    out
}

/// Every string whose prefix mass stays above a pruning threshold, with its
/// probability.
pub struct Enumeration {
    pub alphabet_size: usize,
    pub strings: Vec<(Vec<Symbol>, f64)>,
    index: HashMap<Vec<Symbol>, f64>,
    prefixes: HashMap<Vec<Symbol>, f64>,
    infixes: HashMap<Vec<Symbol>, f64>,
    /// Prefixes cut off by pruning, with the mass that reached them. All of
    /// it halts eventually, so it still counts towards prefix probabilities.
    pruned: Vec<(Vec<Symbol>, f64)>,
}

/// Substrings up to this length get a precomputed infix weight.
pub const MAX_INDEXED_INFIX: usize = 3;

impl Enumeration {
    pub fn new(pfsa: &Pfsa, prune: f64, max_len: usize) -> Self {
        let a = pfsa.alphabet_size() as Symbol;
        let mut strings = Vec::new();
        let mut pruned = Vec::new();
        let mut stack = vec![(Vec::new(), pfsa.initial().to_vec())];
        while let Some((prefix, alpha)) = stack.pop() {
            let p: f64 = alpha.iter().zip(pfsa.final_weights()).map(|(x, r)| x * r).sum();
            if p > 0.0 {
                strings.push((prefix.clone(), p));
            }
            if prefix.len() >= max_len {
                continue;
            }
            for s in 0..a {
                let next = step(pfsa, &alpha, s);
                let mass: f64 = next.iter().sum();
                if mass == 0.0 {
                    continue;
                }
                let mut y = prefix.clone();
                y.push(s);
                if mass > prune {
                    stack.push((y, next));
                } else {
                    pruned.push((y, mass));
                }
            }
        }
        let index = strings.iter().cloned().collect();
        let mut prefixes: HashMap<Vec<Symbol>, f64> = HashMap::new();
        let mut infixes: HashMap<Vec<Symbol>, f64> = HashMap::new();
        for (y, p) in &strings {
            for t in 0..=y.len() {
                *prefixes.entry(y[..t].to_vec()).or_default() += p;
            }
            *infixes.entry(Vec::new()).or_default() += p * (y.len() + 1) as f64;
            for len in 1..=MAX_INDEXED_INFIX.min(y.len()) {
                for w in y.windows(len) {
                    *infixes.entry(w.to_vec()).or_default() += p;
                }
            }
        }
        Self {
            alphabet_size: pfsa.alphabet_size(),
            strings,
            index,
            prefixes,
            infixes,
            pruned,
        }
    }

    pub fn coverage(&self) -> f64 {
        self.strings.iter().map(|s| s.1).sum()
    }

    pub fn string_prob(&self, y: &[Symbol]) -> f64 {
        self.index.get(y).copied().unwrap_or(0.0)
    }

    /// Exact as long as no pruned prefix is shorter than `x`.
    pub fn prefix_prob(&self, x: &[Symbol]) -> f64 {
        let cut: f64 = self.pruned.iter().filter(|(y, _)| y.starts_with(x)).map(|p| p.1).sum();
        self.prefixes.get(x).copied().unwrap_or(0.0) + cut
    }

    /// Expected number of occurrences of `c` as a substring.
    pub fn infix_weight(&self, c: &[Symbol]) -> f64 {
        if c.len() <= MAX_INDEXED_INFIX {
            return self.infixes.get(c).copied().unwrap_or(0.0);
        }
        self.strings
            .iter()
            .map(|(y, p)| {
                let n = if c.is_empty() {
                    y.len() + 1
                } else {
                    y.windows(c.len()).filter(|w| *w == c).count()
                };
                p * n as f64
            })
            .sum()
    }

    pub fn global_entropy(&self) -> f64 {
        self.strings.iter().map(|(_, p)| -p * p.ln()).sum()
    }

    /// Outcome masses keyed by the preceding context, where `key` picks the
    /// context at each position or skips it.
    fn outcome_table(&self, key: impl Fn(&[Symbol], usize) -> Option<Vec<Symbol>>) -> HashMap<Vec<Symbol>, Vec<f64>> {
        let eos = self.alphabet_size;
        let mut table: HashMap<Vec<Symbol>, Vec<f64>> = HashMap::new();
        for (y, p) in &self.strings {
            for t in 0..=y.len() {
                if let Some(k) = key(y, t) {
                    let outcome = y.get(t).map_or(eos, |&s| s as usize);
                    table.entry(k).or_insert_with(|| vec![0.0; eos + 1])[outcome] += p;
                }
            }
        }
        table
    }

    fn weighted_entropy(table: &HashMap<Vec<Symbol>, Vec<f64>>) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for w in table.values() {
            let total: f64 = w.iter().sum();
            num += total * entropy(w);
            den += total;
        }
        num / den
    }

    pub fn next_symbol_entropy(&self) -> f64 {
        Self::weighted_entropy(&self.outcome_table(|y, t| Some(y[..t].to_vec())))
    }

    pub fn m_local_entropy(&self, m: usize) -> f64 {
        let k = m - 1;
        Self::weighted_entropy(&self.outcome_table(|y, t| (t >= k).then(|| y[t - k..t].to_vec())))
    }
}

/// Quantities accumulated by pushing probability mass forward one symbol at a
/// time, tracking `(state, last m-1 symbols)`, until the remaining mass is
/// negligible.
pub struct Series {
    /// `Σ_prefix p→(prefix)`.
    pub prefix_normalizer: f64,
    /// `Σ_prefix p→(prefix) H(next | prefix)`, valid for deterministic
    /// automata.
    pub entropy_sum: f64,
    /// Context of length `m-1` → outcome weights (EOS last).
    pub contexts: HashMap<Vec<Symbol>, Vec<f64>>,
}

impl Series {
    pub fn new(pfsa: &Pfsa, m: usize, tolerance: f64) -> Self {
        let a = pfsa.alphabet_size();
        let k = m - 1;
        let locals: Vec<Vec<f64>> = (0..pfsa.num_states()).map(|q| pfsa.local_distribution(q)).collect();
        let mut frontier: HashMap<(usize, Vec<Symbol>), f64> = pfsa
            .initial()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(q, &w)| ((q, Vec::new()), w))
            .collect();
        let mut out = Series {
            prefix_normalizer: 0.0,
            entropy_sum: 0.0,
            contexts: HashMap::new(),
        };
        for _ in 0..100_000 {
            let remaining: f64 = frontier.values().sum();
            if remaining < tolerance {
                break;
            }
            let mut next: HashMap<(usize, Vec<Symbol>), f64> = HashMap::new();
            for ((q, window), mass) in frontier {
                out.prefix_normalizer += mass;
                out.entropy_sum += mass * entropy(&locals[q]);
                if window.len() == k {
                    let w = out.contexts.entry(window.clone()).or_insert_with(|| vec![0.0; a + 1]);
                    for (o, p) in locals[q].iter().enumerate() {
                        w[o] += mass * p;
                    }
                }
                for arc in pfsa.arcs_from(q) {
                    let mut w = window.clone();
                    w.push(arc.symbol);
                    if w.len() > k {
                        w.remove(0);
                    }
                    *next.entry((arc.target, w)).or_insert(0.0) += mass * arc.weight;
                }
            }
            frontier = next;
        }
        out
    }

    pub fn mean_length(&self) -> f64 {
        self.prefix_normalizer - 1.0
    }

    pub fn next_symbol_entropy(&self) -> f64 {
        self.entropy_sum / self.prefix_normalizer
    }

    pub fn global_entropy(&self) -> f64 {
        self.entropy_sum
    }

    pub fn infix_weight(&self, c: &[Symbol]) -> f64 {
        self.contexts.get(c).map_or(0.0, |w| w.iter().sum())
    }

    pub fn m_local_entropy(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for w in self.contexts.values() {
            let total: f64 = w.iter().sum();
            num += total * entropy(w);
            den += total;
        }
        num / den
    }
}

/// The two-state reference automaton over `{a=0, b=1}`.
pub fn reference_automaton() -> Pfsa {
    Pfsa::from_json(
        r#"{"version":1,"alphabet_size":2,"num_states":2,"initial":[1.0,0.0],"final":[0.2,0.4],
            "transitions":[[0,0,0.5,0],[0,1,0.3,1],[1,0,0.6,0]]}"#,
    )
    .unwrap()
}

/// Tiny automata for exhaustive enumeration: `|Q| ≤ 4`, `|Σ| ≤ 3` and a short
/// mean length so that enumeration reaches all but 1e-9 of the mass
/// quickly.
pub fn tiny_configs() -> Vec<locent::generate::GenConfig> {
    (0..20u64)
        .map(|i| locent::generate::GenConfig {
            num_states: 1 + (i as usize % 4),
            alphabet_size: 2 + (i as usize / 4) % 2,
            target_mean_length: 0.1 + 0.05 * (i % 3) as f64,
            topology_seed: 1000 + i,
            weight_seed: 2000 + i,
            min_symbols_per_state: 2,
        })
        .collect()
}

/// Every string over the alphabet up to length `max_len`.
pub fn all_strings(alphabet_size: usize, max_len: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for y in &layer {
            for s in 0..alphabet_size as Symbol {
                let mut z: Vec<Symbol> = y.clone();
                z.push(s);
                next.push(z);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}
