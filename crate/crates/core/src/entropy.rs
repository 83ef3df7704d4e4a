//! Exact entropies of a PFSA: next-symbol entropy, global (string) entropy and
//! m-local entropy.
//!
//! All arithmetic happens in nats; [`LogBase`] converts on the way out.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::TransitionMatrices;
use crate::pfsa::{Pfsa, Symbol};

/// Default cap on the number of contexts `m_local_entropy` will enumerate.
pub const DEFAULT_CONTEXT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    pub fn from_nats(self, x: f64) -> f64 {
        match self {
            LogBase::Nats => x,
            LogBase::Bits => x / std::f64::consts::LN_2,
        }
    }

    pub fn to_nats(self, x: f64) -> f64 {
        match self {
            LogBase::Nats => x,
            LogBase::Bits => x * std::f64::consts::LN_2,
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" | "e" => Ok(LogBase::Nats),
            "bits" | "2" => Ok(LogBase::Bits),
            _ => Err(Error::InvalidConfig(format!(
                "unknown log base {s:?} (expected bits or nats)"
            ))),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        })
    }
}

/// Shannon entropy in nats of a (possibly unnormalized) nonnegative vector,
/// after normalizing it.
pub fn entropy_nats(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    total.ln() - weighted_log_sum(weights) / total
}

/// `Σ x ln x` over the positive entries.
fn weighted_log_sum(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Context order; the context length is `m - 1`. `None` for
    /// whole-prefix quantities (next-symbol and global entropy).
    pub m: Option<usize>,
    pub value: f64,
    pub log_base: LogBase,
    pub contexts_evaluated: u128,
    pub contexts_skipped_zero_mass: u128,
}

impl EntropyReport {
    pub fn in_base(&self, base: LogBase) -> EntropyReport {
        EntropyReport {
            value: base.from_nats(self.log_base.to_nats(self.value)),
            log_base: base,
            ..self.clone()
        }
    }
}

/// Prefix-weighted average of next-symbol uncertainty. Only deterministic
/// automata are supported: there, the prefixes reaching a state share its
/// local distribution, so the sum over prefixes groups by state.
pub fn next_symbol_entropy(pfsa: &Pfsa, mats: &TransitionMatrices) -> Result<EntropyReport> {
    if !pfsa.is_deterministic() {
        return Err(Error::NondeterministicUnsupported);
    }
    let visits = mats.prefix_vector();
    let mut total = 0.0;
    let mut evaluated = 0;
    for q in 0..pfsa.num_states() {
        if visits[q] > 0.0 {
            total += visits[q] * entropy_nats(&pfsa.local_distribution(q));
            evaluated += 1;
        }
    }
    Ok(EntropyReport {
        m: None,
        value: total / mats.prefix_normalizer(),
        log_base: LogBase::Nats,
        contexts_evaluated: evaluated,
        contexts_skipped_zero_mass: (pfsa.num_states() as u128) - evaluated,
    })
}

/// Entropy of the distribution over whole strings: `(μ + 1)` times the
/// next-symbol entropy.
pub fn global_entropy(pfsa: &Pfsa, mats: &TransitionMatrices) -> Result<EntropyReport> {
    let next = next_symbol_entropy(pfsa, mats)?;
    Ok(EntropyReport {
        value: mats.prefix_normalizer() * next.value,
        ..next
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    // Σ_c w(c) H(c) in nats
    weighted_entropy: f64,
    weight: f64,
    evaluated: u128,
    skipped: u128,
}

impl Accumulator {
    fn merge(mut self, other: Accumulator) -> Accumulator {
        self.weighted_entropy += other.weighted_entropy;
        self.weight += other.weight;
        self.evaluated += other.evaluated;
        self.skipped += other.skipped;
        self
    }
}

struct ContextWalker<'a> {
    mats: &'a TransitionMatrices,
    // nonzero entries of each state's local distribution, EOS at index |Σ|
    local: Vec<Vec<(usize, f64)>>,
    alphabet_size: usize,
}

impl ContextWalker<'_> {
    fn subtree_size(&self, depth: usize) -> u128 {
        (self.alphabet_size as u128).pow(depth as u32)
    }

    fn leaf(&self, u: &[f64], scratch: &mut [f64], acc: &mut Accumulator) {
        scratch.iter_mut().for_each(|x| *x = 0.0);
        for (q, &uq) in u.iter().enumerate() {
            if uq != 0.0 {
                for &(k, p) in &self.local[q] {
                    scratch[k] += uq * p;
                }
            }
        }
        let w: f64 = scratch.iter().sum();
        if w > 0.0 {
            acc.weighted_entropy += w * w.ln() - weighted_log_sum(scratch);
            acc.weight += w;
            acc.evaluated += 1;
        } else {
            acc.skipped += 1;
        }
    }

    /// Visits every context extending the one that produced `u`, with
    /// `depth` symbols still to append.
    fn walk(&self, u: &[f64], depth: usize, buffers: &mut [Vec<f64>], scratch: &mut [f64], acc: &mut Accumulator) {
        if u.iter().all(|&x| x == 0.0) {
            acc.skipped += self.subtree_size(depth);
            return;
        }
        if depth == 0 {
            self.leaf(u, scratch, acc);
            return;
        }
        let (child, rest) = buffers.split_first_mut().expect("one buffer per level");
        for y in 0..self.alphabet_size {
            self.mats.advance(u, y as Symbol, child);
            self.walk(child, depth - 1, rest, scratch, acc);
        }
    }
}

/// Exact m-local entropy: the next-symbol entropy given only the preceding
/// `m - 1` symbols, averaged over contexts weighted by their infix weight.
///
/// Contexts are enumerated depth-first, carrying the row vector
/// `λᵀ K M^(c)` down the tree so each context costs one sparse vector-matrix
/// step. Subtrees whose vector vanishes are skipped wholesale. The top level
/// runs in parallel; partial sums are combined in symbol order so the result
/// does not depend on the thread count.
pub fn m_local_entropy(
    pfsa: &Pfsa,
    mats: &TransitionMatrices,
    m: usize,
    budget: u128,
) -> Result<EntropyReport> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let depth = m - 1;
    let a = pfsa.alphabet_size();
    let required = (a as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let walker = ContextWalker {
        mats,
        local: (0..pfsa.num_states())
            .map(|q| {
                pfsa.local_distribution(q)
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, p)| p > 0.0)
                    .collect()
            })
            .collect(),
        alphabet_size: a,
    };
    let n = pfsa.num_states();
    let root: Vec<f64> = mats.prefix_vector().iter().copied().collect();

    let acc = if depth == 0 {
        let mut acc = Accumulator::default();
        walker.leaf(&root, &mut vec![0.0; a + 1], &mut acc);
        acc
    } else {
        let partials: Vec<Accumulator> = (0..a)
            .into_par_iter()
            .map(|y| {
                let mut acc = Accumulator::default();
                let mut first = vec![0.0; n];
                mats.advance(&root, y as Symbol, &mut first);
                let mut buffers = vec![vec![0.0; n]; depth - 1];
                let mut scratch = vec![0.0; a + 1];
                walker.walk(&first, depth - 1, &mut buffers, &mut scratch, &mut acc);
                acc
            })
            .collect();
        partials
            .into_iter()
            .fold(Accumulator::default(), Accumulator::merge)
    };

    if !(acc.weight > 0.0) {
        return Err(Error::ZeroTotalMass {
            context_length: depth,
        });
    }
    Ok(EntropyReport {
        m: Some(m),
        value: (acc.weighted_entropy / acc.weight).max(0.0),
        log_base: LogBase::Nats,
        contexts_evaluated: acc.evaluated,
        contexts_skipped_zero_mass: acc.skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfsa::tests::{arc, t1};

    fn mats(a: &Pfsa) -> TransitionMatrices {
        TransitionMatrices::new(a).unwrap()
    }

    #[test]
    fn log_base_parsing_and_conversion() {
        assert_eq!("bits".parse::<LogBase>().unwrap(), LogBase::Bits);
        assert_eq!("e".parse::<LogBase>().unwrap(), LogBase::Nats);
        assert!("ten".parse::<LogBase>().is_err());
        assert!((LogBase::Bits.from_nats(std::f64::consts::LN_2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t1_next_symbol_and_global_entropy() {
        let a = t1();
        let m = mats(&a);
        let next = next_symbol_entropy(&a, &m).unwrap();
        assert!((next.value - 0.947351).abs() < 1e-6, "{}", next.value);
        let global = global_entropy(&a, &m).unwrap();
        assert!((global.value - 3.848614).abs() < 1e-6, "{}", global.value);
        assert!((global.value - 4.0625 * next.value).abs() < 1e-12);
    }

    #[test]
    fn degenerate_entropies() {
        let single = Pfsa::new(1, 1, vec![1.0], vec![1.0], vec![]).unwrap();
        let m = mats(&single);
        assert_eq!(next_symbol_entropy(&single, &m).unwrap().value, 0.0);
        assert_eq!(global_entropy(&single, &m).unwrap().value, 0.0);

        let uniform = Pfsa::new(
            2,
            1,
            vec![1.0],
            vec![0.5],
            vec![arc(0, 0, 0.25, 0), arc(0, 1, 0.25, 0)],
        )
        .unwrap();
        let bits = next_symbol_entropy(&uniform, &mats(&uniform))
            .unwrap()
            .in_base(LogBase::Bits);
        assert!((bits.value - 1.5).abs() < 1e-12);

        let geometric = Pfsa::new(1, 1, vec![1.0], vec![0.5], vec![arc(0, 0, 0.5, 0)]).unwrap();
        let g = global_entropy(&geometric, &mats(&geometric)).unwrap();
        assert!((g.value - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn nondeterministic_next_symbol_entropy_is_rejected() {
        let a = Pfsa::new(
            1,
            2,
            vec![1.0, 0.0],
            vec![0.5, 1.0],
            vec![arc(0, 0, 0.25, 0), arc(0, 0, 0.25, 1)],
        )
        .unwrap();
        assert!(matches!(
            next_symbol_entropy(&a, &mats(&a)),
            Err(Error::NondeterministicUnsupported)
        ));
        // m-local entropy does not need determinism
        assert!(m_local_entropy(&a, &mats(&a), 2, DEFAULT_CONTEXT_BUDGET).is_ok());
    }

    #[test]
    fn t1_two_local_entropy() {
        let a = t1();
        let r = m_local_entropy(&a, &mats(&a), 2, DEFAULT_CONTEXT_BUDGET).unwrap();
        assert!((r.value - 0.920477).abs() < 1e-6, "{}", r.value);
        assert_eq!(r.contexts_evaluated + r.contexts_skipped_zero_mass, 2);
        // by hand: weights 2.125 and 0.9375 over the two length-1 contexts
        let h0 = entropy_nats(&[0.5, 0.3, 0.2]);
        let h1 = entropy_nats(&[0.6, 0.0, 0.4]);
        let by_hand = (2.125 * h0 + 0.9375 * h1) / 3.0625;
        assert!((r.value - by_hand).abs() < 1e-12);
    }

    #[test]
    fn context_counts_cover_the_alphabet_power() {
        let a = t1();
        let m = mats(&a);
        for order in 1..=6 {
            let r = m_local_entropy(&a, &m, order, DEFAULT_CONTEXT_BUDGET).unwrap();
            assert_eq!(
                r.contexts_evaluated + r.contexts_skipped_zero_mass,
                2u128.pow(order as u32 - 1)
            );
        }
        // "bb" never occurs, so order 3 skips every context containing it
        let r = m_local_entropy(&a, &m, 3, DEFAULT_CONTEXT_BUDGET).unwrap();
        assert_eq!(r.contexts_skipped_zero_mass, 1);
    }

    #[test]
    fn order_one_uses_the_infix_weighted_mixture() {
        let a = t1();
        let m = mats(&a);
        let r = m_local_entropy(&a, &m, 1, DEFAULT_CONTEXT_BUDGET).unwrap();
        let v = m.prefix_vector();
        let mix: Vec<f64> = (0..3)
            .map(|k| v[0] * a.local_distribution(0)[k] + v[1] * a.local_distribution(1)[k])
            .collect();
        assert!((r.value - entropy_nats(&mix)).abs() < 1e-12);
    }

    #[test]
    fn single_string_language_has_zero_local_entropy() {
        // generates "0 1 2" with probability one
        let a = Pfsa::new(
            3,
            4,
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![arc(0, 0, 1.0, 1), arc(1, 1, 1.0, 2), arc(2, 2, 1.0, 3)],
        )
        .unwrap();
        let m = mats(&a);
        for order in 1..=4 {
            let r = m_local_entropy(&a, &m, order, DEFAULT_CONTEXT_BUDGET).unwrap();
            if order == 1 {
                // the unconditioned mixture is not degenerate
                assert!(r.value > 0.0);
            } else {
                assert!(r.value.abs() < 1e-12, "m={order}: {}", r.value);
            }
        }
        // contexts of length 4 never occur
        assert!(matches!(
            m_local_entropy(&a, &m, 5, DEFAULT_CONTEXT_BUDGET),
            Err(Error::ZeroTotalMass { .. })
        ));
    }

    #[test]
    fn budget_and_order_errors() {
        let a = t1();
        let m = mats(&a);
        assert!(matches!(
            m_local_entropy(&a, &m, 5, 8),
            Err(Error::BudgetExceeded { required: 16, budget: 8 })
        ));
        assert!(m_local_entropy(&a, &m, 0, 8).is_err());
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let a = crate::generate::random_dpfsa(&crate::generate::GenConfig {
            num_states: 6,
            alphabet_size: 7,
            ..Default::default()
        })
        .unwrap();
        let m = mats(&a);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| m_local_entropy(&a, &m, 4, DEFAULT_CONTEXT_BUDGET).unwrap())
        };
        assert_eq!(run(1).value.to_bits(), run(5).value.to_bits());
    }
}
