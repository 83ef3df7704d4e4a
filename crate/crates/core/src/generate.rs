//! Random deterministic PFSAs.
//!
//! [`random_dpfsa`] draws a topology from one SplitMix64 stream and arc
//! weights from another, following the draw order below exactly so that a
//! `(config, seeds)` pair always yields the same automaton:
//!
//! 1. initial state: one uniform choice over `Q` (topology stream);
//! 2. outgoing symbol sets, see [`generate_outgoing_symbols`] (topology);
//! 3. for each state `q`, for each symbol `y` in ascending order: a target,
//!    taken from the pool of not-yet-targeted states while it is nonempty and
//!    uniformly from `Q` afterwards (topology), then `w ~ Exp(0.1)` (weight
//!    stream). The raw arc weight is `w·[y ∈ out(q)] + 0.001`;
//! 4. per state, with `t` the raw outgoing total, the halting weight is
//!    `t/μ` and the row is divided by `t + t/μ`.
//!
//! Step 4 makes every state halt with probability exactly `1/(μ+1)`, so the
//! expected length is `μ` whatever the topology.
//!
//! Uniform choices over a set index into the set's elements in ascending
//! order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pfsa::{Pfsa, Symbol, Transition};
use crate::rng::SplitMix64;

/// Rate of the exponential distribution for raw arc weights.
pub const WEIGHT_RATE: f64 = 0.1;
/// Added to every raw arc weight, including symbols outside a state's
/// outgoing set.
pub const WEIGHT_FLOOR: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_states: usize,
    pub alphabet_size: usize,
    pub target_mean_length: f64,
    pub topology_seed: u64,
    pub weight_seed: u64,
    pub min_symbols_per_state: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_states: 8,
            alphabet_size: 32,
            target_mean_length: 20.0,
            topology_seed: 0,
            weight_seed: 0,
            min_symbols_per_state: 2,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<()> {
        if self.num_states < 1 {
            return Err(Error::InvalidConfig("num_states must be at least 1".into()));
        }
        if self.alphabet_size < 2 {
            return Err(Error::InvalidConfig("alphabet_size must be at least 2".into()));
        }
        if !(self.target_mean_length > 0.0 && self.target_mean_length.is_finite()) {
            return Err(Error::InvalidConfig(
                "target_mean_length must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The set of "preferred" outgoing symbols of each state, drawn from a fresh
/// topology stream.
pub fn generate_outgoing_symbols(config: &GenConfig) -> Result<Vec<BTreeSet<Symbol>>> {
    config.check()?;
    let mut rng = SplitMix64::new(config.topology_seed);
    Ok(outgoing_symbols(
        &mut rng,
        config.num_states,
        config.alphabet_size,
        config.min_symbols_per_state,
    ))
}

fn outgoing_symbols(
    rng: &mut SplitMix64,
    num_states: usize,
    alphabet_size: usize,
    min_symbols: usize,
) -> Vec<BTreeSet<Symbol>> {
    let states: Vec<usize> = (0..num_states).collect();
    let symbols: Vec<Symbol> = (0..alphabet_size as Symbol).collect();
    let mut sets = vec![BTreeSet::new(); num_states];

    // at least min(s_min, |Σ|) symbols per state
    for set in sets.iter_mut() {
        set.extend(rng.choose_distinct(&symbols, min_symbols.min(alphabet_size)));
    }
    // every symbol somewhere
    for &y in &symbols {
        let q = rng.choose(&states);
        sets[q].insert(y);
    }
    // extra additions
    let hi = ((alphabet_size / 2) as i64 - min_symbols as i64).max(1);
    let extra: i64 = (0..num_states).map(|_| rng.integers(0, hi)).sum();
    for _ in 0..extra {
        let y = rng.choose(&symbols);
        let q = rng.choose(&states);
        sets[q].insert(y);
    }
    sets
}

/// A random deterministic PFSA in which every state halts with probability
/// `1/(μ+1)`.
pub fn random_dpfsa(config: &GenConfig) -> Result<Pfsa> {
    config.check()?;
    let n = config.num_states;
    let a = config.alphabet_size;
    let mut topology = SplitMix64::new(config.topology_seed);
    let mut weights = SplitMix64::new(config.weight_seed);

    let states: Vec<usize> = (0..n).collect();
    let initial_state = topology.choose(&states);
    let preferred = outgoing_symbols(&mut topology, n, a, config.min_symbols_per_state);

    let mut unused = states.clone();
    let mut raw = Vec::with_capacity(n * a);
    for (q, preferred_here) in preferred.iter().enumerate() {
        for y in 0..a as Symbol {
            let target = if unused.is_empty() {
                topology.choose(&states)
            } else {
                let i = topology.below(unused.len() as u64) as usize;
                unused.remove(i)
            };
            let w = weights.exponential(WEIGHT_RATE);
            let indicator = if preferred_here.contains(&y) { 1.0 } else { 0.0 };
            raw.push(Transition {
                source: q,
                symbol: y,
                weight: w * indicator + WEIGHT_FLOOR,
                target,
            });
        }
    }

    let mut final_weights = vec![0.0; n];
    for q in 0..n {
        let row = &mut raw[q * a..(q + 1) * a];
        let t: f64 = row.iter().map(|arc| arc.weight).sum();
        let halt = t / config.target_mean_length;
        let s = t + halt;
        for arc in row.iter_mut() {
            arc.weight /= s;
        }
        final_weights[q] = halt / s;
    }

    let mut initial = vec![0.0; n];
    initial[initial_state] = 1.0;
    Pfsa::new(a, n, initial, final_weights, raw)
}

/// A strongly local automaton: the state is the last emitted symbol, and from
/// state `s` the next symbol is `succ(s)` with probability `successor_prob`
/// (scaled by the continuation probability), any other symbol otherwise.
/// `succ` is a random cyclic permutation of the alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCycleConfig {
    pub alphabet_size: usize,
    pub successor_prob: f64,
    pub target_mean_length: f64,
    pub seed: u64,
}

pub fn local_cycle_dpfsa(config: &LocalCycleConfig) -> Result<Pfsa> {
    let a = config.alphabet_size;
    if a < 2 || !(0.0..=1.0).contains(&config.successor_prob) || !(config.target_mean_length > 0.0)
    {
        return Err(Error::InvalidConfig(format!("{config:?}")));
    }
    let mut rng = SplitMix64::new(config.seed);
    let order = rng.permutation(a);
    let mut succ = vec![0usize; a];
    for i in 0..a {
        succ[order[i]] = order[(i + 1) % a];
    }
    let halt = 1.0 / (config.target_mean_length + 1.0);
    let go = 1.0 - halt;
    let other = (1.0 - config.successor_prob) / (a - 1) as f64;
    let mut transitions = Vec::with_capacity(a * a);
    for (s, &next) in succ.iter().enumerate() {
        for y in 0..a {
            let p = if y == next { config.successor_prob } else { other };
            transitions.push(Transition {
                source: s,
                symbol: y as Symbol,
                weight: go * p,
                target: y,
            });
        }
    }
    let mut initial = vec![0.0; a];
    initial[rng.below(a as u64) as usize] = 1.0;
    Pfsa::new(a, a, initial, vec![halt; a], transitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::TransitionMatrices;

    fn config(n: usize, a: usize, ts: u64, ws: u64) -> GenConfig {
        GenConfig {
            num_states: n,
            alphabet_size: a,
            topology_seed: ts,
            weight_seed: ws,
            ..Default::default()
        }
    }

    #[test]
    fn forced_coverage_small_cases() {
        let sets = generate_outgoing_symbols(&config(1, 2, 4, 0)).unwrap();
        assert_eq!(sets, vec![BTreeSet::from([0, 1])]);
        let sets = generate_outgoing_symbols(&config(2, 2, 9, 0)).unwrap();
        assert!(sets.iter().all(|s| s.len() == 2));
    }

    #[test]
    fn outgoing_symbols_postconditions() {
        for seed in 0..20 {
            let sets = generate_outgoing_symbols(&config(8, 32, seed, 0)).unwrap();
            let mut covered: BTreeSet<Symbol> = BTreeSet::new();
            for s in &sets {
                assert!((2..=32).contains(&s.len()));
                covered.extend(s);
            }
            assert_eq!(covered.len(), 32);
        }
    }

    #[test]
    fn generated_automata_are_valid_and_deterministic() {
        for seed in 0..10 {
            for (n, a) in [(1, 2), (3, 2), (8, 32), (16, 48)] {
                let pfsa = random_dpfsa(&config(n, a, seed, seed + 100)).unwrap();
                assert!(pfsa.validate().is_empty());
                assert!(pfsa.is_deterministic());
                assert_eq!(pfsa.transitions().len(), n * a);
                for q in 0..n {
                    assert!((pfsa.final_weights()[q] - 1.0 / 21.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mean_length_equals_target() {
        for (i, mu) in [0.5, 3.0, 20.0, 55.5].into_iter().enumerate() {
            let cfg = GenConfig {
                target_mean_length: mu,
                ..config(8, 32, i as u64, 7)
            };
            let m = TransitionMatrices::new(&random_dpfsa(&cfg).unwrap()).unwrap();
            assert!((m.mean_length() - mu).abs() < 1e-6, "{mu}: {}", m.mean_length());
        }
    }

    #[test]
    fn same_seeds_same_automaton() {
        let a = random_dpfsa(&config(8, 32, 3, 4)).unwrap();
        let b = random_dpfsa(&config(8, 32, 3, 4)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn topology_seed_changes_targets() {
        let base = random_dpfsa(&config(8, 32, 0, 1)).unwrap();
        for ts in 1..=5 {
            let other = random_dpfsa(&config(8, 32, ts, 1)).unwrap();
            let targets = |p: &Pfsa| p.transitions().iter().map(|t| t.target).collect::<Vec<_>>();
            assert_ne!(targets(&base), targets(&other));
        }
    }

    #[test]
    fn all_states_reachable_at_experiment_scale() {
        for seed in 0..50 {
            for (n, a) in [(8, 32), (16, 48)] {
                let pfsa = random_dpfsa(&config(n, a, seed, seed)).unwrap();
                assert!(pfsa.reachable_states().iter().all(|&r| r));
            }
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(random_dpfsa(&config(0, 4, 0, 0)).is_err());
        assert!(random_dpfsa(&config(2, 1, 0, 0)).is_err());
        let bad = GenConfig {
            target_mean_length: 0.0,
            ..Default::default()
        };
        assert!(random_dpfsa(&bad).is_err());
    }

    #[test]
    fn local_cycle_is_valid() {
        let p = local_cycle_dpfsa(&LocalCycleConfig {
            alphabet_size: 6,
            successor_prob: 0.9,
            target_mean_length: 30.0,
            seed: 1,
        })
        .unwrap();
        assert!(p.validate().is_empty());
        assert!(p.is_deterministic());
        let m = TransitionMatrices::new(&p).unwrap();
        assert!((m.mean_length() - 30.0).abs() < 1e-6);
    }
}
