//! Probabilistic finite-state automata.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Symbols are integers `0..alphabet_size`.
pub type Symbol = u32;

/// Normalization tolerance applied by [`Pfsa::validate`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Largest violation [`Pfsa::renormalize`] will repair.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// Current version of the JSON document written by [`Pfsa::to_json`].
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub source: usize,
    pub symbol: Symbol,
    pub weight: f64,
    pub target: usize,
}

/// A weighted automaton whose outgoing weights plus halting weight sum to one
/// at every state, and whose initial weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfsa {
    alphabet_size: usize,
    num_states: usize,
    transitions: Vec<Transition>,
    initial: Vec<f64>,
    final_weights: Vec<f64>,
    // transitions indices grouped by source state, in insertion order
    by_source: Vec<Vec<usize>>,
    deterministic: bool,
}

/// A normalization or range problem found by [`Pfsa::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The initial weights do not sum to one; `excess` is `sum - 1`.
    InitialSum { excess: f64 },
    /// Outgoing weights plus the halting weight of `state` do not sum to one.
    StateMass { state: usize, excess: f64 },
    /// A transition weight outside `[0, 1]`.
    TransitionWeight { index: usize, weight: f64 },
    InitialWeight { state: usize, weight: f64 },
    FinalWeight { state: usize, weight: f64 },
}

impl Violation {
    /// Size of the violation, used for the renormalization threshold.
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::InitialSum { excess } | Violation::StateMass { excess, .. } => excess.abs(),
            Violation::TransitionWeight { weight, .. }
            | Violation::InitialWeight { weight, .. }
            | Violation::FinalWeight { weight, .. } => {
                if weight < 0.0 {
                    -weight
                } else {
                    weight - 1.0
                }
            }
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InitialSum { excess } => write!(f, "initial weights sum to 1{excess:+.3e}"),
            Violation::StateMass { state, excess } => {
                write!(f, "state {state}: outgoing + final weight is 1{excess:+.3e}")
            }
            Violation::TransitionWeight { index, weight } => {
                write!(f, "transition {index}: weight {weight} outside [0, 1]")
            }
            Violation::InitialWeight { state, weight } => {
                write!(f, "state {state}: initial weight {weight} outside [0, 1]")
            }
            Violation::FinalWeight { state, weight } => {
                write!(f, "state {state}: final weight {weight} outside [0, 1]")
            }
        }
    }
}

/// On-disk representation. Transitions are `[source, symbol, weight, target]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PfsaDocument {
    pub version: u32,
    pub alphabet_size: usize,
    pub num_states: usize,
    pub initial: Vec<f64>,
    #[serde(rename = "final")]
    pub final_weights: Vec<f64>,
    pub transitions: Vec<(usize, Symbol, f64, usize)>,
}

impl Pfsa {
    /// Builds an automaton, checking only structure (vector lengths and index
    /// ranges). Normalization is checked separately by [`Pfsa::validate`].
    pub fn new(
        alphabet_size: usize,
        num_states: usize,
        initial: Vec<f64>,
        final_weights: Vec<f64>,
        transitions: Vec<Transition>,
    ) -> Result<Self> {
        if alphabet_size == 0 || num_states == 0 {
            return Err(Error::InvalidAutomaton(
                "alphabet and state set must be nonempty".into(),
            ));
        }
        if initial.len() != num_states || final_weights.len() != num_states {
            return Err(Error::InvalidAutomaton(format!(
                "expected {num_states} initial and final weights, got {} and {}",
                initial.len(),
                final_weights.len()
            )));
        }
        let mut by_source = vec![Vec::new(); num_states];
        let mut seen = std::collections::HashSet::new();
        let mut deterministic = true;
        for (i, t) in transitions.iter().enumerate() {
            for state in [t.source, t.target] {
                if state >= num_states {
                    return Err(Error::StateOutOfRange { state, num_states });
                }
            }
            if t.symbol as usize >= alphabet_size {
                return Err(Error::SymbolOutOfRange {
                    symbol: t.symbol,
                    alphabet_size,
                });
            }
            if !t.weight.is_finite() {
                return Err(Error::InvalidAutomaton(format!("transition {i} has weight {}", t.weight)));
            }
            if !seen.insert((t.source, t.symbol)) {
                deterministic = false;
            }
            by_source[t.source].push(i);
        }
        if initial.iter().chain(&final_weights).any(|w| !w.is_finite()) {
            return Err(Error::InvalidAutomaton("non-finite initial or final weight".into()));
        }
        Ok(Self {
            alphabet_size,
            num_states,
            transitions,
            initial,
            final_weights,
            by_source,
            deterministic,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn final_weights(&self) -> &[f64] {
        &self.final_weights
    }

    /// True iff every (state, symbol) pair has at most one outgoing transition.
    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn arcs_from(&self, state: usize) -> impl Iterator<Item = &Transition> + '_ {
        self.by_source[state].iter().map(move |&i| &self.transitions[i])
    }

    /// The distribution over `Σ ∪ {EOS}` at `state`: index `k < |Σ|` holds the
    /// total weight of `k`-labelled arcs and the last slot holds the halting
    /// weight.
    pub fn local_distribution(&self, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.alphabet_size + 1];
        for t in self.arcs_from(state) {
            out[t.symbol as usize] += t.weight;
        }
        out[self.alphabet_size] = self.final_weights[state];
        out
    }

    /// Transition function of a deterministic automaton.
    pub fn step(&self, state: usize, symbol: Symbol) -> Option<(usize, f64)> {
        self.arcs_from(state)
            .find(|t| t.symbol == symbol)
            .map(|t| (t.target, t.weight))
    }

    /// Every normalization and range violation; empty iff the automaton is a
    /// valid PFSA.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let init_sum: f64 = self.initial.iter().sum();
        if (init_sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            out.push(Violation::InitialSum {
                excess: init_sum - 1.0,
            });
        }
        for (state, &w) in self.initial.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                out.push(Violation::InitialWeight { state, weight: w });
            }
        }
        for (state, &w) in self.final_weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                out.push(Violation::FinalWeight { state, weight: w });
            }
        }
        for (index, t) in self.transitions.iter().enumerate() {
            if !(0.0..=1.0).contains(&t.weight) {
                out.push(Violation::TransitionWeight {
                    index,
                    weight: t.weight,
                });
            }
        }
        for state in 0..self.num_states {
            let mass: f64 =
                self.arcs_from(state).map(|t| t.weight).sum::<f64>() + self.final_weights[state];
            if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
                out.push(Violation::StateMass {
                    state,
                    excess: mass - 1.0,
                });
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            return Ok(());
        }
        let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
        Err(Error::InvalidAutomaton(msg.join("; ")))
    }

    /// Rescales initial weights and each state's row so they sum to one.
    /// Refuses (returning the original violations) if any violation exceeds
    /// [`RENORMALIZE_TOLERANCE`].
    pub fn renormalize(&self) -> Result<Pfsa> {
        let violations = self.validate();
        if let Some(v) = violations
            .iter()
            .find(|v| v.magnitude() > RENORMALIZE_TOLERANCE)
        {
            return Err(Error::InvalidAutomaton(format!(
                "violation too large to renormalize: {v}"
            )));
        }
        let clamp = |w: f64| w.clamp(0.0, 1.0);
        let init_sum: f64 = self.initial.iter().map(|&w| clamp(w)).sum();
        let initial = self.initial.iter().map(|&w| clamp(w) / init_sum).collect();
        let mut row = vec![0.0; self.num_states];
        for t in &self.transitions {
            row[t.source] += clamp(t.weight);
        }
        for (q, r) in row.iter_mut().enumerate() {
            *r += clamp(self.final_weights[q]);
        }
        let final_weights = self
            .final_weights
            .iter()
            .enumerate()
            .map(|(q, &w)| clamp(w) / row[q])
            .collect();
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition {
                weight: clamp(t.weight) / row[t.source],
                ..*t
            })
            .collect();
        Pfsa::new(
            self.alphabet_size,
            self.num_states,
            initial,
            final_weights,
            transitions,
        )
    }

    /// States reachable from a state with positive initial weight through
    /// positive-weight arcs.
    pub fn reachable_states(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut stack: Vec<usize> = (0..self.num_states)
            .filter(|&q| self.initial[q] > 0.0)
            .collect();
        for &q in &stack {
            seen[q] = true;
        }
        while let Some(q) = stack.pop() {
            for t in self.arcs_from(q) {
                if t.weight > 0.0 && !seen[t.target] {
                    seen[t.target] = true;
                    stack.push(t.target);
                }
            }
        }
        seen
    }

    pub fn to_document(&self) -> PfsaDocument {
        PfsaDocument {
            version: FORMAT_VERSION,
            alphabet_size: self.alphabet_size,
            num_states: self.num_states,
            initial: self.initial.clone(),
            final_weights: self.final_weights.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| (t.source, t.symbol, t.weight, t.target))
                .collect(),
        }
    }

    /// Structural conversion; does not validate normalization.
    pub fn from_document(doc: PfsaDocument) -> Result<Self> {
        if doc.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: doc.version,
                expected: FORMAT_VERSION,
            });
        }
        let transitions = doc
            .transitions
            .into_iter()
            .map(|(source, symbol, weight, target)| Transition {
                source,
                symbol,
                weight,
                target,
            })
            .collect();
        Pfsa::new(
            doc.alphabet_size,
            doc.num_states,
            doc.initial,
            doc.final_weights,
            transitions,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("PFSA document serializes")
    }

    /// Parses and validates. Weights round-trip bit-exactly.
    pub fn from_json(s: &str) -> Result<Self> {
        let pfsa = Self::from_document(serde_json::from_str(s)?)?;
        pfsa.ensure_valid()?;
        Ok(pfsa)
    }

    /// Loads a JSON document. With `renormalize`, small violations are
    /// repaired instead of rejected.
    pub fn load(path: &Path, renormalize: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let pfsa = Self::from_document(serde_json::from_str(&text)?)?;
        if renormalize {
            pfsa.renormalize()
        } else {
            pfsa.ensure_valid()?;
            Ok(pfsa)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, doc + "\n")?;
        Ok(())
    }

    /// SHA-256 of the compact JSON serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn arc(source: usize, symbol: Symbol, weight: f64, target: usize) -> Transition {
        Transition {
            source,
            symbol,
            weight,
            target,
        }
    }

    pub(crate) fn t1() -> Pfsa {
        Pfsa::new(
            2,
            2,
            vec![1.0, 0.0],
            vec![0.2, 0.4],
            vec![arc(0, 0, 0.5, 0), arc(0, 1, 0.3, 1), arc(1, 0, 0.6, 0)],
        )
        .unwrap()
    }

    #[test]
    fn t1_is_valid_and_deterministic() {
        let a = t1();
        assert!(a.validate().is_empty());
        assert!(a.is_deterministic());
    }

    #[test]
    fn final_weight_violation_reports_excess() {
        let a = t1();
        let b = Pfsa::new(2, 2, vec![1.0, 0.0], vec![0.3, 0.4], a.transitions().to_vec()).unwrap();
        let v = b.validate();
        assert_eq!(v.len(), 1);
        match v[0] {
            Violation::StateMass { state, excess } => {
                assert_eq!(state, 0);
                assert!((excess - 0.1).abs() < 1e-12);
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn initial_sum_violation() {
        let a = t1();
        let b = Pfsa::new(2, 2, vec![0.5, 0.4], vec![0.2, 0.4], a.transitions().to_vec()).unwrap();
        let v = b.validate();
        assert_eq!(v.len(), 1);
        match v[0] {
            Violation::InitialSum { excess } => assert!((excess + 0.1).abs() < 1e-12),
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nondeterminism_detected() {
        let a = Pfsa::new(
            1,
            2,
            vec![1.0, 0.0],
            vec![0.5, 1.0],
            vec![arc(0, 0, 0.25, 0), arc(0, 0, 0.25, 1)],
        )
        .unwrap();
        assert!(!a.is_deterministic());
        assert!(a.validate().is_empty());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            Pfsa::new(2, 1, vec![1.0], vec![1.0], vec![arc(0, 2, 0.0, 0)]),
            Err(Error::SymbolOutOfRange { .. })
        ));
        assert!(matches!(
            Pfsa::new(2, 1, vec![1.0], vec![1.0], vec![arc(0, 0, 0.0, 1)]),
            Err(Error::StateOutOfRange { .. })
        ));
        assert!(Pfsa::new(2, 2, vec![1.0], vec![1.0, 1.0], vec![]).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let a = t1();
        let b = Pfsa::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn loader_rejects_invalid_and_renormalizes_small_errors() {
        let mut doc = t1().to_document();
        doc.final_weights[0] = 0.2 + 5e-7;
        let json = serde_json::to_string(&doc).unwrap();
        assert!(Pfsa::from_json(&json).is_err());
        let fixed = Pfsa::from_document(doc.clone()).unwrap().renormalize().unwrap();
        assert!(fixed.validate().is_empty());
        doc.final_weights[0] = 0.3;
        assert!(Pfsa::from_document(doc).unwrap().renormalize().is_err());
    }

    #[test]
    fn version_is_checked() {
        let mut doc = t1().to_document();
        doc.version = 9;
        assert!(matches!(
            Pfsa::from_document(doc),
            Err(Error::UnsupportedVersion { found: 9, .. })
        ));
    }

    #[test]
    fn document_field_names() {
        let v: serde_json::Value = serde_json::from_str(&t1().to_json()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["final"][1], 0.4);
        assert_eq!(v["transitions"][1], serde_json::json!([0, 1, 0.3, 1]));
    }
}
