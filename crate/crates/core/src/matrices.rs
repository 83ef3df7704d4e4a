//! Dense matrix view of a PFSA and the closed-form string quantities built on
//! it: string, prefix and infix probabilities, next-symbol distributions and
//! the expected string length.
//!
//! With `M` the state-to-state transition matrix, `M^(y)` its restriction to
//! arcs labelled `y`, `E` the state-by-symbol emission matrix and
//! `K = (I - M)^{-1}` the Kleene closure:
//!
//! ```text
//! p(y)        = λᵀ M^(y) ρ
//! prefix(y)   = λᵀ M^(y) K ρ
//! infix(c)    = λᵀ K M^(c) K ρ
//! next | y    = (λᵀ M^(y) E, λᵀ M^(y) ρ) / prefix(y)
//! next | c    = (λᵀ K M^(c) E, λᵀ K M^(c) ρ) / infix(c)
//! ```
//!
//! For a normalized automaton with finite expected length `Kρ = 𝟙`, so
//! prefix and infix quantities reduce to sums of a row vector.

use nalgebra::{DMatrix, RowDVector};

use crate::entropy::LogBase;
use crate::error::{Error, Result};
use crate::pfsa::{Pfsa, Symbol};

/// Largest tolerated `‖(I - M)K - I‖_max` after the solve.
pub const KLEENE_RESIDUAL_TOLERANCE: f64 = 1e-6;

/// All matrices derived from a PFSA. Immutable once built.
#[derive(Debug, Clone)]
pub struct TransitionMatrices {
    alphabet_size: usize,
    num_states: usize,
    initial: RowDVector<f64>,
    final_weights: Vec<f64>,
    transition: DMatrix<f64>,
    per_symbol: Vec<DMatrix<f64>>,
    emission: DMatrix<f64>,
    star: DMatrix<f64>,
    prefix_vector: RowDVector<f64>,
    // sparse copy of the arcs grouped by symbol: (source, target, weight)
    arcs_by_symbol: Vec<Vec<(usize, usize, f64)>>,
}

impl TransitionMatrices {
    /// Builds every matrix and solves `(I - M) K = I` by LU decomposition.
    pub fn new(pfsa: &Pfsa) -> Result<Self> {
        let n = pfsa.num_states();
        let a = pfsa.alphabet_size();
        let mut per_symbol = vec![DMatrix::zeros(n, n); a];
        let mut emission = DMatrix::zeros(n, a);
        let mut arcs_by_symbol = vec![Vec::new(); a];
        for t in pfsa.transitions() {
            per_symbol[t.symbol as usize][(t.source, t.target)] += t.weight;
            emission[(t.source, t.symbol as usize)] += t.weight;
            arcs_by_symbol[t.symbol as usize].push((t.source, t.target, t.weight));
        }
        let mut transition = DMatrix::zeros(n, n);
        for m in &per_symbol {
            transition += m;
        }
        let identity = DMatrix::<f64>::identity(n, n);
        let system = &identity - &transition;
        let star = system
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularSystem {
                residual: f64::INFINITY,
            })?;
        let residual = (&system * &star - &identity).amax();
        // A nonnegative M has a nonnegative inverse of I - M iff its spectral
        // radius is below one; negative entries mean the series diverges.
        let min_entry = star.min();
        if !(residual <= KLEENE_RESIDUAL_TOLERANCE) || min_entry < -KLEENE_RESIDUAL_TOLERANCE {
            return Err(Error::SingularSystem { residual });
        }
        let initial = RowDVector::from_row_slice(pfsa.initial());
        let prefix_vector = &initial * &star;
        Ok(Self {
            alphabet_size: a,
            num_states: n,
            initial,
            final_weights: pfsa.final_weights().to_vec(),
            transition,
            per_symbol,
            emission,
            star,
            prefix_vector,
            arcs_by_symbol,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// `M`, the sum of the per-symbol matrices.
    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn per_symbol(&self, symbol: Symbol) -> &DMatrix<f64> {
        &self.per_symbol[symbol as usize]
    }

    pub fn emission(&self) -> &DMatrix<f64> {
        &self.emission
    }

    /// `K = (I - M)^{-1}`.
    pub fn star(&self) -> &DMatrix<f64> {
        &self.star
    }

    /// `λᵀK`, the expected number of visits to each state.
    pub fn prefix_vector(&self) -> &RowDVector<f64> {
        &self.prefix_vector
    }

    pub fn final_weights(&self) -> &[f64] {
        &self.final_weights
    }

    fn check(&self, y: &[Symbol]) -> Result<()> {
        match y.iter().find(|&&s| s as usize >= self.alphabet_size) {
            Some(&symbol) => Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: self.alphabet_size,
            }),
            None => Ok(()),
        }
    }

    /// `v M^(y)` computed arc by arc.
    pub(crate) fn advance(&self, v: &[f64], symbol: Symbol, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(src, dst, w) in &self.arcs_by_symbol[symbol as usize] {
            out[dst] += v[src] * w;
        }
    }

    fn forward(&self, start: &RowDVector<f64>, y: &[Symbol]) -> Vec<f64> {
        let mut v: Vec<f64> = start.iter().copied().collect();
        let mut next = vec![0.0; self.num_states];
        for &s in y {
            self.advance(&v, s, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        v
    }

    fn dot_final(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.final_weights).map(|(a, b)| a * b).sum()
    }

    fn dot_star_final(&self, v: &[f64]) -> f64 {
        let row = RowDVector::from_row_slice(v) * &self.star;
        self.dot_final(row.as_slice())
    }

    /// Probability of exactly `y`.
    pub fn string_prob(&self, y: &[Symbol]) -> Result<f64> {
        self.check(y)?;
        Ok(self.dot_final(&self.forward(&self.initial, y)))
    }

    /// Natural log of [`Self::string_prob`], computed with a rescaled forward
    /// pass so long strings do not underflow.
    pub fn string_log_prob(&self, y: &[Symbol]) -> Result<f64> {
        self.check(y)?;
        let mut v: Vec<f64> = self.initial.iter().copied().collect();
        let mut next = vec![0.0; self.num_states];
        let mut log_scale = 0.0;
        for &s in y {
            self.advance(&v, s, &mut next);
            let total: f64 = next.iter().sum();
            if !(total > 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            next.iter_mut().for_each(|x| *x /= total);
            log_scale += total.ln();
            std::mem::swap(&mut v, &mut next);
        }
        Ok(log_scale + self.dot_final(&v).ln())
    }

    /// Probability that a sampled string begins with `y`.
    pub fn prefix_prob(&self, y: &[Symbol]) -> Result<f64> {
        self.check(y)?;
        Ok(self.dot_star_final(&self.forward(&self.initial, y)))
    }

    /// Expected number of occurrences of `c` as a substring. Not a
    /// probability: it can exceed one.
    pub fn infix_weight(&self, c: &[Symbol]) -> Result<f64> {
        self.check(c)?;
        Ok(self.dot_star_final(&self.forward(&self.prefix_vector, c)))
    }

    /// `Z→ = λᵀKKρ`, the sum of all prefix probabilities.
    pub fn prefix_normalizer(&self) -> f64 {
        self.dot_star_final(self.prefix_vector.as_slice())
    }

    /// Expected string length, through `μ + 1 = Z→`.
    pub fn mean_length(&self) -> f64 {
        self.prefix_normalizer() - 1.0
    }

    fn distribution_from(&self, v: &[f64], mass: f64) -> NextSymbolDistribution {
        let row = RowDVector::from_row_slice(v) * &self.emission;
        let mut probs: Vec<f64> = row.iter().map(|x| x / mass).collect();
        probs.push(self.dot_final(v) / mass);
        NextSymbolDistribution { probs }
    }

    /// Distribution of the symbol (or EOS) following the prefix `y`.
    pub fn next_symbol_given_prefix(&self, y: &[Symbol]) -> Result<NextSymbolDistribution> {
        self.check(y)?;
        let v = self.forward(&self.initial, y);
        let mass = self.dot_star_final(&v);
        if !(mass > 0.0) {
            return Err(Error::ZeroMassPrefix);
        }
        Ok(self.distribution_from(&v, mass))
    }

    /// Distribution of the symbol (or EOS) following an occurrence of `c`
    /// anywhere in a string.
    pub fn next_symbol_given_infix(&self, c: &[Symbol]) -> Result<NextSymbolDistribution> {
        self.check(c)?;
        let u = self.forward(&self.prefix_vector, c);
        let mass = self.dot_star_final(&u);
        if !(mass > 0.0) {
            return Err(Error::ZeroMassInfix);
        }
        Ok(self.distribution_from(&u, mass))
    }
}

/// A distribution over `Σ ∪ {EOS}`; the last slot is EOS.
#[derive(Debug, Clone, PartialEq)]
pub struct NextSymbolDistribution {
    pub probs: Vec<f64>,
}

impl NextSymbolDistribution {
    pub fn symbol(&self, s: Symbol) -> f64 {
        self.probs[s as usize]
    }

    pub fn eos(&self) -> f64 {
        *self.probs.last().expect("distribution has an EOS slot")
    }

    pub fn entropy(&self, base: LogBase) -> f64 {
        base.from_nats(crate::entropy::entropy_nats(&self.probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfsa::tests::{arc, t1};

    const TOL: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn t1_matrices() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        let expected_m = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.6, 0.0]);
        assert!((m.transition() - expected_m).amax() < TOL);
        let expected_k = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.6, 0.5]) / 0.32;
        assert!((m.star() - &expected_k).amax() < 1e-12);
        let k_rho = m.star() * nalgebra::DVector::from_row_slice(&[0.2, 0.4]);
        assert!((k_rho[0] - 1.0).abs() < TOL && (k_rho[1] - 1.0).abs() < TOL);
        let mut sum = DMatrix::zeros(2, 2);
        for s in 0..2 {
            sum += m.per_symbol(s);
        }
        assert!((sum - m.transition()).amax() < TOL);
    }

    #[test]
    fn star_matches_truncated_series() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        let mut acc = DMatrix::<f64>::identity(2, 2);
        let mut power = DMatrix::<f64>::identity(2, 2);
        for _ in 0..60 {
            power = &power * m.transition();
            acc += &power;
        }
        // 0.742^61 is about 1e-8
        assert!((acc - m.star()).amax() < 1e-6);
    }

    #[test]
    fn spectral_radius_below_one() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        let radius = m
            .transition()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(radius < 1.0, "{radius}");
    }

    #[test]
    fn empty_automaton_has_identity_closure() {
        let a = Pfsa::new(3, 2, vec![0.5, 0.5], vec![1.0, 1.0], vec![]).unwrap();
        let m = TransitionMatrices::new(&a).unwrap();
        assert_eq!(m.transition().amax(), 0.0);
        assert!((m.star() - DMatrix::<f64>::identity(2, 2)).amax() < TOL);
        assert!(close(m.mean_length(), 0.0));
    }

    #[test]
    fn infinite_length_is_rejected() {
        // A self-loop with no halting weight.
        let a = Pfsa::new(1, 1, vec![1.0], vec![0.0], vec![arc(0, 0, 1.0, 0)]).unwrap();
        assert!(matches!(
            TransitionMatrices::new(&a),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn t1_string_probabilities() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        assert!(close(m.string_prob(&[]).unwrap(), 0.2));
        assert!(close(m.string_prob(&[1]).unwrap(), 0.12));
        assert!(close(m.string_prob(&[1, 0]).unwrap(), 0.036));
        assert_eq!(m.string_prob(&[1, 1]).unwrap(), 0.0);
        assert!((m.string_log_prob(&[1, 0]).unwrap() - 0.036f64.ln()).abs() < 1e-12);
        assert_eq!(m.string_log_prob(&[1, 1]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            m.string_prob(&[2]),
            Err(Error::SymbolOutOfRange { symbol: 2, .. })
        ));
    }

    #[test]
    fn t1_prefix_probabilities() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        assert!(close(m.prefix_prob(&[]).unwrap(), 1.0));
        assert!(close(m.prefix_prob(&[0]).unwrap(), 0.5));
        assert!(close(m.prefix_prob(&[1]).unwrap(), 0.3));
        assert_eq!(m.prefix_prob(&[1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn t1_infix_weights() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        assert!(close(m.infix_weight(&[0]).unwrap(), 2.125));
        assert!(close(m.infix_weight(&[1]).unwrap(), 0.9375));
        assert_eq!(m.infix_weight(&[1, 1]).unwrap(), 0.0);
        assert!(close(m.infix_weight(&[]).unwrap(), 4.0625));
        assert!(close(m.prefix_normalizer(), 4.0625));
        // length-1 infix weights add up to the expected length
        assert!(close(
            m.infix_weight(&[0]).unwrap() + m.infix_weight(&[1]).unwrap(),
            m.mean_length()
        ));
    }

    #[test]
    fn t1_next_symbol_given_prefix() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        let d = m.next_symbol_given_prefix(&[]).unwrap();
        assert!(close(d.symbol(0), 0.5) && close(d.symbol(1), 0.3) && close(d.eos(), 0.2));
        let d = m.next_symbol_given_prefix(&[1]).unwrap();
        assert!(close(d.symbol(0), 0.6) && close(d.symbol(1), 0.0) && close(d.eos(), 0.4));
        assert!(matches!(
            m.next_symbol_given_prefix(&[1, 1]),
            Err(Error::ZeroMassPrefix)
        ));
    }

    #[test]
    fn t1_next_symbol_given_infix() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        let d = m.next_symbol_given_infix(&[1]).unwrap();
        assert!(close(d.symbol(0), 0.6) && close(d.symbol(1), 0.0) && close(d.eos(), 0.4));
        let d = m.next_symbol_given_infix(&[0]).unwrap();
        assert!(close(d.symbol(0), 0.5) && close(d.symbol(1), 0.3) && close(d.eos(), 0.2));
        assert!(matches!(
            m.next_symbol_given_infix(&[1, 1]),
            Err(Error::ZeroMassInfix)
        ));
    }

    #[test]
    fn mean_length_examples() {
        let m = TransitionMatrices::new(&t1()).unwrap();
        assert!(close(m.mean_length(), 3.0625));
        let single = Pfsa::new(1, 1, vec![1.0], vec![1.0], vec![]).unwrap();
        assert!(close(TransitionMatrices::new(&single).unwrap().mean_length(), 0.0));
        let geometric = Pfsa::new(1, 1, vec![1.0], vec![0.5], vec![arc(0, 0, 0.5, 0)]).unwrap();
        assert!(close(TransitionMatrices::new(&geometric).unwrap().mean_length(), 1.0));
    }
}
