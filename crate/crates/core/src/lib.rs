//! Exact and estimated local entropy of languages generated by probabilistic
//! finite-state automata.
//!
//! The crate covers the whole measurement loop:
//!
//! * [`pfsa`] and [`matrices`]: automata and their closed-form string,
//!   prefix and infix probabilities;
//! * [`entropy`]: exact next-symbol, global and m-local entropy;
//! * [`generate`]: random deterministic automata;
//! * [`sample`]: ancestral sampling and corpora;
//! * [`perturb`]: length-preserving bijective corpus perturbations;
//! * [`ngram`]: counting, the plug-in m-local entropy estimator and smoothed
//!   n-gram learners scored by held-out cross-entropy;
//! * [`stats`] and [`experiment`]: correlation statistics and the estimator
//!   validation and grid experiments.
//!
//! ```
//! use locent::entropy::{m_local_entropy, DEFAULT_CONTEXT_BUDGET};
//! use locent::generate::{random_dpfsa, GenConfig};
//! use locent::matrices::TransitionMatrices;
//!
//! let pfsa = random_dpfsa(&GenConfig { num_states: 4, alphabet_size: 6, ..Default::default() })?;
//! let mats = TransitionMatrices::new(&pfsa)?;
//! assert!((mats.mean_length() - 20.0).abs() < 1e-6);
//! let h3 = m_local_entropy(&pfsa, &mats, 3, DEFAULT_CONTEXT_BUDGET)?;
//! assert!(h3.value > 0.0);
//! # Ok::<(), locent::Error>(())
//! ```

pub mod entropy;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod matrices;
pub mod ngram;
pub mod perturb;
pub mod pfsa;
pub mod rng;
pub mod sample;
pub mod stats;

pub use error::{Error, Result};
pub use pfsa::{Pfsa, Symbol, Transition};
