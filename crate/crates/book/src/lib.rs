//! The guide's chapters, compiled so that every code listing runs as a
//! doctest. Each chapter gets its own module to make failures easy to trace.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/automata.md")]
pub mod automata {}
#[doc = include_str!("../../../book/src/entropy.md")]
pub mod entropy {}
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}
#[doc = include_str!("../../../book/src/perturbations.md")]
pub mod perturbations {}
#[doc = include_str!("../../../book/src/ngrams.md")]
pub mod ngrams {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
