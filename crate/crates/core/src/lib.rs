//! Bayesian structure inference for directed acyclic graphs.
//!
//! The crate samples DAGs from `P(G | x) ∝ f(x | G) P(G)` with a
//! Metropolis-Hastings chain whose proposals add or delete one edge at a
//! time, scanning node pairs systematically. Node data may be continuous
//! (Normal-Gamma or Zellner g-prior regressions) or discrete
//! (Dirichlet-multinomial); structure priors combine independent Bernoulli
//! edges, a concordance matrix, a power-law degree penalty and an optional
//! motif term.

pub mod data;
pub mod graph;
pub mod priors;
pub mod score;
pub mod diagnostics;
pub mod sampler;
pub mod sim;
pub mod script;
pub mod io;
pub mod cli;
