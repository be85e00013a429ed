//! Metropolis-Hastings over DAGs with a systematic add/delete edge kernel.
//!
//! Each iteration visits the next eligible ordered pair `(i, j)`, draws
//! `z ~ Bernoulli(p_ij)` from the edge prior, and proposes adding `i -> j`
//! when `z = 1` or deleting it when `z = 0`. Proposals that leave the graph
//! unchanged are accepted trivially; adds that would close a cycle are
//! rejected. Because the proposal probability of a move is exactly its
//! Bernoulli prior mass, the Hastings correction cancels the Bernoulli prior
//! and the log acceptance ratio is the change in log marginal likelihood
//! plus the concordance, degree and motif prior changes.
//!
//! An iteration is one pair proposal; the state after every post-burn-in
//! iteration is a sample.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diagnostics::{gelman_rubin, DiagnosticsError, EdgeProbabilityMatrix, RHatMatrix};
use crate::graph::{ChangeKind, EdgeChange, Graph, TopoScratch};
use crate::priors::{count_motifs, log_total_prior, motif_delta, MotifCounts, PriorError, PriorSpec};
use crate::score::{graph_log_score, ScoreCache, ScoreError, Scorer, DEFAULT_CACHE_CAPACITY};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("initial graph: {0}")]
    InitialGraph(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("chain {chain} failed: {source}")]
    Chain { chain: usize, source: Box<SamplerError> },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_iterations: u64,
    pub burn_in: u64,
    pub n_chains: usize,
    /// Per-chain seeds; when shorter than `n_chains` the remaining chains use
    /// `base_seed + chain index`.
    pub seeds: Vec<u64>,
    pub base_seed: u64,
    /// Sample from the structure prior alone.
    pub prior_only: bool,
    /// Keep every `sample_stride`-th post-burn-in graph; 0 keeps none.
    pub sample_stride: u64,
    /// Iterations per batch mean used by the convergence diagnostic.
    pub batch_length: u64,
    /// Draw pairs uniformly at random instead of scanning them in order.
    pub random_scan: bool,
    /// Starting graph; the empty graph (plus forced edges) when `None`.
    pub initial_graph: Option<Graph>,
    /// Compute Gelman-Rubin statistics over the chains.
    pub gelman_rubin: bool,
    /// Full recomputation of cached log values every this many iterations.
    pub resync_interval: u64,
    pub cache_capacity: usize,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_iterations: 100_000,
            burn_in: 10_000,
            n_chains: 3,
            seeds: Vec::new(),
            base_seed: 1,
            prior_only: false,
            sample_stride: 0,
            batch_length: 10_000,
            random_scan: false,
            initial_graph: None,
            gelman_rubin: true,
            resync_interval: 100_000,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            cancel: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        self.validate_chain()?;
        if self.n_chains == 0 {
            return Err(SamplerError::Config("n_chains must be at least 1".into()));
        }
        if self.gelman_rubin && self.n_chains < 2 {
            return Err(SamplerError::Config("Gelman-Rubin diagnostics need at least 2 chains".into()));
        }
        Ok(())
    }

    /// Checks the settings that apply to a single chain.
    pub fn validate_chain(&self) -> Result<(), SamplerError> {
        let fail = |m: String| Err(SamplerError::Config(m));
        if self.n_iterations == 0 {
            return fail("n_iterations must be positive".into());
        }
        if self.burn_in >= self.n_iterations {
            return fail(format!(
                "burn_in ({}) must be smaller than n_iterations ({})",
                self.burn_in, self.n_iterations
            ));
        }
        if self.batch_length == 0 {
            return fail("batch_length must be positive".into());
        }
        if self.resync_interval == 0 {
            return fail("resync_interval must be positive".into());
        }
        Ok(())
    }

    pub fn seed_for(&self, chain: usize) -> u64 {
        self.seeds.get(chain).copied().unwrap_or_else(|| self.base_seed.wrapping_add(chain as u64))
    }

    fn n_samples(&self) -> u64 {
        self.n_iterations - self.burn_in
    }
}

/// What the kernel drew for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    /// A state-changing add or delete.
    Move(EdgeChange),
    /// Add of a present edge or delete of an absent one.
    NoOp { from: usize, to: usize },
    /// Add that would close a directed cycle.
    CycleRejected(EdgeChange),
    /// No pair is eligible (every edge is fixed by the prior).
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted(EdgeChange),
    Rejected(EdgeChange),
    NoOp,
    CycleRejected,
    /// The proposal's parent set lies outside the likelihood's support.
    OutsideSupport,
    Idle,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainStats {
    pub iterations: u64,
    pub noops: u64,
    pub cycle_rejections: u64,
    pub moves_proposed: u64,
    pub moves_accepted: u64,
    pub support_rejections: u64,
    /// Largest gap between incrementally tracked and recomputed log
    /// posterior seen at a resync.
    pub max_drift: f64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.moves_proposed == 0 {
            0.0
        } else {
            self.moves_accepted as f64 / self.moves_proposed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub seed: u64,
    pub n_nodes: usize,
    pub edge_probability: EdgeProbabilityMatrix,
    /// Row-major N×N counts of samples containing each edge.
    pub occupancy: Vec<u64>,
    pub n_samples: u64,
    pub best_graph: Graph,
    pub best_log_posterior: f64,
    pub final_graph: Graph,
    /// One row-major N×N matrix of per-batch edge frequencies per batch.
    pub batch_means: Vec<Vec<f64>>,
    /// `(iteration, graph)` for strided samples.
    pub samples: Vec<(u64, Graph)>,
    pub stats: ChainStats,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub wall_time: Duration,
    /// The run was cancelled before `n_iterations`.
    pub interrupted: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub n_nodes: usize,
    pub chains: Vec<ChainResult>,
    /// Mean of the chains' edge probabilities.
    pub edge_probability: EdgeProbabilityMatrix,
    pub rhat: Option<RHatMatrix>,
    /// Highest-posterior graph over all chains.
    pub best_graph: Graph,
    pub best_log_posterior: f64,
}

impl RunResult {
    pub fn interrupted(&self) -> bool {
        self.chains.iter().any(|c| c.interrupted)
    }
}

/// One Markov chain with exclusive mutable state.
pub struct Chain<'s, 'd> {
    scorer: &'s Scorer<'d>,
    priors: &'s PriorSpec,
    prior_only: bool,
    random_scan: bool,
    burn_in: u64,
    batch_length: u64,
    sample_stride: u64,
    resync_interval: u64,

    graph: Graph,
    log_prior: f64,
    log_score: f64,
    node_scores: Vec<f64>,
    motifs: Option<MotifCounts>,
    cache: ScoreCache,
    pairs: Vec<(usize, usize)>,
    scan_cursor: usize,
    rng: ChaCha8Rng,
    iteration: u64,

    occupancy: Vec<u64>,
    /// First sample index not yet credited to `occupancy` for present edges.
    credited_from: Vec<u64>,
    batch_start: Vec<u64>,
    batch_means: Vec<Vec<f64>>,
    best_graph: Graph,
    best_log_posterior: f64,
    samples: Vec<(u64, Graph)>,
    stats: ChainStats,

    scratch: TopoScratch,
    parents_buf: Vec<usize>,
}

impl<'s, 'd> Chain<'s, 'd> {
    pub fn new(
        config: &RunConfig,
        priors: &'s PriorSpec,
        scorer: &'s Scorer<'d>,
        seed: u64,
    ) -> Result<Self, SamplerError> {
        let n = scorer.n_nodes();
        if priors.n_nodes() != n {
            return Err(SamplerError::Config(format!(
                "prior is over {} nodes but the data set has {n}",
                priors.n_nodes()
            )));
        }
        let mut graph = match &config.initial_graph {
            Some(g) if g.n_nodes() != n => {
                return Err(SamplerError::InitialGraph(format!(
                    "has {} nodes, expected {n}",
                    g.n_nodes()
                )))
            }
            Some(g) => g.clone(),
            None => Graph::empty(n),
        };
        for (i, j) in priors.forced_edges().edges().collect::<Vec<_>>() {
            graph.set_edge(i, j, true);
        }
        if !graph.is_dag() {
            return Err(SamplerError::InitialGraph("contains a directed cycle".into()));
        }
        let log_prior = log_total_prior(&graph, priors)
            .map_err(|e| SamplerError::InitialGraph(e.to_string()))?;

        let mut cache = ScoreCache::with_capacity(config.cache_capacity);
        let mut node_scores = vec![0.0; n];
        if !config.prior_only {
            let mut parents = Vec::new();
            for (node, slot) in node_scores.iter_mut().enumerate() {
                graph.parents_into(node, &mut parents);
                *slot = scorer.cached_node_score(&mut cache, node, &parents)?;
            }
        }
        let log_score = node_scores.iter().sum();

        let pairs = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && !priors.is_deterministic(i, j))
            .collect();
        let motifs = priors.has_motif_prior().then(|| count_motifs(&graph));
        let first_sample = config.burn_in + 1;

        Ok(Self {
            scorer,
            priors,
            prior_only: config.prior_only,
            random_scan: config.random_scan,
            burn_in: config.burn_in,
            batch_length: config.batch_length,
            sample_stride: config.sample_stride,
            resync_interval: config.resync_interval,
            best_graph: graph.clone(),
            best_log_posterior: log_score + log_prior,
            graph,
            log_prior,
            log_score,
            node_scores,
            motifs,
            cache,
            pairs,
            scan_cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iteration: 0,
            occupancy: vec![0; n * n],
            credited_from: vec![first_sample; n * n],
            batch_start: vec![0; n * n],
            batch_means: Vec::new(),
            samples: Vec::new(),
            stats: ChainStats::default(),
            scratch: TopoScratch::new(n),
            parents_buf: Vec::with_capacity(n),
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn log_prior(&self) -> f64 {
        self.log_prior
    }

    pub fn log_score(&self) -> f64 {
        self.log_score
    }

    pub fn log_posterior(&self) -> f64 {
        self.log_prior + self.log_score
    }

    pub fn stats(&self) -> &ChainStats {
        &self.stats
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    /// Draws the next pair and edge indicator and classifies the move.
    pub fn propose(&mut self) -> Proposal {
        if self.pairs.is_empty() {
            return Proposal::Idle;
        }
        let (from, to) = if self.random_scan {
            self.pairs[self.rng.random_range(0..self.pairs.len())]
        } else {
            let pair = self.pairs[self.scan_cursor];
            self.scan_cursor = (self.scan_cursor + 1) % self.pairs.len();
            pair
        };
        let add = self.rng.random::<f64>() < self.priors.edge_probability(from, to);
        let present = self.graph.has_edge(from, to);
        match (add, present) {
            (true, true) | (false, false) => Proposal::NoOp { from, to },
            (true, false) => {
                if self.graph.add_creates_cycle(from, to, &mut self.scratch) {
                    Proposal::CycleRejected(EdgeChange::add(from, to))
                } else {
                    Proposal::Move(EdgeChange::add(from, to))
                }
            }
            (false, true) => Proposal::Move(EdgeChange::delete(from, to)),
        }
    }

    /// New parent list of the head node after `change`, in `parents_buf`.
    fn proposed_parents(&mut self, change: EdgeChange) {
        self.graph.parents_into(change.to, &mut self.parents_buf);
        match change.kind {
            ChangeKind::Add => {
                let at = self.parents_buf.partition_point(|&p| p < change.from);
                self.parents_buf.insert(at, change.from);
            }
            ChangeKind::Delete => self.parents_buf.retain(|&p| p != change.from),
        }
    }

    /// Log marginal-likelihood change and new head-node score for `change`.
    fn score_change(&mut self, change: EdgeChange) -> Result<(f64, f64), ScoreError> {
        if self.prior_only {
            return Ok((0.0, 0.0));
        }
        self.proposed_parents(change);
        let new_score = self.scorer.cached_node_score(&mut self.cache, change.to, &self.parents_buf)?;
        Ok((new_score - self.node_scores[change.to], new_score))
    }

    /// `log` of the simplified acceptance ratio for a state-changing move.
    pub fn acceptance_log_ratio(&mut self, change: EdgeChange) -> Result<f64, ScoreError> {
        let (d_score, _) = self.score_change(change)?;
        let d_prior = self.priors.delta_components(&self.graph, change, self.motifs.as_ref());
        Ok(d_score + d_prior.without_bernoulli())
    }

    /// One proposal with its accept/reject decision and bookkeeping.
    pub fn step(&mut self) -> Result<StepOutcome, SamplerError> {
        self.iteration += 1;
        let t = self.iteration;
        let outcome = match self.propose() {
            Proposal::Idle => StepOutcome::Idle,
            Proposal::NoOp { .. } => {
                self.stats.noops += 1;
                StepOutcome::NoOp
            }
            Proposal::CycleRejected(_) => {
                self.stats.cycle_rejections += 1;
                StepOutcome::CycleRejected
            }
            Proposal::Move(change) => {
                self.stats.moves_proposed += 1;
                match self.score_change(change) {
                    Err(e) if e.is_outside_support() => {
                        self.stats.support_rejections += 1;
                        StepOutcome::OutsideSupport
                    }
                    Err(e) => return Err(e.into()),
                    Ok((d_score, new_score)) => {
                        let d_prior =
                            self.priors.delta_components(&self.graph, change, self.motifs.as_ref());
                        let log_ratio = d_score + d_prior.without_bernoulli();
                        let u: f64 = self.rng.random();
                        if u.ln() < log_ratio.min(0.0) {
                            self.commit(change, new_score, d_score, d_prior.total(), t);
                            StepOutcome::Accepted(change)
                        } else {
                            StepOutcome::Rejected(change)
                        }
                    }
                }
            }
        };
        self.stats.iterations += 1;
        self.after_step(t);
        Ok(outcome)
    }

    fn commit(&mut self, change: EdgeChange, new_score: f64, d_score: f64, d_prior: f64, t: u64) {
        let EdgeChange { from, to, kind } = change;
        if let Some(m) = self.motifs.as_mut() {
            *m = *m + motif_delta(&self.graph, change);
        }
        let e = from * self.graph.n_nodes() + to;
        match kind {
            ChangeKind::Add => {
                self.graph.set_edge(from, to, true);
                self.credited_from[e] = t.max(self.burn_in + 1);
            }
            ChangeKind::Delete => {
                self.credit(e, t - 1);
                self.graph.set_edge(from, to, false);
            }
        }
        if !self.prior_only {
            self.node_scores[to] = new_score;
        }
        self.log_score += d_score;
        self.log_prior += d_prior;
        self.stats.moves_accepted += 1;
        let lp = self.log_posterior();
        if lp > self.best_log_posterior {
            self.best_log_posterior = lp;
            self.best_graph.clone_from(&self.graph);
        }
    }

    /// Credits samples `credited_from[e]..=upto` to a present edge.
    #[inline]
    fn credit(&mut self, e: usize, upto: u64) {
        let from = self.credited_from[e];
        if upto >= from {
            self.occupancy[e] += upto - from + 1;
            self.credited_from[e] = upto + 1;
        }
    }

    fn credit_all(&mut self, upto: u64) {
        let n = self.graph.n_nodes();
        for e in 0..n * n {
            if self.graph.adjacency()[e] != 0 {
                self.credit(e, upto);
            }
        }
    }

    fn after_step(&mut self, t: u64) {
        if t > self.burn_in {
            let since = t - self.burn_in;
            if since.is_multiple_of(self.batch_length) {
                self.credit_all(t);
                let len = self.batch_length as f64;
                let means =
                    self.occupancy.iter().zip(&self.batch_start).map(|(&o, &s)| (o - s) as f64 / len).collect();
                self.batch_means.push(means);
                self.batch_start.copy_from_slice(&self.occupancy);
            }
            if self.sample_stride > 0 && since.is_multiple_of(self.sample_stride) {
                self.samples.push((t, self.graph.clone()));
            }
        }
        if t.is_multiple_of(10_000) {
            debug_assert!(self.graph.is_dag_with(&mut self.scratch), "chain left the space of DAGs");
        }
        if t.is_multiple_of(self.resync_interval) {
            // Incremental sums are exact in structure; only rounding drifts.
            if let Ok(drift) = self.resync() {
                self.stats.max_drift = self.stats.max_drift.max(drift);
            }
        }
    }

    /// Recomputes the cached log prior and score from the current graph and
    /// returns the absolute drift that had accumulated.
    pub fn resync(&mut self) -> Result<f64, SamplerError> {
        let log_prior = log_total_prior(&self.graph, self.priors)?;
        let log_score = if self.prior_only {
            0.0
        } else {
            let mut parents = Vec::new();
            let mut sum = 0.0;
            for node in 0..self.graph.n_nodes() {
                self.graph.parents_into(node, &mut parents);
                let s = self.scorer.cached_node_score(&mut self.cache, node, &parents)?;
                self.node_scores[node] = s;
                sum += s;
            }
            sum
        };
        let drift = (log_prior - self.log_prior).abs() + (log_score - self.log_score).abs();
        self.log_prior = log_prior;
        self.log_score = log_score;
        if let Some(m) = self.motifs.as_mut() {
            *m = count_motifs(&self.graph);
        }
        Ok(drift)
    }

    /// Runs until `n_iterations` in total or until `cancel` is raised.
    pub fn run_to(&mut self, n_iterations: u64, cancel: Option<&AtomicBool>) -> Result<bool, SamplerError> {
        while self.iteration < n_iterations {
            if self.iteration.is_multiple_of(1024) && cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
                return Ok(false);
            }
            self.step()?;
        }
        Ok(true)
    }

    pub fn into_result(mut self, seed: u64, wall_time: Duration, interrupted: bool) -> ChainResult {
        let upto = self.iteration;
        self.credit_all(upto);
        let n_samples = upto.saturating_sub(self.burn_in);
        let edge_probability = self
            .occupancy
            .iter()
            .map(|&o| if n_samples == 0 { 0.0 } else { o as f64 / n_samples as f64 })
            .collect();
        ChainResult {
            seed,
            n_nodes: self.graph.n_nodes(),
            edge_probability: EdgeProbabilityMatrix::new(self.graph.n_nodes(), edge_probability),
            occupancy: self.occupancy,
            n_samples,
            best_graph: self.best_graph,
            best_log_posterior: self.best_log_posterior,
            final_graph: self.graph,
            batch_means: self.batch_means,
            samples: self.samples,
            stats: self.stats,
            cache_hits: self.cache.hits(),
            cache_misses: self.cache.misses(),
            wall_time,
            interrupted,
        }
    }
}

/// Runs one chain from the configured initial graph.
pub fn run_chain(
    config: &RunConfig,
    priors: &PriorSpec,
    scorer: &Scorer<'_>,
    seed: u64,
) -> Result<ChainResult, SamplerError> {
    config.validate_chain()?;
    let start = Instant::now();
    let mut chain = Chain::new(config, priors, scorer, seed)?;
    let completed = chain.run_to(config.n_iterations, config.cancel.as_deref())?;
    debug_assert!(!completed || config.n_samples() == chain.iteration - config.burn_in);
    Ok(chain.into_result(seed, start.elapsed(), !completed))
}

/// Runs `config.n_chains` chains in parallel and pools their results.
pub fn run_chains(config: &RunConfig, priors: &PriorSpec, scorer: &Scorer<'_>) -> Result<RunResult, SamplerError> {
    config.validate()?;
    let results: Vec<Result<ChainResult, SamplerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.n_chains)
            .map(|c| {
                let seed = config.seed_for(c);
                scope.spawn(move || run_chain(config, priors, scorer, seed))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let mut chains = Vec::with_capacity(results.len());
    for (chain, r) in results.into_iter().enumerate() {
        chains.push(r.map_err(|e| SamplerError::Chain { chain, source: Box::new(e) })?);
    }
    pool(config, chains)
}

fn pool(config: &RunConfig, chains: Vec<ChainResult>) -> Result<RunResult, SamplerError> {
    let n_nodes = chains[0].n_nodes;
    let k = chains.len() as f64;
    let mut edge_probability = vec![0.0; n_nodes * n_nodes];
    for c in &chains {
        for (acc, p) in edge_probability.iter_mut().zip(c.edge_probability.values()) {
            *acc += p / k;
        }
    }
    let rhat = if config.gelman_rubin {
        let batches: Vec<&[Vec<f64>]> = chains.iter().map(|c| c.batch_means.as_slice()).collect();
        Some(gelman_rubin(n_nodes, &batches)?)
    } else {
        None
    };
    let best = chains
        .iter()
        .max_by(|a, b| a.best_log_posterior.total_cmp(&b.best_log_posterior))
        .expect("at least one chain");
    Ok(RunResult {
        n_nodes,
        best_graph: best.best_graph.clone(),
        best_log_posterior: best.best_log_posterior,
        edge_probability: EdgeProbabilityMatrix::new(n_nodes, edge_probability),
        rhat,
        chains,
    })
}

/// Unnormalised log posterior `log f(x | G) + log P(G)` of a graph, scored
/// from scratch.
pub fn log_posterior(g: &Graph, priors: &PriorSpec, scorer: &Scorer<'_>) -> Result<f64, SamplerError> {
    let mut cache = ScoreCache::with_capacity(0);
    Ok(graph_log_score(g, scorer, &mut cache)? + log_total_prior(g, priors)?)
}
