//! Convergence diagnostics and posterior summaries.

use std::ops::Index;

use thiserror::Error;

use crate::graph::{EdgeChange, Graph, TopoScratch};
use crate::priors::{log_total_prior, PriorError, PriorSpec};
use crate::score::{graph_log_score, ScoreCache, ScoreError, Scorer};

/// Conventional convergence threshold on the potential scale reduction.
pub const DEFAULT_RHAT_THRESHOLD: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("Gelman-Rubin needs at least 2 chains with 2 batches each, got {chains} chains and {batches} batches")]
    InsufficientChains { chains: usize, batches: usize },
    #[error("dimension mismatch: expected {expected} nodes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Prior(#[from] PriorError),
}

/// Row-major N×N matrix indexed by `(from, to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMatrix {
    n_nodes: usize,
    values: Vec<f64>,
}

/// Posterior edge frequencies in `[0, 1]` with a zero diagonal.
pub type EdgeProbabilityMatrix = EdgeMatrix;
/// Per-edge potential scale reduction factors.
pub type RHatMatrix = EdgeMatrix;

impl EdgeMatrix {
    pub fn new(n_nodes: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n_nodes * n_nodes, "EdgeMatrix needs N*N values");
        Self { n_nodes, values }
    }

    pub fn filled(n_nodes: usize, value: f64) -> Self {
        Self::new(n_nodes, vec![value; n_nodes * n_nodes])
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_nodes.max(1))
    }

    /// Off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_nodes;
        self.values.iter().enumerate().filter(move |(k, _)| k / n != k % n).map(|(_, &v)| v)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Index<(usize, usize)> for EdgeMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n_nodes + j]
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sum::<f64>() / n
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs.iter().copied());
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Per-edge Gelman-Rubin statistic over batch means.
///
/// `chains[c][b]` is chain `c`'s row-major N×N matrix of edge frequencies in
/// batch `b`. Chains are truncated to the shortest batch count `m`. Within
/// each edge, `W` is the mean within-chain variance of the batch means, `B`
/// is `m` times the variance of the chain means,
/// `V = (m-1)/m W + B/m` and `R = sqrt(V / W)`. An edge with `W = B = 0` is
/// identical in every batch of every chain and reports 1.
pub fn gelman_rubin(n_nodes: usize, chains: &[&[Vec<f64>]]) -> Result<RHatMatrix, DiagnosticsError> {
    let m = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if chains.len() < 2 || m < 2 {
        return Err(DiagnosticsError::InsufficientChains { chains: chains.len(), batches: m });
    }
    for c in chains {
        if let Some(bad) = c.iter().find(|b| b.len() != n_nodes * n_nodes) {
            return Err(DiagnosticsError::DimensionMismatch {
                expected: n_nodes,
                got: (bad.len() as f64).sqrt() as usize,
            });
        }
    }
    let mf = m as f64;
    let mut out = vec![1.0; n_nodes * n_nodes];
    let mut series = vec![0.0; m];
    let mut chain_means = vec![0.0; chains.len()];
    for i in 0..n_nodes {
        for j in 0..n_nodes {
            if i == j {
                continue;
            }
            let e = i * n_nodes + j;
            let mut within = 0.0;
            for (c, batches) in chains.iter().enumerate() {
                for (slot, b) in series.iter_mut().zip(batches.iter()) {
                    *slot = b[e];
                }
                chain_means[c] = mean(series.iter().copied());
                within += sample_variance(&series);
            }
            let w = within / chains.len() as f64;
            let b = mf * sample_variance(&chain_means);
            out[e] = if w == 0.0 {
                if b == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                let v = (mf - 1.0) / mf * w + b / mf;
                (v / w).sqrt()
            };
        }
    }
    Ok(EdgeMatrix::new(n_nodes, out))
}

/// Whether every off-diagonal R-hat is at most `threshold`.
pub fn converged(rhat: &RHatMatrix, threshold: f64) -> bool {
    rhat.off_diagonal().all(|r| r <= threshold)
}

/// Graph of edges with probability strictly above `threshold`.
pub fn threshold_graph(probs: &EdgeProbabilityMatrix, threshold: f64) -> Graph {
    let n = probs.n_nodes();
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && probs[(i, j)] > threshold);
    Graph::from_edges(n, edges).expect("indices in range and off-diagonal")
}

/// Fraction of off-diagonal positions classified correctly when an edge is
/// declared present iff its probability exceeds the threshold.
pub fn accuracy_curve(
    probs: &EdgeProbabilityMatrix,
    truth: &Graph,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>, DiagnosticsError> {
    let n = probs.n_nodes();
    if truth.n_nodes() != n {
        return Err(DiagnosticsError::DimensionMismatch { expected: n, got: truth.n_nodes() });
    }
    let positions = (n * n.saturating_sub(1)) as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let mut correct = 0usize;
            for i in 0..n {
                for j in 0..n {
                    if i != j && (probs[(i, j)] > t) == truth.has_edge(i, j) {
                        correct += 1;
                    }
                }
            }
            (t, if positions > 0.0 { correct as f64 / positions } else { 1.0 })
        })
        .collect())
}

/// Thresholds `0, step, 2 step, ..., 1`.
pub fn threshold_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step).round() as usize;
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// Unnormalised log posteriors of the three orientation states of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipGap {
    /// Base graph plus `i -> j`.
    pub forward: f64,
    /// Base graph plus `j -> i`.
    pub reverse: f64,
    /// Base graph with neither edge.
    pub neither: f64,
}

impl FlipGap {
    /// Depth of the valley a reversal must cross: how far "neither" sits
    /// below the lower of the two oriented states.
    pub fn trap_depth(&self) -> f64 {
        self.forward.min(self.reverse) - self.neither
    }
}

/// Log posterior (log score + log total prior) of the base graph with `i -> j`,
/// with `j -> i`, and with neither. Reversing an edge under an add/delete
/// kernel must pass through the "neither" state.
pub fn flip_gap_probe(
    scorer: &Scorer<'_>,
    priors: &PriorSpec,
    base: &Graph,
    i: usize,
    j: usize,
) -> Result<FlipGap, DiagnosticsError> {
    let n = base.n_nodes();
    if i >= n || j >= n || i == j {
        return Err(DiagnosticsError::InvalidProbe(format!("pair ({}, {}) is not a valid edge", i + 1, j + 1)));
    }
    if base.has_edge(i, j) || base.has_edge(j, i) {
        return Err(DiagnosticsError::InvalidProbe(format!(
            "base graph already links nodes {} and {}",
            i + 1,
            j + 1
        )));
    }
    let mut scratch = TopoScratch::new(n);
    let oriented = |from: usize, to: usize, scratch: &mut TopoScratch| {
        let mut g = base.clone();
        g.apply_with(EdgeChange::add(from, to), scratch).map_err(|c| {
            DiagnosticsError::InvalidProbe(format!("adding {} -> {} closes a cycle", c.from + 1, c.to + 1))
        })?;
        Ok::<_, DiagnosticsError>(g)
    };
    let forward_graph = oriented(i, j, &mut scratch)?;
    let reverse_graph = oriented(j, i, &mut scratch)?;
    let log_post = |g: &Graph| -> Result<f64, DiagnosticsError> {
        let mut cache = ScoreCache::with_capacity(0);
        Ok(graph_log_score(g, scorer, &mut cache)? + log_total_prior(g, priors)?)
    };
    Ok(FlipGap {
        forward: log_post(&forward_graph)?,
        reverse: log_post(&reverse_graph)?,
        neither: log_post(base)?,
    })
}

/// `counts[d]` = number of nodes with out-degree `d`, for `d = 0..N`.
pub fn degree_histogram(g: &Graph) -> Vec<usize> {
    let n = g.n_nodes();
    let mut counts = vec![0; n.max(1)];
    for v in 0..n {
        counts[g.out_degree(v)] += 1;
    }
    counts
}
