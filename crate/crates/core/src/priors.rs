//! Structure priors over DAGs, evaluated in natural-log space and only up to
//! graph-independent constants.
//!
//! Four components are supported and multiply together:
//!
//! * an independent Bernoulli prior on every off-diagonal edge,
//! * a concordance prior `exp(-rho * sum |A - E|)` against a ±1 matrix `E`,
//! * a power-law out-degree prior `prod_i d_i^-gamma` (zero degrees skipped),
//! * a pluggable three-node motif prior, constant unless supplied.
//!
//! Besides full evaluation every component has an O(1)/O(N) single-edge delta
//! used by the sampler's inner loop.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{ChangeKind, CycleRejection, EdgeChange, Graph, TopoScratch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("edge {from} -> {to} has prior probability {p} but is {state} in the graph")]
    InconsistentGraph { from: usize, to: usize, p: f64, state: &'static str },
    #[error("{0} prior is not enabled")]
    SpecMissing(&'static str),
    #[error("invalid prior hyperparameter: {0}")]
    Invalid(String),
    #[error("prior matrix is {got}x{got} but the graph has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Cycle(#[from] CycleRejection),
}

/// Counts of three-node motifs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MotifCounts {
    /// Directed 3-cycles `i -> j -> k -> i`, each counted once.
    pub cycles: i64,
    /// Feed-forward loops `i -> j`, `j -> k`, `i -> k`.
    pub feed_forward: i64,
}

impl std::ops::Add for MotifCounts {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            cycles: self.cycles + rhs.cycles,
            feed_forward: self.feed_forward + rhs.feed_forward,
        }
    }
}

/// User-supplied log-weight on motif counts.
pub trait MotifPrior: Send + Sync {
    fn log_weight(&self, counts: &MotifCounts) -> f64;
}

impl<F> MotifPrior for F
where
    F: Fn(&MotifCounts) -> f64 + Send + Sync,
{
    fn log_weight(&self, counts: &MotifCounts) -> f64 {
        self(counts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concordance {
    /// Row-major N×N entries in {-1, +1}; the diagonal is ignored.
    pub desired: Vec<i8>,
    pub rho: f64,
}

#[derive(Clone)]
pub struct PriorSpec {
    n_nodes: usize,
    /// Row-major N×N edge probabilities with a zero diagonal.
    bernoulli: Vec<f64>,
    concordance: Option<Concordance>,
    degree_gamma: Option<f64>,
    motif: Option<Arc<dyn MotifPrior>>,
}

impl fmt::Debug for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PriorSpec")
            .field("n_nodes", &self.n_nodes)
            .field("bernoulli", &self.bernoulli)
            .field("concordance", &self.concordance)
            .field("degree_gamma", &self.degree_gamma)
            .field("motif", &self.motif.as_ref().map(|_| "<plug-in>"))
            .finish()
    }
}

impl PriorSpec {
    /// Flat Bernoulli(0.5) on every off-diagonal edge, nothing else enabled.
    pub fn flat(n_nodes: usize) -> Self {
        Self::uniform_bernoulli(n_nodes, 0.5).expect("0.5 is a valid probability")
    }

    pub fn uniform_bernoulli(n_nodes: usize, p: f64) -> Result<Self, PriorError> {
        let mut bernoulli = vec![p; n_nodes * n_nodes];
        for i in 0..n_nodes {
            bernoulli[i * n_nodes + i] = 0.0;
        }
        Self::with_bernoulli_matrix(n_nodes, bernoulli)
    }

    /// Row-major N×N probabilities; the diagonal must be zero.
    pub fn with_bernoulli_matrix(n_nodes: usize, bernoulli: Vec<f64>) -> Result<Self, PriorError> {
        if bernoulli.len() != n_nodes * n_nodes {
            return Err(PriorError::Invalid(format!(
                "Bernoulli matrix has {} entries, expected {}",
                bernoulli.len(),
                n_nodes * n_nodes
            )));
        }
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                let p = bernoulli[i * n_nodes + j];
                if !(0.0..=1.0).contains(&p) {
                    return Err(PriorError::Invalid(format!(
                        "edge probability p[{}][{}] = {p} outside [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && p != 0.0 {
                    return Err(PriorError::Invalid(format!(
                        "self-loop probability p[{}][{}] must be 0",
                        i + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { n_nodes, bernoulli, concordance: None, degree_gamma: None, motif: None })
    }

    pub fn with_concordance(mut self, desired: Vec<i8>, rho: f64) -> Result<Self, PriorError> {
        let n = self.n_nodes;
        if desired.len() != n * n {
            return Err(PriorError::Invalid(format!(
                "concordance matrix has {} entries, expected {}",
                desired.len(),
                n * n
            )));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(PriorError::Invalid(format!("rho must be positive, got {rho}")));
        }
        for i in 0..n {
            for j in 0..n {
                let e = desired[i * n + j];
                if i != j && e != 1 && e != -1 {
                    return Err(PriorError::Invalid(format!(
                        "concordance entry E[{}][{}] = {e} must be -1 or +1",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        self.concordance = Some(Concordance { desired, rho });
        Ok(self)
    }

    pub fn with_degree_prior(mut self, gamma: f64) -> Result<Self, PriorError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(PriorError::Invalid(format!("gamma must be positive, got {gamma}")));
        }
        self.degree_gamma = Some(gamma);
        Ok(self)
    }

    pub fn with_motif_prior(mut self, prior: Arc<dyn MotifPrior>) -> Self {
        self.motif = Some(prior);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn edge_probability(&self, from: usize, to: usize) -> f64 {
        self.bernoulli[from * self.n_nodes + to]
    }

    /// Whether the Bernoulli prior pins this edge to present or absent.
    #[inline]
    pub fn is_deterministic(&self, from: usize, to: usize) -> bool {
        let p = self.edge_probability(from, to);
        p == 0.0 || p == 1.0
    }

    pub fn concordance(&self) -> Option<&Concordance> {
        self.concordance.as_ref()
    }

    pub fn degree_gamma(&self) -> Option<f64> {
        self.degree_gamma
    }

    pub fn has_motif_prior(&self) -> bool {
        self.motif.is_some()
    }

    /// The graph holding exactly the edges with probability 1.
    pub fn forced_edges(&self) -> Graph {
        let n = self.n_nodes;
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && self.edge_probability(i, j) == 1.0 {
                    g.set_edge(i, j, true);
                }
            }
        }
        g
    }

    fn check_dims(&self, g: &Graph) -> Result<(), PriorError> {
        if g.n_nodes() != self.n_nodes {
            return Err(PriorError::DimensionMismatch { expected: g.n_nodes(), got: self.n_nodes });
        }
        Ok(())
    }

    /// Bernoulli, concordance, degree and motif deltas for an applicable,
    /// state-changing `change`. No acyclicity or consistency check; the motif
    /// term uses `motifs` as the counts of `g` when given.
    pub fn delta_components(
        &self,
        g: &Graph,
        change: EdgeChange,
        motifs: Option<&MotifCounts>,
    ) -> PriorDelta {
        let EdgeChange { from, to, kind } = change;
        let adding = kind == ChangeKind::Add;
        let sign = if adding { 1.0 } else { -1.0 };

        let p = self.edge_probability(from, to);
        let bernoulli = sign * (p.ln() - (1.0 - p).ln());

        let concordance = self.concordance.as_ref().map_or(0.0, |c| {
            // Adding a desired edge removes one disagreement, adding an
            // undesired one introduces one.
            let e = f64::from(c.desired[from * self.n_nodes + to]);
            sign * c.rho * e
        });

        let degree = self.degree_gamma.map_or(0.0, |gamma| {
            let d = g.out_degree(from);
            let d_new = if adding { d + 1 } else { d - 1 };
            -gamma * (log_degree(d_new) - log_degree(d))
        });

        let motif = self.motif.as_ref().map_or(0.0, |prior| {
            let before = motifs.copied().unwrap_or_else(|| count_motifs(g));
            let after = before + motif_delta(g, change);
            prior.log_weight(&after) - prior.log_weight(&before)
        });

        PriorDelta { bernoulli, concordance, degree, motif }
    }
}

#[inline]
fn log_degree(d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        (d as f64).ln()
    }
}

/// Per-component log-prior change for one edge move.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PriorDelta {
    pub bernoulli: f64,
    pub concordance: f64,
    pub degree: f64,
    pub motif: f64,
}

impl PriorDelta {
    pub fn total(&self) -> f64 {
        self.bernoulli + self.concordance + self.degree + self.motif
    }

    /// Everything except the Bernoulli term, which the add/delete proposal
    /// cancels exactly in the acceptance ratio.
    pub fn without_bernoulli(&self) -> f64 {
        self.concordance + self.degree + self.motif
    }
}

pub fn log_bernoulli_prior(g: &Graph, spec: &PriorSpec) -> Result<f64, PriorError> {
    spec.check_dims(g)?;
    let n = g.n_nodes();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = spec.edge_probability(i, j);
            let present = g.has_edge(i, j);
            let mass = if present { p } else { 1.0 - p };
            if mass == 0.0 {
                let state = if present { "present" } else { "absent" };
                return Err(PriorError::InconsistentGraph { from: i, to: j, p, state });
            }
            // Deterministic entries contribute log 1 = 0.
            total += mass.ln();
        }
    }
    Ok(total)
}

pub fn log_concordance_prior(g: &Graph, spec: &PriorSpec) -> Result<f64, PriorError> {
    spec.check_dims(g)?;
    let c = spec.concordance.as_ref().ok_or(PriorError::SpecMissing("concordance"))?;
    let n = g.n_nodes();
    let mut disagreements = 0i64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let a = i64::from(g.has_edge(i, j));
                disagreements += (a - i64::from(c.desired[i * n + j])).abs();
            }
        }
    }
    Ok(-c.rho * disagreements as f64)
}

/// `-gamma * sum log d_i` over nodes with positive out-degree; 0 when the
/// degree prior is disabled.
pub fn log_degree_prior(g: &Graph, spec: &PriorSpec) -> f64 {
    match spec.degree_gamma {
        Some(gamma) => -gamma * (0..g.n_nodes()).map(|i| log_degree(g.out_degree(i))).sum::<f64>(),
        None => 0.0,
    }
}

pub fn log_motif_prior(g: &Graph, spec: &PriorSpec) -> f64 {
    spec.motif.as_ref().map_or(0.0, |prior| prior.log_weight(&count_motifs(g)))
}

pub fn count_motifs(g: &Graph) -> MotifCounts {
    let n = g.n_nodes();
    let mut cycles = 0;
    let mut feed_forward = 0;
    for i in 0..n {
        for j in g.children(i) {
            for k in g.children(j) {
                if k == i {
                    continue;
                }
                if g.has_edge(k, i) {
                    cycles += 1;
                }
                if g.has_edge(i, k) {
                    feed_forward += 1;
                }
            }
        }
    }
    // Each 3-cycle is found once from each of its three nodes.
    MotifCounts { cycles: cycles / 3, feed_forward }
}

/// Change in motif counts when `change` is applied to `g`. Only triples
/// containing both endpoints are affected, so this is O(N).
pub fn motif_delta(g: &Graph, change: EdgeChange) -> MotifCounts {
    let EdgeChange { from: i, to: j, kind } = change;
    let mut cycles = 0;
    let mut feed_forward = 0;
    for k in 0..g.n_nodes() {
        if k == i || k == j {
            continue;
        }
        // i -> j -> k -> i
        if g.has_edge(j, k) && g.has_edge(k, i) {
            cycles += 1;
        }
        // i -> j as the first leg: j -> k, i -> k
        if g.has_edge(j, k) && g.has_edge(i, k) {
            feed_forward += 1;
        }
        // i -> j as the second leg: k -> i, k -> j
        if g.has_edge(k, i) && g.has_edge(k, j) {
            feed_forward += 1;
        }
        // i -> j as the shortcut: i -> k, k -> j
        if g.has_edge(i, k) && g.has_edge(k, j) {
            feed_forward += 1;
        }
    }
    let sign = if kind == ChangeKind::Add { 1 } else { -1 };
    MotifCounts { cycles: sign * cycles, feed_forward: sign * feed_forward }
}

/// Sum of the enabled component log-priors.
pub fn log_total_prior(g: &Graph, spec: &PriorSpec) -> Result<f64, PriorError> {
    let concordance = match spec.concordance {
        Some(_) => log_concordance_prior(g, spec)?,
        None => 0.0,
    };
    Ok(log_bernoulli_prior(g, spec)? + concordance + log_degree_prior(g, spec) + log_motif_prior(g, spec))
}

/// `log_total_prior(g') - log_total_prior(g)` for `g' = g` with `change`
/// applied. Moves that leave the graph unchanged give 0.
pub fn delta_log_prior(g: &Graph, change: EdgeChange, spec: &PriorSpec) -> Result<f64, PriorError> {
    spec.check_dims(g)?;
    let EdgeChange { from, to, kind } = change;
    let present = g.has_edge(from, to);
    match kind {
        ChangeKind::Add if present => return Ok(0.0),
        ChangeKind::Delete if !present => return Ok(0.0),
        ChangeKind::Add => {
            if g.add_creates_cycle(from, to, &mut TopoScratch::new(g.n_nodes())) {
                return Err(CycleRejection { from, to }.into());
            }
        }
        ChangeKind::Delete => {}
    }
    let p = spec.edge_probability(from, to);
    let target_mass = if kind == ChangeKind::Add { p } else { 1.0 - p };
    if target_mass == 0.0 {
        let state = if kind == ChangeKind::Add { "present" } else { "absent" };
        return Err(PriorError::InconsistentGraph { from, to, p, state });
    }
    Ok(spec.delta_components(g, change, None).total())
}
