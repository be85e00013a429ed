//! Per-node log marginal likelihoods and the decomposable graph score.
//!
//! The data density factorises over nodes given their parents, so the score
//! of a graph is the sum of node scores and a single-edge move only rescores
//! the edge's head. [`Scorer`] holds the immutable, shareable precomputation
//! for a data set and model; [`ScoreCache`] is the chain-private memo.

mod cache;
pub mod dirichlet;
pub mod normal_gamma;
pub mod zellner;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::data::{DataKind, DataSet};
use crate::graph::{ChangeKind, EdgeChange, Graph};

pub use cache::{ScoreCache, DEFAULT_CACHE_CAPACITY};
pub use dirichlet::node_score_dirichlet;
pub use normal_gamma::{node_score_normal_gamma, node_score_normal_gamma_full, NormalGammaParams};
pub use zellner::node_score_zellner;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("{parents} parents plus an intercept exceed the {n_obs} observations")]
    TooManyParents { parents: usize, n_obs: usize },
    #[error("design matrix M'M is singular (collinear parent columns)")]
    SingularDesign,
    #[error("degenerate data: residual sum of squares is zero")]
    DegenerateData,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("{family} likelihood cannot score {kind:?} data")]
    IncompatibleData { family: &'static str, kind: DataKind },
    #[error("parent configuration space too large to index")]
    TooManyConfigurations,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("graph has {got} nodes but the data set has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {} : {source}", node + 1)]
    AtNode { node: usize, source: Box<ScoreError> },
}

impl ScoreError {
    /// Whether the error means the parent set lies outside the model's
    /// support, rather than a failure of the inputs.
    pub fn is_outside_support(&self) -> bool {
        match self {
            Self::TooManyParents { .. } | Self::SingularDesign => true,
            Self::AtNode { source, .. } => source.is_outside_support(),
            _ => false,
        }
    }

    fn at(self, node: usize) -> Self {
        match self {
            Self::AtNode { .. } => self,
            other => Self::AtNode { node, source: Box::new(other) },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    NormalGamma(NormalGammaParams),
    Zellner { g: f64 },
    Dirichlet { pseudo_count: f64 },
}

impl ModelSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::NormalGamma(_) => "normal_gamma",
            Self::Zellner { .. } => "zellner",
            Self::Dirichlet { .. } => "dirichlet",
        }
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        match self {
            Self::NormalGamma(p) => p.validate(),
            Self::Zellner { g } => zellner::validate_g(*g),
            Self::Dirichlet { pseudo_count } => dirichlet::validate_pseudo_count(*pseudo_count),
        }
    }

    /// Whether data of this kind can be scored. Zellner also accepts
    /// discrete codes, scored as a linear regression on their values.
    pub fn accepts(&self, kind: DataKind) -> bool {
        matches!(
            (self, kind),
            (Self::NormalGamma(_), DataKind::Continuous)
                | (Self::Zellner { .. }, _)
                | (Self::Dirichlet { .. }, DataKind::Discrete)
        )
    }
}

/// Sufficient statistics of a regression of `x` on `[1 | parents]`.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub n: usize,
    pub xtx: f64,
    pub mtx: DVector<f64>,
    pub mtm: DMatrix<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn total(a: &[f64]) -> f64 {
    a.iter().sum()
}

impl Moments {
    pub fn from_columns(x: &[f64], parents: &[&[f64]]) -> Self {
        let n = x.len();
        let width = parents.len() + 1;
        let column_sum_or_dot = |a: Option<&[f64]>, b: &[f64]| match a {
            None => total(b),
            Some(a) => dot(a, b),
        };
        let col = |i: usize| if i == 0 { None } else { Some(parents[i - 1]) };
        let mtm = DMatrix::from_fn(width, width, |r, c| match (col(r), col(c)) {
            (None, None) => n as f64,
            (None, Some(b)) | (Some(b), None) => total(b),
            (Some(a), Some(b)) => {
                if r <= c {
                    dot(a, b)
                } else {
                    dot(b, a)
                }
            }
        });
        let mtx = DVector::from_fn(width, |r, _| column_sum_or_dot(col(r), x));
        Self { n, xtx: dot(x, x), mtx, mtm }
    }

    /// Slices the moments out of a precomputed `[1 | data]` Gram matrix.
    fn from_gram(gram: &DMatrix<f64>, n: usize, node: usize, parents: &[usize]) -> Self {
        let index = |i: usize| if i == 0 { 0 } else { parents[i - 1] + 1 };
        let width = parents.len() + 1;
        let mtm = DMatrix::from_fn(width, width, |r, c| gram[(index(r), index(c))]);
        let mtx = DVector::from_fn(width, |r, _| gram[(index(r), node + 1)]);
        Self { n, xtx: gram[(node + 1, node + 1)], mtx, mtm }
    }
}

/// Immutable scoring context for one data set and model, shareable across
/// chains.
#[derive(Debug)]
pub struct Scorer<'a> {
    data: &'a DataSet,
    model: ModelSpec,
    /// Gram matrix of `[1 | columns]` for the Gaussian families.
    gram: Option<DMatrix<f64>>,
}

impl<'a> Scorer<'a> {
    pub fn new(data: &'a DataSet, model: ModelSpec) -> Result<Self, ScoreError> {
        model.validate()?;
        if !model.accepts(data.kind()) {
            return Err(ScoreError::IncompatibleData { family: model.family_name(), kind: data.kind() });
        }
        let gram = match model {
            ModelSpec::Dirichlet { .. } => None,
            _ => {
                let columns = data.real_columns();
                let width = columns.len() + 1;
                let n = data.n_obs();
                let mut gram = DMatrix::zeros(width, width);
                gram[(0, 0)] = n as f64;
                for a in 0..columns.len() {
                    let s = total(&columns[a]);
                    gram[(0, a + 1)] = s;
                    gram[(a + 1, 0)] = s;
                    for b in a..columns.len() {
                        let v = dot(&columns[a], &columns[b]);
                        gram[(a + 1, b + 1)] = v;
                        gram[(b + 1, a + 1)] = v;
                    }
                }
                Some(gram)
            }
        };
        Ok(Self { data, model, gram })
    }

    pub fn data(&self) -> &DataSet {
        self.data
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn n_nodes(&self) -> usize {
        self.data.n_nodes()
    }

    /// Score of `node` under the ascending parent list `parents`, computed
    /// from scratch.
    pub fn node_score(&self, node: usize, parents: &[usize]) -> Result<f64, ScoreError> {
        let result = match &self.model {
            ModelSpec::NormalGamma(p) => {
                let m = self.moments(node, parents);
                let width = parents.len() + 1;
                let beta0 = DVector::from_element(width, p.beta0);
                let n0 = DMatrix::from_diagonal_element(width, width, p.n0_scale);
                normal_gamma::from_moments(&m, p.alpha, p.omega, &beta0, &n0)
            }
            ModelSpec::Zellner { g } => zellner::from_moments(&self.moments(node, parents), *g),
            ModelSpec::Dirichlet { pseudo_count } => {
                let arities = self.data.arities().expect("checked discrete in new");
                let column = |v: usize| self.data.discrete_column(v).expect("checked discrete in new");
                let parent_cols: Vec<&[u32]> = parents.iter().map(|&p| column(p)).collect();
                let parent_arities: Vec<u32> = parents.iter().map(|&p| arities[p]).collect();
                let mut keys = Vec::with_capacity(self.data.n_obs());
                dirichlet::cell_keys(column(node), arities[node], &parent_cols, &parent_arities, &mut keys)
                    .map(|()| dirichlet::score_sorted_keys(&mut keys, arities[node], *pseudo_count))
            }
        };
        result.map_err(|e| e.at(node))
    }

    fn moments(&self, node: usize, parents: &[usize]) -> Moments {
        let gram = self.gram.as_ref().expect("Gaussian families precompute the Gram matrix");
        Moments::from_gram(gram, self.data.n_obs(), node, parents)
    }

    /// Node score through `cache`.
    pub fn cached_node_score(
        &self,
        cache: &mut ScoreCache,
        node: usize,
        parents: &[usize],
    ) -> Result<f64, ScoreError> {
        cache.get_or_insert_with(node, parents, || self.node_score(node, parents))
    }

    fn check_graph(&self, g: &Graph) -> Result<(), ScoreError> {
        if g.n_nodes() != self.n_nodes() {
            return Err(ScoreError::DimensionMismatch { expected: self.n_nodes(), got: g.n_nodes() });
        }
        Ok(())
    }
}

/// `log f(x | G)`: the sum of node scores over the graph's parent sets.
pub fn graph_log_score(g: &Graph, scorer: &Scorer<'_>, cache: &mut ScoreCache) -> Result<f64, ScoreError> {
    scorer.check_graph(g)?;
    let mut parents = Vec::new();
    let mut sum = 0.0;
    for node in 0..g.n_nodes() {
        g.parents_into(node, &mut parents);
        sum += scorer.cached_node_score(cache, node, &parents)?;
    }
    Ok(sum)
}

/// Score change of the head node when `change` is applied to `g`.
pub fn delta_log_score(
    g: &Graph,
    change: EdgeChange,
    scorer: &Scorer<'_>,
    cache: &mut ScoreCache,
) -> Result<f64, ScoreError> {
    scorer.check_graph(g)?;
    let EdgeChange { from, to, kind } = change;
    let old_parents = g.parents(to);
    let mut new_parents = old_parents.clone();
    match (kind, g.has_edge(from, to)) {
        (ChangeKind::Add, false) => {
            let at = new_parents.partition_point(|&p| p < from);
            new_parents.insert(at, from);
        }
        (ChangeKind::Delete, true) => new_parents.retain(|&p| p != from),
        _ => return Ok(0.0),
    }
    let before = scorer.cached_node_score(cache, to, &old_parents)?;
    let after = scorer.cached_node_score(cache, to, &new_parents)?;
    Ok(after - before)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn discrete_data() -> DataSet {
        DataSet::discrete(
            vec![vec![0, 1, 1, 0, 1, 0], vec![0, 1, 1, 0, 0, 0], vec![1, 1, 0, 0, 1, 1]],
            vec![2, 2, 2],
        )
        .unwrap()
    }

    #[test]
    fn incompatible_families_rejected() {
        let data = discrete_data();
        assert!(matches!(
            Scorer::new(&data, ModelSpec::NormalGamma(Default::default())),
            Err(ScoreError::IncompatibleData { .. })
        ));
        assert!(Scorer::new(&data, ModelSpec::Zellner { g: 1.0 }).is_ok());
        let cont = DataSet::continuous(vec![vec![0.5, 1.0]]).unwrap();
        assert!(Scorer::new(&cont, ModelSpec::Dirichlet { pseudo_count: 1.0 }).is_err());
    }

    #[test]
    fn empty_graph_is_sum_of_marginals() {
        let data = discrete_data();
        let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).unwrap();
        let mut cache = ScoreCache::default();
        let total = graph_log_score(&Graph::empty(3), &scorer, &mut cache).unwrap();
        let expected: f64 = (0..3)
            .map(|v| node_score_dirichlet(data.discrete_column(v).unwrap(), 2, &[], &[], 1.0).unwrap())
            .sum();
        assert_eq!(total, expected);
    }

    #[test]
    fn gram_moments_match_direct_columns() {
        let cols = vec![vec![0.1, 2.0, -1.0, 0.4], vec![1.5, -0.3, 0.2, 0.9], vec![0.0, 1.0, 3.0, -2.0]];
        let data = DataSet::continuous(cols.clone()).unwrap();
        let scorer = Scorer::new(&data, ModelSpec::NormalGamma(Default::default())).unwrap();
        let direct = node_score_normal_gamma(&cols[2], &[&cols[0], &cols[1]], &Default::default()).unwrap();
        assert_eq!(scorer.node_score(2, &[0, 1]).unwrap(), direct);
        let scorer = Scorer::new(&data, ModelSpec::Zellner { g: 3.0 }).unwrap();
        let direct = node_score_zellner(&cols[0], &[&cols[2]], 3.0).unwrap();
        assert_eq!(scorer.node_score(0, &[2]).unwrap(), direct);
    }

    #[test]
    fn delta_touches_only_head_node() {
        let data = discrete_data();
        let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).unwrap();
        let mut cache = ScoreCache::default();
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let add = EdgeChange::add(2, 1);
        let d = delta_log_score(&g, add, &scorer, &mut cache).unwrap();
        let g2 = crate::graph::apply_change(&g, add).unwrap();
        let full = graph_log_score(&g2, &scorer, &mut cache).unwrap()
            - graph_log_score(&g, &scorer, &mut cache).unwrap();
        assert!((d - full).abs() < 1e-12);
        let back = delta_log_score(&g2, add.inverse(), &scorer, &mut cache).unwrap();
        assert!((d + back).abs() < 1e-12);
    }

    #[test]
    fn cache_hit_skips_computation() {
        let data = discrete_data();
        let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).unwrap();
        let mut cache = ScoreCache::default();
        let g = Graph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let cold = graph_log_score(&g, &scorer, &mut ScoreCache::with_capacity(0)).unwrap();
        let first = graph_log_score(&g, &scorer, &mut cache).unwrap();
        let misses = cache.misses();
        let second = graph_log_score(&g, &scorer, &mut cache).unwrap();
        assert_eq!(cache.misses(), misses);
        assert_eq!(cache.hits(), 3);
        assert_eq!(first.to_bits(), cold.to_bits());
        assert_eq!(second.to_bits(), cold.to_bits());
    }

    #[test]
    fn errors_name_the_node() {
        let data = DataSet::continuous(vec![vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let scorer = Scorer::new(&data, ModelSpec::Zellner { g: 1.0 }).unwrap();
        let err = graph_log_score(&Graph::empty(2), &scorer, &mut ScoreCache::default()).unwrap_err();
        assert_eq!(err, ScoreError::AtNode { node: 1, source: Box::new(ScoreError::DegenerateData) });
        assert!(!err.is_outside_support());
    }
}
