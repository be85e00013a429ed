//! Synthetic networks and data: descending binary trees, linear-Gaussian
//! continuous data and binary "activation" data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{DataError, DataSet};
use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation setting: {0}")]
    Invalid(String),
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub n_obs: usize,
    /// Coefficient on every edge unless `beta_matrix` is set.
    pub beta: f64,
    /// Row-major N×N per-edge coefficients.
    pub beta_matrix: Option<Vec<f64>>,
    pub intercept: f64,
    /// Noise precision.
    pub lambda: f64,
    pub p_root: f64,
    pub p_active: f64,
    pub p_inactive: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_obs: 100,
            beta: 1.0,
            beta_matrix: None,
            intercept: 0.0,
            lambda: 1.0,
            p_root: 0.5,
            p_active: 0.8,
            p_inactive: 0.2,
            seed: 1,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if self.n_obs == 0 {
            return bad("n_obs must be positive".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive and finite, got {}", self.lambda));
        }
        if !self.beta.is_finite() || !self.intercept.is_finite() {
            return bad("beta and intercept must be finite".into());
        }
        for (name, p) in [("p_root", self.p_root), ("p_active", self.p_active), ("p_inactive", self.p_inactive)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if let Some(b) = &self.beta_matrix {
            if b.iter().any(|v| !v.is_finite()) {
                return bad("beta_matrix entries must be finite".into());
            }
        }
        Ok(())
    }

    fn edge_beta(&self, n: usize, from: usize, to: usize) -> f64 {
        self.beta_matrix.as_ref().map_or(self.beta, |b| b[from * n + to])
    }
}

/// Binary descending tree: node `k >= 1` has the single parent `(k - 1) / 2`.
/// Smaller trees are prefixes of larger ones.
pub fn gen_tree_network(n_nodes: usize) -> Graph {
    Graph::from_edges(n_nodes, (1..n_nodes).map(|k| ((k - 1) / 2, k))).expect("tree edges are valid")
}

fn order_of(g: &Graph, spec: &SimSpec) -> Result<Vec<usize>, SimError> {
    spec.validate()?;
    if let Some(b) = &spec.beta_matrix {
        if b.len() != g.n_nodes() * g.n_nodes() {
            return Err(SimError::Invalid(format!(
                "beta_matrix has {} entries, expected {}",
                b.len(),
                g.n_nodes() * g.n_nodes()
            )));
        }
    }
    g.topological_order().ok_or(SimError::Cyclic)
}

/// `x_j = intercept + sum_i beta_ij x_i + u`, `u ~ N(0, 1/lambda)`, sampled in
/// topological order.
pub fn sim_continuous(g: &Graph, spec: &SimSpec) -> Result<DataSet, SimError> {
    let order = order_of(g, spec)?;
    let n = g.n_nodes();
    let noise = Normal::new(0.0, spec.lambda.sqrt().recip()).map_err(|e| SimError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let parents: Vec<Vec<usize>> = (0..n).map(|j| g.parents(j)).collect();
    let mut columns = vec![Vec::with_capacity(spec.n_obs); n];
    let mut row = vec![0.0; n];
    for _ in 0..spec.n_obs {
        for &j in &order {
            let mean = parents[j].iter().fold(spec.intercept, |acc, &i| acc + spec.edge_beta(n, i, j) * row[i]);
            row[j] = mean + noise.sample(&mut rng);
        }
        for (col, &v) in columns.iter_mut().zip(&row) {
            col.push(v);
        }
    }
    Ok(DataSet::continuous(columns)?)
}

/// Roots are 1 with probability `p_root`; a child is 1 with probability
/// `p_active` when any parent is 1 and `p_inactive` otherwise.
pub fn sim_discrete(g: &Graph, spec: &SimSpec) -> Result<DataSet, SimError> {
    let order = order_of(g, spec)?;
    let n = g.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let parents: Vec<Vec<usize>> = (0..n).map(|j| g.parents(j)).collect();
    let mut columns = vec![Vec::with_capacity(spec.n_obs); n];
    let mut row = vec![0u32; n];
    for _ in 0..spec.n_obs {
        for &j in &order {
            let p = if parents[j].is_empty() {
                spec.p_root
            } else if parents[j].iter().any(|&i| row[i] == 1) {
                spec.p_active
            } else {
                spec.p_inactive
            };
            row[j] = u32::from(rng.random::<f64>() < p);
        }
        for (col, &v) in columns.iter_mut().zip(&row) {
            col.push(v);
        }
    }
    Ok(DataSet::discrete(columns, vec![2; n])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_shapes() {
        assert_eq!(gen_tree_network(1).n_edges(), 0);
        assert_eq!(gen_tree_network(3), Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap());
        assert_eq!(gen_tree_network(5).prefix(3), gen_tree_network(3));
        let g = gen_tree_network(31);
        assert!((1..31).all(|j| g.in_degree(j) == 1));
        assert_eq!(g.in_degree(0), 0);
    }

    #[test]
    fn noiseless_regression() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let spec = SimSpec { beta: 2.0, lambda: 1e12, n_obs: 50, ..Default::default() };
        let d = sim_continuous(&g, &spec).unwrap();
        let (x, y) = (d.continuous_column(0).unwrap(), d.continuous_column(1).unwrap());
        for (a, b) in x.iter().zip(y) {
            assert!((b - 2.0 * a).abs() < 1e-4 * a.abs().max(1.0));
        }
    }

    #[test]
    fn root_mean() {
        let spec = SimSpec { n_obs: 100_000, intercept: 3.0, lambda: 4.0, ..Default::default() };
        let d = sim_continuous(&Graph::empty(1), &spec).unwrap();
        let m = d.continuous_column(0).unwrap().iter().sum::<f64>() / 1e5;
        assert!((m - 3.0).abs() < 4.0 / (4.0f64 * 1e5).sqrt());
    }

    #[test]
    fn discrete_frequencies() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let spec = SimSpec { n_obs: 100_000, seed: 7, ..Default::default() };
        let d = sim_discrete(&g, &spec).unwrap();
        let (x, y) = (d.discrete_column(0).unwrap(), d.discrete_column(1).unwrap());
        let root = x.iter().filter(|&&v| v == 1).count() as f64 / 1e5;
        assert!((root - 0.5).abs() < 0.006);
        let freq = |parent: u32| {
            let rows: Vec<_> = x.iter().zip(y).filter(|(&p, _)| p == parent).collect();
            rows.iter().filter(|(_, &c)| c == 1).count() as f64 / rows.len() as f64
        };
        assert!((freq(1) - 0.8).abs() < 0.01);
        assert!((freq(0) - 0.2).abs() < 0.01);
    }

    #[test]
    fn reproducible() {
        let g = gen_tree_network(6);
        let spec = SimSpec { seed: 42, ..Default::default() };
        assert_eq!(sim_continuous(&g, &spec).unwrap(), sim_continuous(&g, &spec).unwrap());
        assert_eq!(sim_discrete(&g, &spec).unwrap(), sim_discrete(&g, &spec).unwrap());
    }

    #[test]
    fn rejects_bad_settings() {
        let g = gen_tree_network(3);
        assert!(sim_continuous(&g, &SimSpec { lambda: 0.0, ..Default::default() }).is_err());
        assert!(sim_discrete(&g, &SimSpec { p_active: 1.5, ..Default::default() }).is_err());
        let cyc = Graph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(sim_discrete(&cyc, &SimSpec::default()), Err(SimError::Cyclic));
    }
}
