//! Dense adjacency-matrix digraphs with the acyclicity machinery the sampler
//! relies on.
//!
//! Node indices are 0-based here. Entry `(i, j)` set means a directed edge
//! `i -> j`, so row `i` lists the children of `i` and column `j` its parents.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Largest node count accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION_NODES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node index {index} out of range for a {n_nodes}-node graph")]
    NodeOutOfRange { index: usize, n_nodes: usize },
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),
    #[error("adjacency entries must be 0 or 1, found {value} at ({row}, {col})")]
    NonBinaryEntry { row: usize, col: usize, value: f64 },
    #[error("adjacency matrix must be square, got {rows} rows and {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("DAG enumeration is capped at {MAX_ENUMERATION_NODES} nodes, got {0}")]
    TooManyNodes(usize),
}

/// Returned when adding an edge would close a directed cycle.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("adding edge {from} -> {to} would create a directed cycle")]
pub struct CycleRejection {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChangeKind {
    Add,
    Delete,
}

/// A single-edge mutation `from -> to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeChange {
    pub from: usize,
    pub to: usize,
    pub kind: ChangeKind,
}

impl EdgeChange {
    pub fn add(from: usize, to: usize) -> Self {
        debug_assert_ne!(from, to);
        Self { from, to, kind: ChangeKind::Add }
    }

    pub fn delete(from: usize, to: usize) -> Self {
        debug_assert_ne!(from, to);
        Self { from, to, kind: ChangeKind::Delete }
    }

    /// The change that undoes this one.
    pub fn inverse(self) -> Self {
        let kind = match self.kind {
            ChangeKind::Add => ChangeKind::Delete,
            ChangeKind::Delete => ChangeKind::Add,
        };
        Self { kind, ..self }
    }
}

/// Outcome of a successful in-place mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Changed,
    /// Add of a present edge or delete of an absent one.
    Unchanged,
}

/// Reusable buffers for topological sorting and reachability queries.
#[derive(Debug, Default, Clone)]
pub struct TopoScratch {
    in_degree: Vec<usize>,
    stack: Vec<usize>,
    seen: Vec<bool>,
}

impl TopoScratch {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            in_degree: Vec::with_capacity(n_nodes),
            stack: Vec::with_capacity(n_nodes),
            seen: Vec::with_capacity(n_nodes),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n_nodes: usize,
    adjacency: Vec<u8>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n_nodes", &self.n_nodes)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl Graph {
    /// The empty graph on `n_nodes` nodes.
    pub fn empty(n_nodes: usize) -> Self {
        Self { n_nodes, adjacency: vec![0; n_nodes * n_nodes] }
    }

    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::empty(n_nodes);
        for (i, j) in edges {
            g.check_pair(i, j)?;
            g.adjacency[i * n_nodes + j] = 1;
        }
        Ok(g)
    }

    /// Builds a graph from a square 0/1 matrix given as rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, GraphError> {
        let n = rows.len();
        let mut g = Self::empty(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(GraphError::NotSquare { rows: n, cols: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v == 1.0 {
                    if i == j {
                        return Err(GraphError::SelfLoop(i));
                    }
                    g.adjacency[i * n + j] = 1;
                } else if v != 0.0 {
                    return Err(GraphError::NonBinaryEntry { row: i, col: j, value: v });
                }
            }
        }
        Ok(g)
    }

    /// Decodes graph number `code` from the `n(n-1)` off-diagonal positions
    /// in row-major order, bit `k` of `code` being position `k`.
    pub fn from_offdiagonal_code(n_nodes: usize, code: u64) -> Self {
        let mut g = Self::empty(n_nodes);
        let mut bit = 0;
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                if i != j {
                    if code >> bit & 1 == 1 {
                        g.adjacency[i * n_nodes + j] = 1;
                    }
                    bit += 1;
                }
            }
        }
        g
    }

    /// Inverse of [`Graph::from_offdiagonal_code`].
    pub fn offdiagonal_code(&self) -> u64 {
        let mut code = 0u64;
        let mut bit = 0;
        for i in 0..self.n_nodes {
            for j in 0..self.n_nodes {
                if i != j {
                    if self.has_edge(i, j) {
                        code |= 1 << bit;
                    }
                    bit += 1;
                }
            }
        }
        code
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), GraphError> {
        for index in [i, j] {
            if index >= self.n_nodes {
                return Err(GraphError::NodeOutOfRange { index, n_nodes: self.n_nodes });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adjacency[from * self.n_nodes + to] != 0
    }

    /// Sets or clears an edge without any acyclicity check.
    #[inline]
    pub fn set_edge(&mut self, from: usize, to: usize, present: bool) {
        debug_assert_ne!(from, to, "self-loops are not representable");
        self.adjacency[from * self.n_nodes + to] = present as u8;
    }

    /// Row-major view of the adjacency matrix.
    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_nodes;
        self.adjacency
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(move |(k, _)| (k / n, k % n))
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e != 0).count()
    }

    /// Parents of `node` in ascending order.
    pub fn parents(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.parents_into(node, &mut out);
        out
    }

    /// Writes the ascending parent list of `node` into `out`.
    pub fn parents_into(&self, node: usize, out: &mut Vec<usize>) {
        out.clear();
        let n = self.n_nodes;
        out.extend((0..n).filter(|&i| self.adjacency[i * n + node] != 0));
    }

    pub fn children(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n_nodes;
        self.adjacency[node * n..(node + 1) * n]
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(j, _)| j)
    }

    pub fn out_degree(&self, node: usize) -> usize {
        let n = self.n_nodes;
        self.adjacency[node * n..(node + 1) * n].iter().filter(|&&e| e != 0).count()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        let n = self.n_nodes;
        (0..n).filter(|&i| self.adjacency[i * n + node] != 0).count()
    }

    pub fn is_dag(&self) -> bool {
        self.is_dag_with(&mut TopoScratch::new(self.n_nodes))
    }

    /// Kahn's algorithm over a stack of zero in-degree nodes.
    pub fn is_dag_with(&self, scratch: &mut TopoScratch) -> bool {
        let n = self.n_nodes;
        let in_degree = &mut scratch.in_degree;
        in_degree.clear();
        in_degree.resize(n, 0);
        for (_, j) in self.edges() {
            in_degree[j] += 1;
        }
        let stack = &mut scratch.stack;
        stack.clear();
        stack.extend((0..n).filter(|&v| in_degree[v] == 0));
        let mut visited = 0;
        while let Some(v) = stack.pop() {
            visited += 1;
            let row = &self.adjacency[v * n..(v + 1) * n];
            for (w, &e) in row.iter().enumerate() {
                if e != 0 {
                    in_degree[w] -= 1;
                    if in_degree[w] == 0 {
                        stack.push(w);
                    }
                }
            }
        }
        visited == n
    }

    /// A topological order of the nodes, or `None` if the graph is cyclic.
    /// Ties are broken by smallest index first.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n_nodes;
        let mut in_degree: Vec<usize> = (0..n).map(|j| self.in_degree(j)).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&v| in_degree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for w in self.children(v).collect::<Vec<_>>() {
                in_degree[w] -= 1;
                if in_degree[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Whether a directed path `from ~> to` exists (a node reaches itself).
    pub fn has_path_with(&self, from: usize, to: usize, scratch: &mut TopoScratch) -> bool {
        if from == to {
            return true;
        }
        let n = self.n_nodes;
        let seen = &mut scratch.seen;
        seen.clear();
        seen.resize(n, false);
        let stack = &mut scratch.stack;
        stack.clear();
        stack.push(from);
        seen[from] = true;
        while let Some(v) = stack.pop() {
            let row = &self.adjacency[v * n..(v + 1) * n];
            for (w, &e) in row.iter().enumerate() {
                if e != 0 && !seen[w] {
                    if w == to {
                        return true;
                    }
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// Whether adding `from -> to` to this DAG would close a cycle.
    #[inline]
    pub fn add_creates_cycle(&self, from: usize, to: usize, scratch: &mut TopoScratch) -> bool {
        self.has_path_with(to, from, scratch)
    }

    /// Applies `change` in place. Adding a present edge or deleting an absent
    /// one leaves the graph untouched; an add that would close a cycle is
    /// refused and the graph is left untouched.
    pub fn apply_with(
        &mut self,
        change: EdgeChange,
        scratch: &mut TopoScratch,
    ) -> Result<Applied, CycleRejection> {
        let EdgeChange { from, to, kind } = change;
        match kind {
            ChangeKind::Add => {
                if self.has_edge(from, to) {
                    return Ok(Applied::Unchanged);
                }
                if self.add_creates_cycle(from, to, scratch) {
                    return Err(CycleRejection { from, to });
                }
                self.set_edge(from, to, true);
                Ok(Applied::Changed)
            }
            ChangeKind::Delete => {
                if !self.has_edge(from, to) {
                    return Ok(Applied::Unchanged);
                }
                self.set_edge(from, to, false);
                Ok(Applied::Changed)
            }
        }
    }

    /// Returns a copy of the graph with `node_map[v]` as the new label of `v`.
    pub fn relabel(&self, node_map: &[usize]) -> Self {
        let mut g = Self::empty(self.n_nodes);
        for (i, j) in self.edges() {
            g.set_edge(node_map[i], node_map[j], true);
        }
        g
    }

    /// Subgraph induced by the first `n_nodes` nodes.
    pub fn prefix(&self, n_nodes: usize) -> Self {
        let mut g = Self::empty(n_nodes);
        for (i, j) in self.edges().filter(|&(i, j)| i < n_nodes && j < n_nodes) {
            g.set_edge(i, j, true);
        }
        g
    }
}

/// Pure form of [`Graph::apply_with`].
pub fn apply_change(g: &Graph, change: EdgeChange) -> Result<Graph, CycleRejection> {
    let mut out = g.clone();
    out.apply_with(change, &mut TopoScratch::new(g.n_nodes()))?;
    Ok(out)
}

/// Number of labelled DAGs on `n` nodes by Robinson's recursion
/// `a_n = sum_k (-1)^(k-1) C(n,k) 2^(k(n-k)) a_(n-k)`, `a_0 = 1`.
pub fn count_dags(n: usize) -> BigUint {
    let mut a: Vec<BigInt> = vec![BigInt::one()];
    for m in 1..=n {
        let mut total = BigInt::zero();
        let mut binom = BigInt::one();
        for k in 1..=m {
            binom = binom * BigInt::from(m - k + 1) / BigInt::from(k);
            let term = &binom * (BigInt::one() << (k * (m - k))) * &a[m - k];
            if k % 2 == 1 {
                total += term;
            } else {
                total -= term;
            }
        }
        a.push(total);
    }
    let last = a.pop().expect("a_0 always present");
    debug_assert!(!last.is_negative());
    last.to_biguint().expect("DAG counts are non-negative")
}

/// Every labelled DAG on `n` nodes, in order of their off-diagonal code.
pub fn enumerate_dags(n: usize) -> Result<Vec<Graph>, GraphError> {
    if n > MAX_ENUMERATION_NODES {
        return Err(GraphError::TooManyNodes(n));
    }
    let positions = n * n.saturating_sub(1);
    let mut scratch = TopoScratch::new(n);
    Ok((0..1u64 << positions)
        .map(|code| Graph::from_offdiagonal_code(n, code))
        .filter(|g| g.is_dag_with(&mut scratch))
        .collect())
}
