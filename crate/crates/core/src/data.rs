//! Observed node values, stored column-wise (one column per node).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("data set has no observations")]
    Empty,
    #[error("column {node} has {got} observations, expected {expected}")]
    RaggedColumns { node: usize, expected: usize, got: usize },
    #[error("non-finite value at observation {row}, node {node}")]
    NonFinite { row: usize, node: usize },
    #[error("category {value} at observation {row}, node {node} is outside 0..{arity}")]
    CodeOutOfRange { row: usize, node: usize, value: u32, arity: u32 },
    #[error("node {node} has arity {arity}; discrete nodes need at least two categories")]
    DegenerateArity { node: usize, arity: u32 },
    #[error("{got} arities given for {expected} nodes")]
    ArityCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Continuous(Vec<Vec<f64>>),
    Discrete { columns: Vec<Vec<u32>>, arities: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    n_obs: usize,
    values: Values,
}

fn check_columns<T>(columns: &[Vec<T>]) -> Result<usize, DataError> {
    let n_obs = columns.first().map_or(0, Vec::len);
    if n_obs == 0 {
        return Err(DataError::Empty);
    }
    for (node, col) in columns.iter().enumerate() {
        if col.len() != n_obs {
            return Err(DataError::RaggedColumns { node, expected: n_obs, got: col.len() });
        }
    }
    Ok(n_obs)
}

impl DataSet {
    pub fn continuous(columns: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let n_obs = check_columns(&columns)?;
        for (node, col) in columns.iter().enumerate() {
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row, node });
            }
        }
        Ok(Self { n_obs, values: Values::Continuous(columns) })
    }

    /// Discrete columns with explicit arities.
    pub fn discrete(columns: Vec<Vec<u32>>, arities: Vec<u32>) -> Result<Self, DataError> {
        let n_obs = check_columns(&columns)?;
        if arities.len() != columns.len() {
            return Err(DataError::ArityCount { expected: columns.len(), got: arities.len() });
        }
        for (node, (col, &arity)) in columns.iter().zip(&arities).enumerate() {
            if arity < 2 {
                return Err(DataError::DegenerateArity { node, arity });
            }
            if let Some(row) = col.iter().position(|&v| v >= arity) {
                return Err(DataError::CodeOutOfRange { row, node, value: col[row], arity });
            }
        }
        Ok(Self { n_obs, values: Values::Discrete { columns, arities } })
    }

    /// Discrete columns with arities inferred as `max code + 1`.
    pub fn discrete_inferred(columns: Vec<Vec<u32>>) -> Result<Self, DataError> {
        let arities = columns.iter().map(|c| c.iter().max().map_or(0, |m| m + 1)).collect();
        Self::discrete(columns, arities)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_nodes(&self) -> usize {
        match &self.values {
            Values::Continuous(c) => c.len(),
            Values::Discrete { columns, .. } => columns.len(),
        }
    }

    pub fn kind(&self) -> DataKind {
        match self.values {
            Values::Continuous(_) => DataKind::Continuous,
            Values::Discrete { .. } => DataKind::Discrete,
        }
    }

    pub fn continuous_column(&self, node: usize) -> Option<&[f64]> {
        match &self.values {
            Values::Continuous(c) => Some(&c[node]),
            Values::Discrete { .. } => None,
        }
    }

    pub fn discrete_column(&self, node: usize) -> Option<&[u32]> {
        match &self.values {
            Values::Discrete { columns, .. } => Some(&columns[node]),
            Values::Continuous(_) => None,
        }
    }

    pub fn arities(&self) -> Option<&[u32]> {
        match &self.values {
            Values::Discrete { arities, .. } => Some(arities),
            Values::Continuous(_) => None,
        }
    }

    /// Every column as reals; discrete codes map to their integer value.
    pub fn real_columns(&self) -> Vec<Vec<f64>> {
        match &self.values {
            Values::Continuous(c) => c.clone(),
            Values::Discrete { columns, .. } => {
                columns.iter().map(|c| c.iter().map(|&v| f64::from(v)).collect()).collect()
            }
        }
    }

    /// Value of `node` at observation `row`, as a real.
    pub fn value(&self, row: usize, node: usize) -> f64 {
        match &self.values {
            Values::Continuous(c) => c[node][row],
            Values::Discrete { columns, .. } => f64::from(columns[node][row]),
        }
    }
}
