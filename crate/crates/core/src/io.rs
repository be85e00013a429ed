//! Data and matrix files, run outputs and the binary accumulator dump.
//!
//! Text matrices are whitespace-delimited, one row per line; blank lines and
//! lines starting with `#` are skipped. Node numbers in messages are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::{DataError, DataKind, DataSet};
use crate::diagnostics::{accuracy_curve, degree_histogram, threshold_graph, threshold_grid, EdgeMatrix};
use crate::graph::{Graph, GraphError};
use crate::priors::{count_motifs, PriorSpec};
use crate::sampler::{log_posterior, RunResult, SamplerError};
use crate::score::Scorer;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: file has no data rows", path.display())]
    EmptyFile { path: PathBuf },
    #[error("{}: line {line} has {got} fields, expected {expected}", path.display())]
    Shape { path: PathBuf, line: usize, expected: usize, got: usize },
    #[error("{}: line {line}, field {field}: `{token}` is not a number", path.display())]
    NotANumber { path: PathBuf, line: usize, field: usize, token: String },
    #[error("{}: line {line}, field {field}: discrete value `{token}` is not a non-negative integer", path.display())]
    NonIntegerDiscrete { path: PathBuf, line: usize, field: usize, token: String },
    #[error("{}: {message}", path.display())]
    Matrix { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Data { path: PathBuf, source: DataError },
    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: GraphError },
    #[error("rescoring the best graph: {0}")]
    Rescore(#[from] SamplerError),
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Non-comment lines as `(1-based line number, fields)`.
fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

/// Reads a rectangular numeric table; every row must match the first, or
/// `width` when given.
fn read_table(path: &Path, width: Option<usize>) -> Result<Vec<Vec<f64>>, IoError> {
    let text = read_text(path)?;
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (line, fields) in rows(&text) {
        let expected = width.or(out.first().map(Vec::len)).unwrap_or(fields.len());
        if fields.len() != expected {
            return Err(IoError::Shape { path: path.to_path_buf(), line, expected, got: fields.len() });
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(k, t)| {
                t.parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(|| IoError::NotANumber {
                    path: path.to_path_buf(),
                    line,
                    field: k + 1,
                    token: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    if out.is_empty() {
        return Err(IoError::EmptyFile { path: path.to_path_buf() });
    }
    Ok(out)
}

/// Loads an observation matrix: one row per observation, one column per
/// node. Discrete arities are inferred as `max code + 1` unless given.
pub fn load_data(
    path: &Path,
    kind: DataKind,
    n_nodes: Option<usize>,
    arities: Option<&[u32]>,
) -> Result<DataSet, IoError> {
    let table = read_table(path, n_nodes)?;
    let n = table[0].len();
    let data_err = |source| IoError::Data { path: path.to_path_buf(), source };
    match kind {
        DataKind::Continuous => {
            let columns = (0..n).map(|j| table.iter().map(|r| r[j]).collect()).collect();
            DataSet::continuous(columns).map_err(data_err)
        }
        DataKind::Discrete => {
            let text = read_text(path)?;
            let mut columns = vec![Vec::with_capacity(table.len()); n];
            for ((line, fields), row) in rows(&text).zip(&table) {
                for (j, &v) in row.iter().enumerate() {
                    if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                        return Err(IoError::NonIntegerDiscrete {
                            path: path.to_path_buf(),
                            line,
                            field: j + 1,
                            token: fields[j].to_string(),
                        });
                    }
                    columns[j].push(v as u32);
                }
            }
            match arities {
                Some(a) => DataSet::discrete(columns, a.to_vec()),
                None => DataSet::discrete_inferred(columns),
            }
            .map_err(data_err)
        }
    }
}

/// Reads a square matrix and returns `(N, row-major values)`.
pub fn read_square_matrix(path: &Path, n_nodes: Option<usize>) -> Result<(usize, Vec<f64>), IoError> {
    let table = read_table(path, n_nodes)?;
    let n = table[0].len();
    if table.len() != n {
        return Err(IoError::Matrix {
            path: path.to_path_buf(),
            message: format!("expected a square matrix, got {} rows of {n}", table.len()),
        });
    }
    Ok((n, table.into_iter().flatten().collect()))
}

pub fn read_graph(path: &Path, n_nodes: Option<usize>) -> Result<Graph, IoError> {
    let (n, values) = read_square_matrix(path, n_nodes)?;
    let rows: Vec<&[f64]> = values.chunks(n).collect();
    Graph::from_rows(&rows).map_err(|source| IoError::Graph { path: path.to_path_buf(), source })
}

/// Bernoulli edge-probability matrix; the diagonal is forced to zero.
pub fn read_bernoulli(path: &Path, n_nodes: usize) -> Result<Vec<f64>, IoError> {
    let (n, mut values) = read_square_matrix(path, Some(n_nodes))?;
    for i in 0..n {
        values[i * n + i] = 0.0;
    }
    Ok(values)
}

/// Concordance matrix of `+1` (desired) and `-1` (undesired) entries; the
/// diagonal is ignored.
pub fn read_concordance(path: &Path, n_nodes: usize) -> Result<Vec<i8>, IoError> {
    let (n, values) = read_square_matrix(path, Some(n_nodes))?;
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| match v {
            _ if k / n == k % n => Ok(0),
            1.0 => Ok(1),
            -1.0 => Ok(-1),
            _ => Err(IoError::Matrix {
                path: path.to_path_buf(),
                message: format!("entry ({}, {}) = {v}; concordance entries must be 1 or -1", k / n + 1, k % n + 1),
            }),
        })
        .collect()
}

fn graph_rows(g: &Graph) -> String {
    let n = g.n_nodes();
    let mut s = String::new();
    for i in 0..n {
        let row: Vec<&str> = (0..n).map(|j| if g.has_edge(i, j) { "1" } else { "0" }).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn matrix_rows(m: &EdgeMatrix) -> String {
    let mut s = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<(), IoError> {
    write_text(path, &graph_rows(g))
}

pub fn write_edge_matrix(path: &Path, m: &EdgeMatrix) -> Result<(), IoError> {
    write_text(path, &matrix_rows(m))
}

/// Writes observations one row per line; continuous values use the shortest
/// representation that reads back exactly.
pub fn write_data(path: &Path, data: &DataSet) -> Result<(), IoError> {
    let mut s = String::new();
    for row in 0..data.n_obs() {
        let cells: Vec<String> = match data.kind() {
            DataKind::Continuous => (0..data.n_nodes()).map(|j| format!("{}", data.value(row, j))).collect(),
            DataKind::Discrete => {
                (0..data.n_nodes()).map(|j| data.discrete_column(j).expect("discrete")[row].to_string()).collect()
            }
        };
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    write_text(path, &s)
}

/// Reads a `best_graph.out` file: the recorded log posterior and the graph.
pub fn read_best_graph(path: &Path) -> Result<(f64, Graph), IoError> {
    let text = read_text(path)?;
    let lp = text
        .lines()
        .find_map(|l| l.trim().strip_prefix("# log_posterior ="))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| IoError::Matrix { path: path.to_path_buf(), message: "missing `# log_posterior =` line".into() })?;
    Ok((lp, read_graph(path, None)?))
}

pub const RESULTS_MAGIC: &[u8; 4] = b"GSMC";
pub const RESULTS_VERSION: u32 = 1;

/// Per-chain edge occupancy counts as stored in `results_mcmc.bin`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsDump {
    pub n_nodes: usize,
    pub n_samples: u64,
    /// One row-major N×N count vector per chain.
    pub occupancy: Vec<Vec<u64>>,
}

/// Little-endian layout: magic `GSMC`, `u32` version, `u32` N, `u32` chain
/// count, `u64` samples per chain, then N² `u64` occupancy counts per chain.
pub fn encode_results(dump: &ResultsDump) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + dump.occupancy.len() * dump.n_nodes * dump.n_nodes * 8);
    out.extend_from_slice(RESULTS_MAGIC);
    out.extend_from_slice(&RESULTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(dump.n_nodes as u32).to_le_bytes());
    out.extend_from_slice(&(dump.occupancy.len() as u32).to_le_bytes());
    out.extend_from_slice(&dump.n_samples.to_le_bytes());
    for chain in &dump.occupancy {
        for &c in chain {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn read_results(path: &Path) -> Result<ResultsDump, IoError> {
    let bad = |message: &str| IoError::Matrix { path: path.to_path_buf(), message: message.into() };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    if bytes.len() < 24 || &bytes[..4] != RESULTS_MAGIC {
        return Err(bad("not a results dump"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    if u32_at(4) != RESULTS_VERSION {
        return Err(bad("unsupported results dump version"));
    }
    let n = u32_at(8) as usize;
    let chains = u32_at(12) as usize;
    let n_samples = u64_at(16);
    if bytes.len() != 24 + chains * n * n * 8 {
        return Err(bad("truncated results dump"));
    }
    let occupancy = (0..chains)
        .map(|c| (0..n * n).map(|e| u64_at(24 + (c * n * n + e) * 8)).collect())
        .collect();
    Ok(ResultsDump { n_nodes: n, n_samples, occupancy })
}

/// What the writers need beyond the run result itself.
pub struct OutputContext<'a, 'd> {
    pub priors: &'a PriorSpec,
    pub scorer: &'a Scorer<'d>,
    pub truth: Option<&'a Graph>,
    pub accuracy_step: f64,
}

pub fn output_path(prefix: &str, name: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{name}"))
}

/// Writes the run's output files under `prefix` and returns their paths.
pub fn write_outputs(result: &RunResult, ctx: &OutputContext<'_, '_>, prefix: &str) -> Result<Vec<PathBuf>, IoError> {
    let mut written = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<(), IoError> {
        let path = output_path(prefix, name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };

    emit("edge_p.out", matrix_rows(&result.edge_probability))?;

    let best_lp = log_posterior(&result.best_graph, ctx.priors, ctx.scorer)?;
    emit("best_graph.out", format!("# log_posterior = {best_lp}\n{}", graph_rows(&result.best_graph)))?;

    let consensus = threshold_graph(&result.edge_probability, 0.5);
    let best_deg = degree_histogram(&result.best_graph);
    let cons_deg = degree_histogram(&consensus);
    let mut s = String::from("# out_degree best_graph threshold_0.5\n");
    for (d, (b, c)) in best_deg.iter().zip(&cons_deg).enumerate() {
        writeln!(s, "{d} {b} {c}").expect("write to String");
    }
    emit("degree_count.out", s)?;

    let mut s = String::from("# graph three_cycles feed_forward_loops\n");
    for (name, g) in [("best_graph", &result.best_graph), ("threshold_0.5", &consensus)] {
        let m = count_motifs(g);
        writeln!(s, "{name} {} {}", m.cycles, m.feed_forward).expect("write to String");
    }
    emit("motifs_count.out", s)?;

    if result.chains.iter().any(|c| !c.samples.is_empty()) {
        let mut s = String::new();
        for (c, chain) in result.chains.iter().enumerate() {
            for (t, g) in &chain.samples {
                writeln!(s, "# chain {} iteration {t}", c + 1).expect("write to String");
                s.push_str(&graph_rows(g));
            }
        }
        emit("graph_samples.out", s)?;
    }

    if let Some(rhat) = &result.rhat {
        emit("rhat.out", matrix_rows(rhat))?;
    }

    if let Some(truth) = ctx.truth {
        let curve = accuracy_curve(&result.edge_probability, truth, &threshold_grid(ctx.accuracy_step))
            .map_err(|e| IoError::Matrix { path: output_path(prefix, "accuracy.out"), message: e.to_string() })?;
        let mut s = String::from("# threshold accuracy\n");
        for (t, a) in curve {
            writeln!(s, "{t:.4} {a:.6}").expect("write to String");
        }
        emit("accuracy.out", s)?;
    }

    let dump = ResultsDump {
        n_nodes: result.n_nodes,
        n_samples: result.chains[0].n_samples,
        occupancy: result.chains.iter().map(|c| c.occupancy.clone()).collect(),
    };
    let path = output_path(prefix, "results_mcmc.bin");
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(&encode_results(&dump)))
        .map_err(|source| IoError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(written)
}
