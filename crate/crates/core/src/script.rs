//! The `key = value;` run script.
//!
//! ```text
//! # three binary nodes
//! n_nodes = 3;
//! data_file = "data.txt";
//! likelihood = dirichlet;
//! seeds = {11, 12, 13};
//! ```
//!
//! Values are numbers, double-quoted strings, bare identifiers or
//! brace-delimited lists of those. `#` starts a comment that runs to the end
//! of the line. Every key is range-checked as it is read; unknown and repeated
//! keys are errors.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::data::DataKind;
use crate::diagnostics::DEFAULT_RHAT_THRESHOLD;
use crate::score::{ModelSpec, NormalGammaParams, DEFAULT_CACHE_CAPACITY};
use crate::sim::SimSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptError {
    Parse { line: usize, column: usize, message: String },
    Validation { key: String, at: Option<(usize, usize)>, message: String },
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptError::Parse { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            ScriptError::Validation { key, at: Some((line, column)), message } => {
                write!(f, "line {line}, column {column}: `{key}` {message}")
            }
            ScriptError::Validation { key, at: None, message } => write!(f, "`{key}` {message}"),
        }
    }
}

impl std::error::Error for ScriptError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Likelihood {
    Dirichlet,
    NormalGamma,
    Zellner,
}

impl Likelihood {
    pub fn data_kind(self) -> DataKind {
        match self {
            Likelihood::Dirichlet => DataKind::Discrete,
            Likelihood::NormalGamma | Likelihood::Zellner => DataKind::Continuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimNetwork {
    /// Binary descending tree over `sim_nodes` nodes.
    Tree,
    /// Adjacency matrix read from `sim_graph_file`.
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptConfig {
    pub n_nodes: Option<usize>,
    pub data_file: Option<PathBuf>,
    pub likelihood: Likelihood,
    pub alpha: f64,
    pub omega: f64,
    pub beta0: f64,
    pub n0_scale: f64,
    pub g: f64,
    pub pseudo_count: f64,
    pub arities: Option<Vec<u32>>,

    pub bernoulli_p: f64,
    pub bernoulli_file: Option<PathBuf>,
    pub concordance_file: Option<PathBuf>,
    pub rho: f64,
    pub degree_gamma: Option<f64>,

    pub n_iterations: u64,
    pub burn_in: u64,
    pub n_chains: usize,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub sample_stride: u64,
    pub batch_length: u64,
    pub prior_only: bool,
    pub random_scan: bool,
    pub gelman_rubin: bool,
    pub cache_capacity: usize,
    pub initial_graph_file: Option<PathBuf>,
    pub true_graph_file: Option<PathBuf>,
    pub rhat_threshold: f64,
    pub accuracy_step: f64,

    pub sim_network: SimNetwork,
    pub sim_nodes: Option<usize>,
    pub sim_graph_file: Option<PathBuf>,
    pub sim_data: DataKind,
    pub sim: SimSpec,
    pub sim_data_output: PathBuf,
    pub sim_graph_output: PathBuf,

    /// 0-based probe pair.
    pub probe_i: Option<usize>,
    pub probe_j: Option<usize>,
    pub probe_base_graph_file: Option<PathBuf>,
}

impl Default for ScriptConfig {
    fn default() -> Self {
        let ng = NormalGammaParams::default();
        Self {
            n_nodes: None,
            data_file: None,
            likelihood: Likelihood::NormalGamma,
            alpha: ng.alpha,
            omega: ng.omega,
            beta0: ng.beta0,
            n0_scale: ng.n0_scale,
            g: 1.0,
            pseudo_count: 1.0,
            arities: None,
            bernoulli_p: 0.5,
            bernoulli_file: None,
            concordance_file: None,
            rho: 1.0,
            degree_gamma: None,
            n_iterations: 100_000,
            burn_in: 10_000,
            n_chains: 3,
            seed: 1,
            seeds: Vec::new(),
            sample_stride: 0,
            batch_length: 10_000,
            prior_only: false,
            random_scan: false,
            gelman_rubin: true,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            initial_graph_file: None,
            true_graph_file: None,
            rhat_threshold: DEFAULT_RHAT_THRESHOLD,
            accuracy_step: 0.05,
            sim_network: SimNetwork::Tree,
            sim_nodes: None,
            sim_graph_file: None,
            sim_data: DataKind::Discrete,
            sim: SimSpec::default(),
            sim_data_output: PathBuf::from("sim_data.txt"),
            sim_graph_output: PathBuf::from("sim_graph.txt"),
            probe_i: None,
            probe_j: None,
            probe_base_graph_file: None,
        }
    }
}

impl ScriptConfig {
    pub fn model(&self) -> ModelSpec {
        match self.likelihood {
            Likelihood::Dirichlet => ModelSpec::Dirichlet { pseudo_count: self.pseudo_count },
            Likelihood::Zellner => ModelSpec::Zellner { g: self.g },
            Likelihood::NormalGamma => ModelSpec::NormalGamma(NormalGammaParams {
                alpha: self.alpha,
                omega: self.omega,
                beta0: self.beta0,
                n0_scale: self.n0_scale,
            }),
        }
    }

    /// Joins every relative file path onto `base`. Output paths for the
    /// simulator are left alone.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.data_file,
            &mut self.bernoulli_file,
            &mut self.concordance_file,
            &mut self.initial_graph_file,
            &mut self.true_graph_file,
            &mut self.sim_graph_file,
            &mut self.probe_base_graph_file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number { value: f64, text: String },
    Str(String),
    Ident(String),
    List(Vec<(Value, (usize, usize))>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Number { .. } => "a number",
            Value::Str(_) => "a string",
            Value::Ident(_) => "an identifier",
            Value::List(_) => "a list",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64, String),
    Str(String),
    Sym(char),
    Eof,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(line: usize, column: usize, message: impl Into<String>) -> ScriptError {
        ScriptError::Parse { line, column, message: message.into() }
    }

    fn next(&mut self) -> Result<(Tok, (usize, usize)), ScriptError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while self.chars.peek().is_some_and(|&c| c != '\n') {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let at = (self.line, self.column);
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, at));
        };
        let tok = match c {
            '=' | ';' | '{' | '}' | ',' => {
                self.bump();
                Tok::Sym(c)
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            _ => return Err(Self::error(at.0, at.1, "bad escape in string")),
                        },
                        Some('\n') | None => return Err(Self::error(at.0, at.1, "unterminated string")),
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut text = String::new();
                while let Some(&ch) = self.chars.peek() {
                    let exponent_sign = (ch == '-' || ch == '+') && text.ends_with(['e', 'E']);
                    if ch.is_ascii_alphanumeric() || ch == '.' || exponent_sign || text.is_empty() {
                        text.push(ch);
                        self.bump();
                    } else {
                        break;
                    }
                }
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => Tok::Number(v, text),
                    _ => return Err(Self::error(at.0, at.1, format!("malformed number `{text}`"))),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&ch) = self.chars.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        s.push(ch);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(Self::error(at.0, at.1, format!("unexpected character `{other}`"))),
        };
        Ok((tok, at))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, (usize, usize))>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&(Tok, (usize, usize)), ScriptError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn next(&mut self) -> Result<(Tok, (usize, usize)), ScriptError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn expect(&mut self, sym: char, context: &str) -> Result<(), ScriptError> {
        let (tok, (line, column)) = self.next()?;
        if tok == Tok::Sym(sym) {
            Ok(())
        } else {
            Err(ScriptError::Parse { line, column, message: format!("expected `{sym}` {context}, found {}", show(&tok)) })
        }
    }

    fn value(&mut self) -> Result<(Value, (usize, usize)), ScriptError> {
        let (tok, at) = self.next()?;
        let v = match tok {
            Tok::Number(value, text) => Value::Number { value, text },
            Tok::Str(s) => Value::Str(s),
            Tok::Ident(s) => Value::Ident(s),
            Tok::Sym('{') => {
                let mut items = Vec::new();
                if self.peek()?.0 == Tok::Sym('}') {
                    self.next()?;
                } else {
                    loop {
                        let item = self.value()?;
                        if matches!(item.0, Value::List(_)) {
                            return Err(ScriptError::Parse {
                                line: item.1 .0,
                                column: item.1 .1,
                                message: "lists cannot be nested".into(),
                            });
                        }
                        items.push(item);
                        let (t, (line, column)) = self.next()?;
                        match t {
                            Tok::Sym(',') => continue,
                            Tok::Sym('}') => break,
                            other => {
                                return Err(ScriptError::Parse {
                                    line,
                                    column,
                                    message: format!("expected `,` or `}}` in list, found {}", show(&other)),
                                })
                            }
                        }
                    }
                }
                Value::List(items)
            }
            other => {
                return Err(ScriptError::Parse {
                    line: at.0,
                    column: at.1,
                    message: format!("expected a value, found {}", show(&other)),
                })
            }
        };
        Ok((v, at))
    }
}

fn show(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(_, t) => format!("`{t}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// One assignment as read, before interpretation.
struct Statement {
    key: String,
    key_at: (usize, usize),
    value: Value,
    value_at: (usize, usize),
}

fn statements(text: &str) -> Result<Vec<Statement>, ScriptError> {
    let mut p = Parser { lexer: Lexer::new(text), peeked: None };
    let mut out = Vec::new();
    loop {
        let (tok, key_at) = p.next()?;
        let key = match tok {
            Tok::Eof => return Ok(out),
            Tok::Ident(k) => k,
            other => {
                return Err(ScriptError::Parse {
                    line: key_at.0,
                    column: key_at.1,
                    message: format!("expected a key, found {}", show(&other)),
                })
            }
        };
        p.expect('=', &format!("after `{key}`"))?;
        let (value, value_at) = p.value()?;
        p.expect(';', &format!("after the value of `{key}`"))?;
        out.push(Statement { key, key_at, value, value_at });
    }
}

struct Field<'s> {
    key: &'s str,
    value: &'s Value,
    at: (usize, usize),
}

impl Field<'_> {
    fn invalid(&self, message: impl Into<String>) -> ScriptError {
        ScriptError::Validation { key: self.key.to_string(), at: Some(self.at), message: message.into() }
    }

    fn number(&self) -> Result<f64, ScriptError> {
        match self.value {
            Value::Number { value, .. } => Ok(*value),
            other => Err(self.invalid(format!("expects a number, got {}", other.describe()))),
        }
    }

    fn real(&self, range: &str, ok: impl Fn(f64) -> bool) -> Result<f64, ScriptError> {
        let v = self.number()?;
        if ok(v) {
            Ok(v)
        } else {
            Err(self.invalid(format!("must be {range}, got {v}")))
        }
    }

    fn positive(&self) -> Result<f64, ScriptError> {
        self.real("> 0", |v| v > 0.0)
    }

    fn probability(&self) -> Result<f64, ScriptError> {
        self.real("in [0, 1]", |v| (0.0..=1.0).contains(&v))
    }

    fn integer_value(&self, v: &Value, min: u64) -> Result<u64, ScriptError> {
        let Value::Number { value, .. } = v else {
            return Err(self.invalid(format!("expects an integer, got {}", v.describe())));
        };
        if value.fract() != 0.0 || *value < 0.0 || *value > 9_007_199_254_740_992.0 {
            return Err(self.invalid(format!("expects a non-negative integer, got {value}")));
        }
        let n = *value as u64;
        if n < min {
            return Err(self.invalid(format!("must be >= {min}, got {n}")));
        }
        Ok(n)
    }

    fn integer(&self, min: u64) -> Result<u64, ScriptError> {
        self.integer_value(self.value, min)
    }

    fn count(&self, min: u64) -> Result<usize, ScriptError> {
        let n = self.integer(min)?;
        usize::try_from(n).map_err(|_| self.invalid("is too large"))
    }

    fn integer_list(&self, min: u64) -> Result<Vec<u64>, ScriptError> {
        match self.value {
            Value::List(items) => items.iter().map(|(v, _)| self.integer_value(v, min)).collect(),
            Value::Number { .. } => Ok(vec![self.integer(min)?]),
            other => Err(self.invalid(format!("expects a list of integers, got {}", other.describe()))),
        }
    }

    fn boolean(&self) -> Result<bool, ScriptError> {
        match self.value {
            Value::Ident(s) if s == "true" || s == "yes" => Ok(true),
            Value::Ident(s) if s == "false" || s == "no" => Ok(false),
            Value::Number { value, .. } if *value == 1.0 => Ok(true),
            Value::Number { value, .. } if *value == 0.0 => Ok(false),
            _ => Err(self.invalid("must be true or false")),
        }
    }

    fn path(&self) -> Result<PathBuf, ScriptError> {
        match self.value {
            Value::Str(s) if !s.is_empty() => Ok(PathBuf::from(s)),
            Value::Ident(s) => Ok(PathBuf::from(s)),
            _ => Err(self.invalid("expects a non-empty quoted file name")),
        }
    }

    fn word(&self) -> Result<&str, ScriptError> {
        match self.value {
            Value::Ident(s) | Value::Str(s) => Ok(s),
            other => Err(self.invalid(format!("expects a name, got {}", other.describe()))),
        }
    }

    fn choice<T: Copy>(&self, options: &[(&str, T)]) -> Result<T, ScriptError> {
        let w = self.word()?;
        options.iter().find(|(name, _)| *name == w).map(|&(_, v)| v).ok_or_else(|| {
            let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
            self.invalid(format!("must be one of {}, got `{w}`", names.join(", ")))
        })
    }
}

/// Every key the script accepts.
pub const KEYS: &[&str] = &[
    "n_nodes", "data_file", "likelihood", "alpha", "omega", "beta0", "n0_scale", "g", "pseudo_count", "arities",
    "bernoulli_p", "bernoulli_file", "concordance_file", "rho", "degree_gamma",
    "n_iterations", "burn_in", "n_chains", "seed", "seeds", "sample_stride", "batch_length", "prior_only",
    "random_scan", "gelman_rubin", "cache_capacity", "initial_graph_file", "true_graph_file", "rhat_threshold",
    "accuracy_step",
    "sim_network", "sim_nodes", "sim_graph_file", "sim_data", "sim_n_obs", "sim_beta", "sim_intercept",
    "sim_lambda", "sim_p_root", "sim_p_active", "sim_p_inactive", "sim_seed", "sim_data_output",
    "sim_graph_output",
    "probe_i", "probe_j", "probe_base_graph_file",
];

fn apply(cfg: &mut ScriptConfig, f: &Field<'_>) -> Result<(), ScriptError> {
    match f.key {
        "n_nodes" => cfg.n_nodes = Some(f.count(1)?),
        "data_file" => cfg.data_file = Some(f.path()?),
        "likelihood" => {
            cfg.likelihood = f.choice(&[
                ("dirichlet", Likelihood::Dirichlet),
                ("normal_gamma", Likelihood::NormalGamma),
                ("zellner", Likelihood::Zellner),
            ])?
        }
        "alpha" => cfg.alpha = f.positive()?,
        "omega" => cfg.omega = f.positive()?,
        "beta0" => cfg.beta0 = f.number()?,
        "n0_scale" => cfg.n0_scale = f.positive()?,
        "g" => cfg.g = f.positive()?,
        "pseudo_count" => cfg.pseudo_count = f.positive()?,
        "arities" => {
            let a = f.integer_list(2)?;
            let a = a.into_iter().map(u32::try_from).collect::<Result<Vec<_>, _>>().map_err(|_| f.invalid("entry is too large"))?;
            cfg.arities = Some(a);
        }
        "bernoulli_p" => cfg.bernoulli_p = f.probability()?,
        "bernoulli_file" => cfg.bernoulli_file = Some(f.path()?),
        "concordance_file" => cfg.concordance_file = Some(f.path()?),
        "rho" => cfg.rho = f.positive()?,
        "degree_gamma" => cfg.degree_gamma = Some(f.positive()?),
        "n_iterations" => cfg.n_iterations = f.integer(1)?,
        "burn_in" => cfg.burn_in = f.integer(0)?,
        "n_chains" => cfg.n_chains = f.count(1)?,
        "seed" => cfg.seed = f.integer(0)?,
        "seeds" => cfg.seeds = f.integer_list(0)?,
        "sample_stride" => cfg.sample_stride = f.integer(0)?,
        "batch_length" => cfg.batch_length = f.integer(1)?,
        "prior_only" => cfg.prior_only = f.boolean()?,
        "random_scan" => cfg.random_scan = f.boolean()?,
        "gelman_rubin" => cfg.gelman_rubin = f.boolean()?,
        "cache_capacity" => cfg.cache_capacity = f.count(0)?,
        "initial_graph_file" => cfg.initial_graph_file = Some(f.path()?),
        "true_graph_file" => cfg.true_graph_file = Some(f.path()?),
        "rhat_threshold" => cfg.rhat_threshold = f.real(">= 1", |v| v >= 1.0)?,
        "accuracy_step" => cfg.accuracy_step = f.real("in (0, 1]", |v| v > 0.0 && v <= 1.0)?,
        "sim_network" => cfg.sim_network = f.choice(&[("tree", SimNetwork::Tree), ("file", SimNetwork::File)])?,
        "sim_nodes" => cfg.sim_nodes = Some(f.count(1)?),
        "sim_graph_file" => cfg.sim_graph_file = Some(f.path()?),
        "sim_data" => {
            cfg.sim_data = f.choice(&[("discrete", DataKind::Discrete), ("continuous", DataKind::Continuous)])?
        }
        "sim_n_obs" => cfg.sim.n_obs = f.count(1)?,
        "sim_beta" => cfg.sim.beta = f.number()?,
        "sim_intercept" => cfg.sim.intercept = f.number()?,
        "sim_lambda" => cfg.sim.lambda = f.positive()?,
        "sim_p_root" => cfg.sim.p_root = f.probability()?,
        "sim_p_active" => cfg.sim.p_active = f.probability()?,
        "sim_p_inactive" => cfg.sim.p_inactive = f.probability()?,
        "sim_seed" => cfg.sim.seed = f.integer(0)?,
        "sim_data_output" => cfg.sim_data_output = f.path()?,
        "sim_graph_output" => cfg.sim_graph_output = f.path()?,
        "probe_i" => cfg.probe_i = Some(f.count(1)? - 1),
        "probe_j" => cfg.probe_j = Some(f.count(1)? - 1),
        "probe_base_graph_file" => cfg.probe_base_graph_file = Some(f.path()?),
        other => unreachable!("key `{other}` is listed but not handled"),
    }
    Ok(())
}

/// Parses and validates a script. Omitted keys keep their defaults.
pub fn parse_script(text: &str) -> Result<ScriptConfig, ScriptError> {
    let mut cfg = ScriptConfig::default();
    let mut seen: HashMap<&str, (usize, usize)> = HashMap::new();
    let stmts = statements(text)?;
    for s in &stmts {
        let Some(&key) = KEYS.iter().find(|&&k| k == s.key) else {
            return Err(ScriptError::Parse {
                line: s.key_at.0,
                column: s.key_at.1,
                message: format!("unknown key `{}`", s.key),
            });
        };
        if let Some((line, _)) = seen.insert(key, s.key_at) {
            return Err(ScriptError::Parse {
                line: s.key_at.0,
                column: s.key_at.1,
                message: format!("`{key}` is already set on line {line}"),
            });
        }
        apply(&mut cfg, &Field { key, value: &s.value, at: s.value_at })?;
    }

    let at = |k: &str| seen.get(k).copied();
    let invalid = |key: &str, message: String| ScriptError::Validation { key: key.into(), at: at(key), message };

    if !seen.contains_key("gelman_rubin") && cfg.n_chains < 2 {
        cfg.gelman_rubin = false;
    }
    if cfg.burn_in >= cfg.n_iterations {
        return Err(invalid("burn_in", format!("({}) must be smaller than n_iterations ({})", cfg.burn_in, cfg.n_iterations)));
    }
    if cfg.gelman_rubin {
        if cfg.n_chains < 2 {
            return Err(invalid("gelman_rubin", "needs n_chains >= 2".into()));
        }
        if (cfg.n_iterations - cfg.burn_in) / cfg.batch_length < 2 {
            return Err(invalid(
                "batch_length",
                format!(
                    "({}) must fit at least twice into the {} post-burn-in iterations",
                    cfg.batch_length,
                    cfg.n_iterations - cfg.burn_in
                ),
            ));
        }
    }
    if cfg.seeds.len() > cfg.n_chains {
        return Err(invalid("seeds", format!("lists {} seeds for {} chains", cfg.seeds.len(), cfg.n_chains)));
    }
    if let (Some(n), Some(a)) = (cfg.n_nodes, &cfg.arities) {
        if a.len() != n {
            return Err(invalid("arities", format!("lists {} arities for {n} nodes", a.len())));
        }
    }
    if cfg.arities.is_some() && cfg.likelihood != Likelihood::Dirichlet {
        return Err(invalid("arities", "only applies to likelihood = dirichlet".into()));
    }
    if cfg.sim_network == SimNetwork::File && cfg.sim_graph_file.is_none() && seen.contains_key("sim_network") {
        return Err(invalid("sim_graph_file", "is required when sim_network = file".into()));
    }
    if let (Some(i), Some(j)) = (cfg.probe_i, cfg.probe_j) {
        if i == j {
            return Err(invalid("probe_j", "must differ from probe_i".into()));
        }
        if let Some(n) = cfg.n_nodes {
            if i >= n || j >= n {
                return Err(invalid("probe_i", format!("probe nodes must lie in 1..={n}")));
            }
        }
    }
    Ok(cfg)
}
