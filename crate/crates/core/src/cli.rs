//! Drivers behind the command-line subcommands.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use crate::data::{DataKind, DataSet};
use crate::diagnostics::{accuracy_curve, converged, flip_gap_probe, FlipGap};
use crate::graph::{count_dags, Graph};
use crate::io::{load_data, read_bernoulli, read_concordance, read_graph, write_data, write_graph, write_outputs, OutputContext};
use crate::priors::PriorSpec;
use crate::sampler::{run_chains, RunConfig, RunResult};
use crate::score::{ModelSpec, Scorer};
use crate::script::{parse_script, ScriptConfig, SimNetwork};
use crate::sim::{gen_tree_network, sim_continuous, sim_discrete};

/// The step of a command that failed; each maps to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Script,
    Data,
    Prior,
    Model,
    Sampling,
    Output,
    Simulation,
    Probe,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Script => 3,
            Stage::Data => 4,
            Stage::Prior => 5,
            Stage::Model => 6,
            Stage::Sampling => 7,
            Stage::Output => 8,
            Stage::Simulation => 9,
            Stage::Probe => 10,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Stage::Script => "script",
            Stage::Data => "data",
            Stage::Prior => "prior",
            Stage::Model => "model",
            Stage::Sampling => "sampling",
            Stage::Output => "output",
            Stage::Simulation => "simulation",
            Stage::Probe => "probe",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub source: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {:#}", self.stage.name(), self.source)
    }
}

impl std::error::Error for CliError {}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|e| CliError { stage, source: e.into() })
    }
}

/// Reads a script file and resolves its relative input paths against the
/// script's directory.
pub fn load_script(path: &Path) -> Result<ScriptConfig, CliError> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).at(Stage::Script)?;
    let mut cfg = parse_script(&text).with_context(|| path.display().to_string()).at(Stage::Script)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.resolve_paths(&base);
    Ok(cfg)
}

/// Data set and model for a script. A prior-only script without a data file
/// gets a one-row placeholder so the sampler has node count to work with.
pub fn load_inputs(cfg: &ScriptConfig) -> Result<(DataSet, ModelSpec), CliError> {
    let kind = cfg.likelihood.data_kind();
    let Some(path) = &cfg.data_file else {
        if !cfg.prior_only {
            return Err(anyhow!("data_file is required unless prior_only = true")).at(Stage::Data);
        }
        let n = cfg.n_nodes.ok_or_else(|| anyhow!("n_nodes is required without a data_file")).at(Stage::Data)?;
        let data = DataSet::continuous(vec![vec![0.0]; n]).at(Stage::Data)?;
        return Ok((data, ModelSpec::NormalGamma(Default::default())));
    };
    let data = load_data(path, kind, cfg.n_nodes, cfg.arities.as_deref()).at(Stage::Data)?;
    if let Some(n) = cfg.n_nodes {
        if n != data.n_nodes() {
            return Err(anyhow!("n_nodes = {n} but {} has {} columns", path.display(), data.n_nodes())).at(Stage::Data);
        }
    }
    Ok((data, cfg.model()))
}

pub fn build_priors(cfg: &ScriptConfig, n: usize) -> Result<PriorSpec, CliError> {
    let mut priors = match &cfg.bernoulli_file {
        Some(p) => PriorSpec::with_bernoulli_matrix(n, read_bernoulli(p, n).at(Stage::Prior)?),
        None => PriorSpec::uniform_bernoulli(n, cfg.bernoulli_p),
    }
    .at(Stage::Prior)?;
    if let Some(p) = &cfg.concordance_file {
        priors = priors.with_concordance(read_concordance(p, n).at(Stage::Prior)?, cfg.rho).at(Stage::Prior)?;
    }
    if let Some(gamma) = cfg.degree_gamma {
        priors = priors.with_degree_prior(gamma).at(Stage::Prior)?;
    }
    Ok(priors)
}

pub fn run_config(cfg: &ScriptConfig, n: usize) -> Result<RunConfig, CliError> {
    let initial_graph = cfg.initial_graph_file.as_deref().map(|p| read_graph(p, Some(n))).transpose().at(Stage::Data)?;
    Ok(RunConfig {
        n_iterations: cfg.n_iterations,
        burn_in: cfg.burn_in,
        n_chains: cfg.n_chains,
        seeds: cfg.seeds.clone(),
        base_seed: cfg.seed,
        prior_only: cfg.prior_only,
        sample_stride: cfg.sample_stride,
        batch_length: cfg.batch_length,
        random_scan: cfg.random_scan,
        initial_graph,
        gelman_rubin: cfg.gelman_rubin,
        cache_capacity: cfg.cache_capacity,
        ..RunConfig::default()
    })
}

pub struct RunReport {
    pub result: RunResult,
    pub files: Vec<PathBuf>,
    pub rhat_threshold: f64,
    pub accuracy_at_half: Option<f64>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.result;
        writeln!(f, "nodes: {}  chains: {}", r.n_nodes, r.chains.len())?;
        for (c, chain) in r.chains.iter().enumerate() {
            writeln!(
                f,
                "chain {}: seed {}  acceptance {:.4}  samples {}  {:.2}s{}",
                c + 1,
                chain.seed,
                chain.stats.acceptance_rate(),
                chain.n_samples,
                chain.wall_time.as_secs_f64(),
                if chain.interrupted { "  (interrupted)" } else { "" }
            )?;
        }
        if let Some(rhat) = &r.rhat {
            let verdict = if converged(rhat, self.rhat_threshold) { "converged" } else { "not converged" };
            writeln!(f, "max R-hat: {:.4} ({verdict} at {})", rhat.max_off_diagonal(), self.rhat_threshold)?;
        }
        if let Some(a) = self.accuracy_at_half {
            writeln!(f, "accuracy at threshold 0.5: {a:.4}")?;
        }
        writeln!(f, "best log posterior: {}", r.best_log_posterior)?;
        for p in &self.files {
            writeln!(f, "wrote {}", p.display())?;
        }
        Ok(())
    }
}

/// Runs the sampler described by a parsed script and writes outputs under
/// `prefix`.
pub fn run_script(cfg: &ScriptConfig, prefix: &str) -> Result<RunReport, CliError> {
    let (data, model) = load_inputs(cfg)?;
    let n = data.n_nodes();
    let priors = build_priors(cfg, n)?;
    let scorer = Scorer::new(&data, model).at(Stage::Model)?;
    let truth = cfg.true_graph_file.as_deref().map(|p| read_graph(p, Some(n))).transpose().at(Stage::Data)?;
    let config = run_config(cfg, n)?;

    let result = run_chains(&config, &priors, &scorer).at(Stage::Sampling)?;

    let ctx = OutputContext { priors: &priors, scorer: &scorer, truth: truth.as_ref(), accuracy_step: cfg.accuracy_step };
    let files = write_outputs(&result, &ctx, prefix).at(Stage::Output)?;
    let accuracy_at_half = truth
        .as_ref()
        .map(|t| accuracy_curve(&result.edge_probability, t, &[0.5]).map(|c| c[0].1))
        .transpose()
        .at(Stage::Output)?;
    Ok(RunReport { result, files, rhat_threshold: cfg.rhat_threshold, accuracy_at_half })
}

/// Generates a network and data per the script's `sim_*` keys and writes
/// both files. Returns the two paths.
pub fn simulate(cfg: &ScriptConfig) -> Result<(PathBuf, PathBuf), CliError> {
    let graph = match cfg.sim_network {
        SimNetwork::Tree => {
            let n = cfg
                .sim_nodes
                .or(cfg.n_nodes)
                .ok_or_else(|| anyhow!("sim_nodes (or n_nodes) is required for a tree network"))
                .at(Stage::Simulation)?;
            gen_tree_network(n)
        }
        SimNetwork::File => {
            let p = cfg.sim_graph_file.as_deref().ok_or_else(|| anyhow!("sim_graph_file is required")).at(Stage::Simulation)?;
            read_graph(p, cfg.sim_nodes).at(Stage::Simulation)?
        }
    };
    let data = match cfg.sim_data {
        DataKind::Continuous => sim_continuous(&graph, &cfg.sim),
        DataKind::Discrete => sim_discrete(&graph, &cfg.sim),
    }
    .at(Stage::Simulation)?;
    write_data(&cfg.sim_data_output, &data).at(Stage::Output)?;
    write_graph(&cfg.sim_graph_output, &graph).at(Stage::Output)?;
    Ok((cfg.sim_data_output.clone(), cfg.sim_graph_output.clone()))
}

/// Log posteriors of the three orientation states of the script's probe pair.
pub fn probe(cfg: &ScriptConfig) -> Result<FlipGap, CliError> {
    let (data, model) = load_inputs(cfg)?;
    let n = data.n_nodes();
    let priors = build_priors(cfg, n)?;
    let scorer = Scorer::new(&data, model).at(Stage::Model)?;
    let (i, j) = cfg
        .probe_i
        .zip(cfg.probe_j)
        .ok_or_else(|| anyhow!("probe_i and probe_j are required"))
        .at(Stage::Probe)?;
    let base = match &cfg.probe_base_graph_file {
        Some(p) => read_graph(p, Some(n)).at(Stage::Data)?,
        None => Graph::empty(n),
    };
    flip_gap_probe(&scorer, &priors, &base, i, j).at(Stage::Probe)
}

pub fn count_dags_text(n: usize) -> String {
    count_dags(n).to_string()
}
