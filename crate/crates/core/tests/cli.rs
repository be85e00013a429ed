use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use graph_sampler::data::DataKind;
use graph_sampler::io::{load_data, read_best_graph, read_results};
use graph_sampler::priors::PriorSpec;
use graph_sampler::sampler::log_posterior;
use graph_sampler::score::{ModelSpec, Scorer};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph_sampler"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

const DATA: &str = "0 1 0\n1 1 0\n1 0 1\n0 0 1\n1 1 1\n0 1 0\n1 1 0\n0 0 0\n1 0 1\n1 1 1\n";

fn write_inputs(dir: &Path, script_name: &str) {
    fs::write(dir.join("data.txt"), DATA).unwrap();
    fs::write(
        dir.join(script_name),
        "n_nodes = 3;\ndata_file = \"data.txt\";\nlikelihood = dirichlet;\n\
         n_iterations = 30000; burn_in = 5000; batch_length = 5000;\n",
    )
    .unwrap();
}

#[test]
fn count_dags_prints_the_count() {
    let out = bin().args(["count-dags", "5"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "29281");
}

#[test]
fn default_script_in_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path(), "script.txt");
    let out = run_in(dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let edge_p = fs::read_to_string(dir.path().join("edge_p.out")).unwrap();
    let rows: Vec<Vec<&str>> = edge_p.lines().map(|l| l.split(' ').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 3);
        assert_eq!(r[i], "0.000000");
    }
    for name in ["best_graph.out", "degree_count.out", "motifs_count.out", "rhat.out", "results_mcmc.bin"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn explicit_script_and_prefix() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path(), "cfg.txt");
    let out = run_in(dir.path(), &["cfg.txt", "runA_"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("runA_edge_p.out").exists());
    assert!(dir.path().join("runA_best_graph.out").exists());
    assert!(!dir.path().join("edge_p.out").exists());

    let dump = read_results(&dir.path().join("runA_results_mcmc.bin")).unwrap();
    assert_eq!((dump.n_nodes, dump.n_samples, dump.occupancy.len()), (3, 25_000, 3));
}

#[test]
fn best_graph_rescores_to_recorded_value() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path(), "script.txt");
    assert!(run_in(dir.path(), &[]).status.success());
    let (recorded, g) = read_best_graph(&dir.path().join("best_graph.out")).unwrap();
    let data = load_data(&dir.path().join("data.txt"), DataKind::Discrete, Some(3), None).unwrap();
    let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).unwrap();
    let rescored = log_posterior(&g, &PriorSpec::flat(3), &scorer).unwrap();
    assert!((recorded - rescored).abs() < 1e-9, "{recorded} vs {rescored}");
}

#[test]
fn failures_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "n_itterations = 5;\n").unwrap();
    let out = run_in(dir.path(), &["bad.txt"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("script stage") && err.contains("line 1, column 1"), "{err}");

    fs::write(dir.path().join("nodata.txt"), "data_file = \"missing.txt\"; likelihood = zellner;\n").unwrap();
    let out = run_in(dir.path(), &["nodata.txt"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data stage"));

    let out = run_in(dir.path(), &["count-dags", "three"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_then_probe() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("script.txt"),
        "sim_nodes = 5; sim_data = continuous; sim_n_obs = 100; sim_seed = 4;\n\
         data_file = \"sim_data.txt\"; likelihood = normal_gamma;\n\
         probe_i = 2; probe_j = 4;\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let graph = fs::read_to_string(dir.path().join("sim_graph.txt")).unwrap();
    assert_eq!(graph.lines().next().unwrap(), "0 1 1 0 0");

    let out = run_in(dir.path(), &["probe"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2 -> 4:") && text.contains("neither:"), "{text}");
}
