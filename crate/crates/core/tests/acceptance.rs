//! One line per acceptance criterion. Exits non-zero if any hard criterion
//! fails; criterion 8 is reported but does not affect the exit status.

mod common;

use std::collections::HashMap;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{
    normal_gamma_marginal_by_quadrature, polya_urn_log_marginal, random_categorical, total_variation,
};
use graph_sampler::data::DataSet;
use graph_sampler::diagnostics::{accuracy_curve, flip_gap_probe, DEFAULT_RHAT_THRESHOLD};
use graph_sampler::graph::{enumerate_dags, Graph};
use graph_sampler::priors::PriorSpec;
use graph_sampler::sampler::{log_posterior, run_chains, Chain, RunConfig};
use graph_sampler::score::{
    node_score_dirichlet, node_score_normal_gamma, node_score_zellner, ModelSpec, NormalGammaParams, ScoreError, Scorer,
};
use graph_sampler::sim::{gen_tree_network, sim_continuous, sim_discrete, SimSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (u32, &'static str, fn() -> Outcome, bool);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph_sampler"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut counts = Vec::new();
    for n in 2..=5 {
        let out = bin().args(["count-dags", &n.to_string()]).output().expect("run binary");
        counts.push(String::from_utf8_lossy(&out.stdout).trim().to_string());
    }
    let enumerated = enumerate_dags(4).map(|v| v.len()).unwrap_or(0);
    let elapsed = start.elapsed();
    let ok = counts == ["3", "25", "543", "29281"] && enumerated == 543;
    outcome(ok && within(elapsed, 1.0), format!("counts {counts:?}, enumerate(4) = {enumerated}, {elapsed:.2?}"))
}

/// Empirical distribution over graphs of one chain's post-burn-in states,
/// indexed like `enumerate_dags`.
fn visit_frequencies(
    config: &RunConfig,
    priors: &PriorSpec,
    scorer: &Scorer<'_>,
    dags: &[Graph],
    seed: u64,
) -> Vec<f64> {
    let index: HashMap<u64, usize> = dags.iter().enumerate().map(|(k, g)| (g.offdiagonal_code(), k)).collect();
    let mut chain = Chain::new(config, priors, scorer, seed).expect("chain");
    let mut counts = vec![0u64; dags.len()];
    for t in 1..=config.n_iterations {
        chain.step().expect("step");
        if t > config.burn_in {
            counts[index[&chain.graph().offdiagonal_code()]] += 1;
        }
    }
    let total = (config.n_iterations - config.burn_in) as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

fn exact_posterior(priors: &PriorSpec, scorer: &Scorer<'_>, dags: &[Graph]) -> Vec<f64> {
    let lp: Vec<f64> = dags.iter().map(|g| log_posterior(g, priors, scorer).expect("score")).collect();
    let max = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lp.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let truth = gen_tree_network(3);
    let data = sim_discrete(&truth, &SimSpec { n_obs: 20, seed: 2, ..Default::default() }).expect("sim");
    let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).expect("scorer");
    let dags = enumerate_dags(3).expect("enumerate");
    let desired: Vec<i8> = (0..9).map(|k| if truth.adjacency()[k] == 1 { 1 } else { -1 }).collect();
    let configs = [
        ("concordance off", PriorSpec::flat(3)),
        ("concordance on", PriorSpec::flat(3).with_concordance(desired, 1.0).expect("prior")),
    ];
    let config = RunConfig { n_iterations: 1_010_000, burn_in: 10_000, ..Default::default() };
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, priors) in &configs {
        let exact = exact_posterior(priors, &scorer, &dags);
        let empirical = visit_frequencies(&config, priors, &scorer, &dags, 17);
        let tv = total_variation(&exact, &empirical);
        worst = worst.max(tv);
        parts.push(format!("{name}: TV {tv:.4}"));
    }
    let elapsed = start.elapsed();
    outcome(worst < 0.02 && within(elapsed, 60.0), format!("{}, {elapsed:.2?}", parts.join(", ")))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let placeholder = |n: usize| DataSet::continuous(vec![vec![0.0]; n]).expect("data");
    let config = RunConfig { n_iterations: 1_010_000, burn_in: 10_000, prior_only: true, ..Default::default() };

    let d3 = placeholder(3);
    let s3 = Scorer::new(&d3, ModelSpec::NormalGamma(Default::default())).expect("scorer");
    let dags3 = enumerate_dags(3).expect("enumerate");
    let freq3 = visit_frequencies(&config, &PriorSpec::flat(3), &s3, &dags3, 5);
    let tv = total_variation(&freq3, &[1.0 / 25.0; 25]);
    let visited3 = freq3.iter().filter(|&&f| f > 0.0).count();

    let d4 = placeholder(4);
    let s4 = Scorer::new(&d4, ModelSpec::NormalGamma(Default::default())).expect("scorer");
    let dags4 = enumerate_dags(4).expect("enumerate");
    let freq4 = visit_frequencies(&config, &PriorSpec::flat(4), &s4, &dags4, 6);
    let visited4 = freq4.iter().filter(|&&f| f > 0.0).count();

    let elapsed = start.elapsed();
    let ok = tv < 0.02 && visited3 == 25 && visited4 == 543 && within(elapsed, 60.0);
    outcome(ok, format!("N=3 TV {tv:.4} over {visited3}/25 graphs, N=4 visited {visited4}/543, {elapsed:.2?}"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_urn = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let child_arity = rng.random_range(2..5);
        let k = rng.random_range(0..4);
        let arities: Vec<u32> = (0..k).map(|_| rng.random_range(2..4)).collect();
        let parents: Vec<Vec<u32>> = arities.iter().map(|&r| random_categorical(&mut rng, n, r)).collect();
        let x = random_categorical(&mut rng, n, child_arity);
        let a = rng.random_range(0.1..5.0);
        let configs: Vec<usize> = (0..n)
            .map(|row| parents.iter().zip(&arities).fold(0, |acc, (col, &r)| acc * r as usize + col[row] as usize))
            .collect();
        let refs: Vec<&[u32]> = parents.iter().map(Vec::as_slice).collect();
        let got = node_score_dirichlet(&x, child_arity, &refs, &arities, a).expect("score");
        let want = polya_urn_log_marginal(&x, child_arity, &configs, a);
        worst_urn = worst_urn.max((got - want).abs() / want.abs());
    }

    let mut worst_ng = 0.0f64;
    let ng_cases: Vec<(Vec<f64>, Option<Vec<f64>>, NormalGammaParams)> = vec![
        (vec![0.0, 0.0], None, NormalGammaParams::default()),
        (vec![1.2, -0.4, 0.7], None, NormalGammaParams { alpha: 2.0, omega: 1.5, beta0: 0.5, n0_scale: 0.8 }),
        (
            vec![0.8, -0.5, 1.1],
            Some(vec![0.6, -1.0, 1.3]),
            NormalGammaParams { alpha: 1.5, omega: 1.0, beta0: 0.2, n0_scale: 1.0 },
        ),
    ];
    for (x, parent, p) in &ng_cases {
        let parents: Vec<&[f64]> = parent.iter().map(Vec::as_slice).collect();
        let design: Vec<Vec<f64>> =
            (0..x.len()).map(|r| std::iter::once(1.0).chain(parents.iter().map(|c| c[r])).collect()).collect();
        let got = node_score_normal_gamma(x, &parents, p).expect("score");
        let want = normal_gamma_marginal_by_quadrature(x, &design, p.alpha, p.omega, p.beta0, p.n0_scale);
        worst_ng = worst_ng.max((got - want).abs() / want.abs());
    }

    let zellner = node_score_zellner(&[1.0, -1.0], &[], 1.0).expect("score");
    let zellner_ok = (zellner + 1.5 * 2f64.ln()).abs() < 1e-12;
    let too_many = matches!(
        node_score_zellner(&[1.0, 2.0], &[&[0.5, 0.1], &[0.3, 0.9]], 1.0),
        Err(ScoreError::TooManyParents { .. })
    );

    let elapsed = start.elapsed();
    let ok = worst_urn < 1e-10 && worst_ng < 1e-3 && zellner_ok && too_many && within(elapsed, 30.0);
    outcome(
        ok,
        format!(
            "(a) urn max rel err {worst_urn:.1e}, (b) quadrature max rel err {worst_ng:.1e}, \
             (c) hand value {}, TooManyParents {}, {elapsed:.2?}",
            if zellner_ok { "ok" } else { "wrong" },
            if too_many { "raised" } else { "missing" }
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let truth = gen_tree_network(10);
    let data = sim_discrete(&truth, &SimSpec { n_obs: 100, seed: 1, ..Default::default() }).expect("sim");
    let desired: Vec<i8> = truth.adjacency().iter().map(|&a| if a == 1 { 1 } else { -1 }).collect();
    let priors = PriorSpec::flat(10).with_concordance(desired, 1.0).and_then(|p| p.with_degree_prior(2.0)).expect("prior");
    let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).expect("scorer");
    let config = RunConfig { n_iterations: 5_000_000, burn_in: 500_000, n_chains: 3, ..Default::default() };
    let result = run_chains(&config, &priors, &scorer).expect("run");
    let rhat = result.rhat.expect("rhat");
    let max_rhat = rhat.max_off_diagonal();
    let above = rhat.off_diagonal().filter(|&r| r > DEFAULT_RHAT_THRESHOLD).count();
    let acc = accuracy_curve(&result.edge_probability, &truth, &[0.5]).expect("accuracy")[0].1;
    let elapsed = start.elapsed();
    let ok = max_rhat <= DEFAULT_RHAT_THRESHOLD && acc >= 0.85 && within(elapsed, 600.0);
    outcome(
        ok,
        format!("max R-hat {max_rhat:.4} ({above}/90 edges above 1.05), accuracy@0.5 {acc:.4}, {elapsed:.2?}"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let truth = gen_tree_network(5);
    let data = sim_continuous(&truth, &SimSpec { n_obs: 100, seed: 1, ..Default::default() }).expect("sim");
    let priors = PriorSpec::flat(5);
    let config = RunConfig { n_iterations: 5_000_000, burn_in: 500_000, n_chains: 3, ..Default::default() };
    let mut maxima = Vec::new();
    for g in [1.0, 5.0, 100.0] {
        let scorer = Scorer::new(&data, ModelSpec::Zellner { g }).expect("scorer");
        let result = run_chains(&config, &priors, &scorer).expect("run");
        maxima.push(result.rhat.expect("rhat").max_off_diagonal());
    }
    let elapsed = start.elapsed();
    let small_converge = maxima[0] <= DEFAULT_RHAT_THRESHOLD && maxima[1] <= DEFAULT_RHAT_THRESHOLD;
    let large_fails = maxima[2] > DEFAULT_RHAT_THRESHOLD;
    let monotone = maxima[0] <= maxima[1] && maxima[1] <= maxima[2];
    outcome(
        small_converge && large_fails && monotone,
        format!(
            "max R-hat g=1 {:.4}, g=5 {:.4}, g=100 {:.4}; g in {{1,5}} converge {small_converge}, \
             g=100 fails {large_fails}, monotone {monotone}, {elapsed:.2?}",
            maxima[0], maxima[1], maxima[2]
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    // Tree 1->2, 1->3, 2->4, 2->5 plus a strong 4->5 (1-based).
    let mut truth = gen_tree_network(5);
    truth.set_edge(3, 4, true);
    let mut betas = vec![0.0; 25];
    for (i, j) in truth.edges() {
        betas[i * 5 + j] = 1.0;
    }
    betas[3 * 5 + 4] = 3.0;
    let spec = SimSpec { n_obs: 100, seed: 7, beta_matrix: Some(betas), ..Default::default() };
    let data = sim_continuous(&truth, &spec).expect("sim");
    let scorer = Scorer::new(&data, ModelSpec::NormalGamma(Default::default())).expect("scorer");
    let mut base = truth.clone();
    base.set_edge(3, 4, false);
    let gap = flip_gap_probe(&scorer, &PriorSpec::flat(5), &base, 3, 4).expect("probe");
    let elapsed = start.elapsed();
    let depth = gap.trap_depth();
    outcome(
        depth >= 20.0 && within(elapsed, 10.0),
        format!(
            "4->5 {:.2}, 5->4 {:.2}, neither {:.2}, trap depth {depth:.2}, {elapsed:.2?}",
            gap.forward, gap.reverse, gap.neither
        ),
    )
}

fn criterion_8() -> Outcome {
    let truth = gen_tree_network(30);
    let data = sim_discrete(&truth, &SimSpec { n_obs: 100, seed: 8, ..Default::default() }).expect("sim");
    let scorer = Scorer::new(&data, ModelSpec::Dirichlet { pseudo_count: 1.0 }).expect("scorer");
    let priors = PriorSpec::flat(30);
    let n = 2_000_000;
    let config = RunConfig { n_iterations: n, burn_in: 0, n_chains: 1, gelman_rubin: false, ..Default::default() };
    let mut chain = Chain::new(&config, &priors, &scorer, 8).expect("chain");
    let start = Instant::now();
    chain.run_to(n, None).expect("run");
    let rate = n as f64 / start.elapsed().as_secs_f64();
    outcome(rate >= 50_000.0, format!("{rate:.0} proposals/s single chain on 30 nodes"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let truth = gen_tree_network(6);
    let data = sim_discrete(&truth, &SimSpec { n_obs: 100, seed: 9, ..Default::default() }).expect("sim");
    graph_sampler::io::write_data(&dir.path().join("data.txt"), &data).expect("write");
    std::fs::write(
        dir.path().join("script.txt"),
        "data_file = \"data.txt\"; likelihood = dirichlet; degree_gamma = 2;\n\
         n_iterations = 300000; burn_in = 30000; seed = 99;\n",
    )
    .expect("write");
    let run = |prefix: &str| {
        bin().current_dir(dir.path()).args(["script.txt", prefix]).output().expect("run binary").status.success()
    };
    let ran = run("a_") && run("b_");
    let a = std::fs::read(dir.path().join("a_edge_p.out")).unwrap_or_default();
    let b = std::fs::read(dir.path().join("b_edge_p.out")).unwrap_or_default();
    outcome(ran && !a.is_empty() && a == b, format!("{} bytes each, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "DAG counts", criterion_1, true),
        (2, "exact posterior", criterion_2, true),
        (3, "prior-only uniformity", criterion_3, true),
        (4, "likelihood oracles", criterion_4, true),
        (5, "10-node convergence", criterion_5, true),
        (6, "Zellner g sensitivity", criterion_6, true),
        (7, "flip trap", criterion_7, true),
        (8, "throughput (soft)", criterion_8, false),
        (9, "determinism", criterion_9, true),
    ];
    let mut hard_failures = Vec::new();
    for (id, name, run, hard) in criteria {
        let o = run();
        println!("criterion {id} [{name}]: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if hard && !o.pass {
            hard_failures.push(id);
        }
    }
    if hard_failures.is_empty() {
        println!("acceptance: all hard criteria pass");
    } else {
        println!("acceptance: hard criteria failing: {hard_failures:?}");
        std::process::exit(1);
    }
}
