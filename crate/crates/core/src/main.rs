use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use graph_sampler::cli::{count_dags_text, load_script, probe, run_script, simulate, CliError};

/// Metropolis-Hastings sampler for Bayesian network structures.
///
/// With no subcommand, behaves like `run`.
#[derive(Parser)]
#[command(name = "graph_sampler", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run script.
    #[arg(default_value = "script.txt")]
    input_file: PathBuf,
    /// Prefix prepended to every output file name.
    #[arg(default_value = "")]
    output_prefix: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sample structures as described by a script (the default).
    Run(RunArgs),
    /// Generate a network and data from the script's `sim_*` keys.
    Simulate {
        #[arg(default_value = "script.txt")]
        input_file: PathBuf,
    },
    /// Log posteriors of i -> j, j -> i and neither for `probe_i`, `probe_j`.
    Probe {
        #[arg(default_value = "script.txt")]
        input_file: PathBuf,
    },
    /// Number of labelled DAGs on N nodes.
    CountDags { n: usize },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command.unwrap_or(Command::Run(cli.run)) {
        Command::Run(args) => {
            let cfg = load_script(&args.input_file)?;
            let report = run_script(&cfg, &args.output_prefix)?;
            print!("{report}");
        }
        Command::Simulate { input_file } => {
            let cfg = load_script(&input_file)?;
            let (data, graph) = simulate(&cfg)?;
            println!("wrote {}", data.display());
            println!("wrote {}", graph.display());
        }
        Command::Probe { input_file } => {
            let cfg = load_script(&input_file)?;
            let gap = probe(&cfg)?;
            let (i, j) = (cfg.probe_i.unwrap_or(0) + 1, cfg.probe_j.unwrap_or(0) + 1);
            println!("{i} -> {j}: {}", gap.forward);
            println!("{j} -> {i}: {}", gap.reverse);
            println!("neither: {}", gap.neither);
            println!("trap depth: {}", gap.trap_depth());
        }
        Command::CountDags { n } => println!("{}", count_dags_text(n)),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("graph_sampler: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
