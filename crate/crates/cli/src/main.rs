use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use licm_cli::bench::bench_agg;
use licm_cli::experiment::{AggregatorSpec, ExperimentFile, RunSpec};
use licm_cli::runner::{is_complete, run_grid, GridEntry};
use licm_cli::presets;

#[derive(Debug, Parser)]
#[command(name = "licm", version, about = "Byzantine-resilient distributed SGD experiments")]
struct Cli {
    /// Write runs under this directory instead of the file's `output_dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Replace the file's `seeds` list with this single seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Only print errors and final results.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configuration of an experiment file, skipping completed ones.
    Run { config: PathBuf },
    /// Print a bundled experiment file; lists the presets when no name is given.
    Preset { name: Option<String> },
    /// Time one aggregation per rule and worker count.
    BenchAgg {
        #[arg(long, default_value_t = 10_000)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
        workers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "mean,coormed,trimmed_mean,krum,bulyan,licm")]
        rules: Vec<String>,
        #[arg(long, default_value_t = 10.0)]
        gamma: f64,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check an experiment file and print its run grid without executing it.
    Validate { config: PathBuf },
}

fn load_grid(cli: &Cli, path: &PathBuf) -> Result<Vec<RunSpec>> {
    let mut file = ExperimentFile::load(path)?;
    if let Some(dir) = &cli.output_dir {
        file.set("output_dir", dir.display())?;
    }
    if let Some(seed) = cli.seed_override {
        file.set("seeds", seed)?;
    }
    file.expand().with_context(|| format!("in {}", path.display()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn execute(cli: &Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("configuring the thread pool")?;

    match &cli.command {
        Command::Run { config } => {
            let specs = load_grid(cli, config)?;
            for entry in run_grid(&specs, cli.quiet)? {
                if let GridEntry::Finished(s) = entry {
                    println!(
                        "{:<40} loss {:>10} grad_norm {:>10} accuracy {:>7} diverged_at {}",
                        s.label,
                        fmt_opt(s.final_loss),
                        fmt_opt(s.final_grad_norm),
                        fmt_opt(s.final_accuracy),
                        s.diverged_at.map(|k| k.to_string()).unwrap_or_else(|| "-".into())
                    );
                }
            }
        }
        Command::Preset { name: None } => {
            for name in presets::names() {
                println!("{name}");
            }
        }
        Command::Preset { name: Some(name) } => {
            let text = presets::preset(name).ok_or_else(|| {
                anyhow!(
                    "no preset named `{name}`; available: {}",
                    presets::names().collect::<Vec<_>>().join(", ")
                )
            })?;
            print!("{text}");
        }
        Command::BenchAgg {
            dim,
            workers,
            rules,
            gamma,
            reps,
            seed,
        } => {
            let aggs = rules
                .iter()
                .map(|r| r.parse::<AggregatorSpec>())
                .collect::<Result<Vec<_>>>()?;
            let points = bench_agg(&aggs, workers, *dim, *gamma, *reps, *seed)?;
            println!("{:<22} {:>8} {:>8} {:>14}", "rule", "workers", "dim", "best_ns");
            for p in points {
                println!("{:<22} {:>8} {:>8} {:>14}", p.rule, p.workers, p.dim, p.best.as_nanos());
            }
        }
        Command::Validate { config } => {
            let specs = load_grid(cli, config)?;
            for spec in &specs {
                let state = if is_complete(spec) { "complete" } else { "pending" };
                println!("{}  {state}", spec.run_dir().display());
            }
            if !cli.quiet {
                eprintln!("{} runs, all preconditions satisfied", specs.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
