use clap::{Args, Parser, Subcommand};
use emlfit_cli::config::{
    parse_bench_config, parse_search_config, parse_toy_config, read_to_string, Overrides,
};
use emlfit_cli::{pipeline, AppError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Grammar-based discovery of reduced response models.
#[derive(Parser)]
#[command(name = "emlfit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate grammar expressions, fit them to traces, and rank them.
    Search(SearchArgs),
    /// Sweep cascade depth against a benchmark trace with a reservoir
    /// hyperparameter grid search.
    CascadeBench(BenchArgs),
    /// Generate the ground-truth activation/adaptation benchmark trace.
    Toybench(ToyArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Block family: eml | hill.
    #[arg(long)]
    grammar: Option<String>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Embedding: static | relax | dose-ode.
    #[arg(long)]
    embedding: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ToyArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run() -> Result<PathBuf, AppError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Search(args) => {
            let text = read_to_string(&args.config)?;
            let cfg = parse_search_config(&text)?;
            let overrides = Overrides {
                grammar: args.grammar,
                max_depth: args.max_depth,
                max_nodes: args.max_nodes,
                embedding: args.embedding,
                seed: args.seed,
                out: args.out,
            };
            let plan = cfg.plan(&overrides)?;
            pipeline::run_search(&plan, &text)
        }
        Command::CascadeBench(args) => {
            let text = match &args.config {
                Some(path) => read_to_string(path)?,
                None => String::new(),
            };
            let cfg = parse_bench_config(&text)?;
            let overrides = Overrides {
                seed: args.seed,
                out: args.out,
                ..Overrides::default()
            };
            pipeline::run_cascade_bench(&cfg, &overrides, &text)
        }
        Command::Toybench(args) => {
            let text = match &args.config {
                Some(path) => read_to_string(path)?,
                None => String::new(),
            };
            let cfg = parse_toy_config(&text)?;
            let overrides = Overrides {
                seed: args.seed,
                out: args.out,
                ..Overrides::default()
            };
            pipeline::run_toybench(&cfg, &overrides, &text)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(out_dir) => {
            println!("wrote {}", out_dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
