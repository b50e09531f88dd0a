use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use codecorpus::config::{OutputFormat, PipelineConfig, DEFAULT_CONFIG_TOML};
use codecorpus::pipeline::{self, RunSummary, Stage};
use codecorpus::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 3;
const EXIT_STAGE: u8 = 4;

/// Turns source repositories into packed pretraining entries.
///
/// Each stage subcommand runs the pipeline up to and including that stage,
/// reusing any matching checkpoints in the output directory.
#[derive(Parser, Debug)]
#[command(name = "codecorpus", version, subcommand_required = false, arg_required_else_help = true)]
struct Cli {
    /// Print the commented default configuration and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(flatten)]
    opts: Overrides,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Input directory or JSONL file; replaces the configured inputs. Repeatable.
    #[arg(long, short, global = true)]
    input: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (output does not depend on this).
    #[arg(long, short, global = true)]
    workers: Option<usize>,
    /// Seed for FIM cut points and MinHash permutations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Benchmark JSONL ({text, benchmark}); replaces the configured test sets. Repeatable.
    #[arg(long, global = true)]
    test_set: Vec<PathBuf>,
    /// Entry shard format.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Copy the duplicate-cluster report here.
    #[arg(long, global = true)]
    dedup_report: Option<PathBuf>,
    /// Copy the contamination report here.
    #[arg(long, global = true)]
    contamination_report: Option<PathBuf>,
    /// Write one dependency edge list per repository into this directory.
    #[arg(long, global = true)]
    graph_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Jsonl,
    Binary,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest and apply the file filters.
    Filter,
    /// Dependency-order and concatenate each repository.
    Order,
    /// Drop near-duplicate repositories.
    Dedup,
    /// Drop repositories that contain benchmark text.
    Decontaminate,
    /// Apply FIM and pack the training entries.
    Build,
    /// Run every stage.
    Run,
    /// Print the per-language table for the newest checkpoint.
    Stats {
        /// Print stats.json instead of the table.
        #[arg(long)]
        json: bool,
    },
}

fn load_config(o: &Overrides) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &o.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if !o.input.is_empty() {
        cfg.inputs = o.input.clone();
    }
    if !o.test_set.is_empty() {
        cfg.decontamination.test_sets = o.test_set.clone();
    }
    if let Some(p) = &o.output {
        cfg.output_dir = p.clone();
    }
    if let Some(w) = o.workers {
        cfg.workers = w;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(f) = o.format {
        cfg.build.format = match f {
            Format::Jsonl => OutputFormat::Jsonl,
            Format::Binary => OutputFormat::Binary,
        };
    }
    if let Some(p) = &o.dedup_report {
        cfg.reports.dedup = Some(p.clone());
    }
    if let Some(p) = &o.contamination_report {
        cfg.reports.contamination = Some(p.clone());
    }
    if let Some(p) = &o.graph_dir {
        cfg.reports.graphs = Some(p.clone());
    }
    Ok(cfg)
}

fn report(summary: &RunSummary) {
    for m in &summary.manifests {
        let how = if summary.resumed.iter().any(|s| s.name() == m.stage) { "resumed" } else { "ran" };
        let c = &m.counts;
        let drops: Vec<String> = c.drops.iter().map(|(k, v)| format!("{k}={v}")).collect();
        eprintln!("{:<14} {how:<8} {} -> {} {} {}", m.stage, c.input, c.output, c.unit, drops.join(" "));
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.print_default_config {
        print!("{DEFAULT_CONFIG_TOML}");
        return Ok(());
    }
    let Some(command) = cli.command else {
        Cli::command().error(ErrorKind::MissingSubcommand, "a subcommand is required").exit();
    };
    let cfg = load_config(&cli.opts)?;
    let last = match command {
        Command::Filter => Stage::Filter,
        Command::Order => Stage::Order,
        Command::Dedup => Stage::Dedup,
        Command::Decontaminate => Stage::Decontaminate,
        Command::Build | Command::Run => Stage::Build,
        Command::Stats { json } => {
            let stats = pipeline::load_stats(&cfg.output_dir)?;
            if json {
                println!("{}", stats.to_json());
            } else {
                print!("{}", stats.render());
            }
            return Ok(());
        }
    };
    let summary = pipeline::run_until(&cfg, last)?;
    report(&summary);
    print!("{}", summary.stats.render());
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Validation(_) | Error::Config(_)) => EXIT_VALIDATION,
        Some(Error::Stage { .. }) => EXIT_STAGE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
