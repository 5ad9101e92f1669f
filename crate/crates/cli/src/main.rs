use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use langscape_cli::config::RunConfig;
use langscape_cli::{commands, CliError};

#[derive(Parser)]
#[command(
    name = "langscape",
    version,
    about = "Geographic linguistic diversity measurement and shift detection"
)]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Override the scenario seed (synth only).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-country analyses (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and aggregate corpus files into a count table.
    Ingest,
    /// Run the full analysis bundle against a count table.
    Analyze,
    /// Shift detection only.
    Shift,
    /// Per-language attribution for significantly shifted countries.
    Attribute,
    /// Difference-in-differences classification.
    Did,
    /// Demographic bias correlations.
    Bias,
    /// Temporal stability screens.
    Stability,
    /// Generate a synthetic corpus and manifest from a scenario file.
    Synth {
        /// Scenario description (TOML).
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Render the human-readable report for an analyzed count table.
    Report,
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(output) = &cli.output {
        config.output_dir = output.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok(); // already initialized is fine
    }
    match &cli.command {
        Command::Ingest => {
            let config = load_config(&cli)?;
            let outcome = commands::cmd_ingest(&config)?;
            println!(
                "accepted {} of {} lines -> {}",
                outcome.stats.accepted,
                outcome.stats.lines,
                outcome.table_path.display()
            );
        }
        Command::Analyze => {
            let config = load_config(&cli)?;
            commands::cmd_analyze(&config)?;
            println!("bundle written to {}", config.output_dir.display());
        }
        Command::Shift => {
            let config = load_config(&cli)?;
            commands::cmd_shift(&config)?;
        }
        Command::Attribute => {
            let config = load_config(&cli)?;
            commands::cmd_attribute(&config)?;
        }
        Command::Did => {
            let config = load_config(&cli)?;
            commands::cmd_did(&config)?;
        }
        Command::Bias => {
            let config = load_config(&cli)?;
            commands::cmd_bias(&config)?;
        }
        Command::Stability => {
            let config = load_config(&cli)?;
            commands::cmd_stability(&config)?;
        }
        Command::Synth { scenario } => {
            let output = match (&cli.output, &cli.config) {
                (Some(output), _) => output.clone(),
                (None, Some(path)) => RunConfig::load(path)?.output_dir,
                (None, None) => PathBuf::from("out"),
            };
            let paths = commands::cmd_synth(scenario, &output, cli.seed)?;
            println!("corpus written to {}", paths.corpus.display());
        }
        Command::Report => {
            let config = load_config(&cli)?;
            let text = commands::cmd_report(&config)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let kind = error
                .downcast_ref::<CliError>()
                .map(CliError::kind)
                .unwrap_or("Error");
            // Machine-readable error record: tab-separated key=value fields.
            eprintln!("kind={kind}\tmsg={error}");
            ExitCode::FAILURE
        }
    }
}
