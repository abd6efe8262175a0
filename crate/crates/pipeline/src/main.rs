use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qkr_pipeline::{run, ExperimentConfig, PipelineError, RawConfig, RunOptions, Target};

#[derive(Parser)]
#[command(name = "qkr", version, about = "Kicked-rotor time-reversal breaking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the selected targets and write CSVs plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated: fig1..fig5, table1..table3, or all.
        #[arg(long)]
        targets: String,
        #[arg(long)]
        seed: Option<u64>,
        /// N = 501, ensemble of 20.
        #[arg(long)]
        desk: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a config, then print it fully resolved.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path, desk: bool, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig, PipelineError> {
    let mut raw = RawConfig::load(path)?;
    if desk {
        raw.apply_desk();
    }
    if let Some(s) = seed {
        raw.seed = Some(i64::try_from(s).map_err(|_| PipelineError::Config(format!("seed {s} is too large")))?);
    }
    if let Some(o) = out {
        raw.output_dir = Some(o);
    }
    ExperimentConfig::from_raw(&raw)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => load(&config, false, None, None).map(|cfg| {
            print!("{}", cfg.to_toml());
            println!("# config hash: {}", cfg.hash());
            0
        }),
        Command::Run { config, targets, seed, desk, out, quiet } => load(&config, desk, seed, out).and_then(|cfg| {
            let targets = Target::parse_list(&targets)?;
            let manifest = run(&cfg, &targets, RunOptions { verbose: !quiet })?;
            for s in &manifest.stages {
                println!("{:<7} {:<6} {:>9.2}s {}", s.target, s.status, s.seconds, s.error.as_deref().unwrap_or(""));
            }
            println!("manifest: {}", cfg.output_dir.join(qkr_pipeline::run::MANIFEST_FILE).display());
            Ok(if manifest.failed().is_empty() { 0 } else { 3 })
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qkr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
