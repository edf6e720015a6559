use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use segiso::pipeline::{self, LoadedConfig, Overrides, StageStatus};
use segiso::synth::{self, SynthConfig};

#[derive(Parser)]
#[command(name = "segiso", version, about = "Offline and online partisan isolation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage, skipping those whose inputs and config are unchanged.
    Run(RunArgs),
    /// Check the config and input schemas without computing anything.
    Validate(RunArgs),
    /// Generate a synthetic world plus a pipeline config for it.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a summary of a finished run.
    Report {
        #[arg(long)]
        output: PathBuf,
        /// Print the raw report JSON instead.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_scored: Option<usize>,
    /// Overrides the config's output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<LoadedConfig> {
        let o = Overrides {
            seed: self.seed,
            k: self.k,
            min_scored: self.min_scored,
            output_dir: self.output.clone(),
        };
        LoadedConfig::load(&self.config, &o).with_context(|| format!("loading {}", self.config.display()))
    }
}

fn synth_cmd(config: &Path, seed: Option<u64>, output: Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut sc = SynthConfig::from_toml(&text)?;
    if let Some(s) = seed {
        sc.world.seed = s;
    }
    let dir = match output {
        Some(o) => o,
        None => config.parent().unwrap_or(Path::new("")).join(&sc.output_dir),
    };
    let world = synth::generate(&sc.world)?;
    synth::write_world(&world, &dir)?;
    let pc = pipeline::config_for_world(sc.world.seed);
    std::fs::write(dir.join("pipeline.toml"), pc.to_toml())?;
    println!(
        "wrote {} voters, {} accounts, {} edges to {}",
        world.voters.len(),
        world.accounts.len(),
        world.edges.len(),
        dir.display()
    );
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let summary = pipeline::run(&cfg)?;
            for s in &summary.stages {
                let status = match s.status {
                    StageStatus::Ran => "ran",
                    StageStatus::Skipped => "skipped (up to date)",
                };
                println!("{:<9} {status}", s.stage);
            }
            println!("artifacts in {}", summary.output_dir.display());
        }
        Command::Validate(args) => {
            let cfg = args.load()?;
            let report = pipeline::validate(&cfg)?;
            for (name, rows) in &report.inputs {
                println!("{name:<17} {rows} rows");
            }
            println!("ok");
        }
        Command::Synth { config, seed, output } => synth_cmd(&config, seed, output)?,
        Command::Report { output, json } => {
            let report = pipeline::load_report(&output)?;
            if json {
                print!("{}", pipeline::report_json(&report));
            } else {
                print!("{}", pipeline::render_summary(&report));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
