use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use islescale_cli::commands::{run_align, run_eval, run_label, run_measure, run_pipeline, Warnings};
use islescale_cli::config::{Overrides, PipelineConfig};
use islescale_cli::scene::{load_spec, run_synth};
use islescale_cli::CliError;

#[derive(Debug, Parser)]
#[command(name = "islescale", version, about = "Metric island area, perimeter and height maps from monocular reconstructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct StageArgs {
    /// Pipeline config JSON
    #[arg(long)]
    config: PathBuf,
    /// Views that must see a point inside their mask
    #[arg(long)]
    min_votes: Option<u32>,
    /// Occlusion slack in meters ("inf" disables the depth test)
    #[arg(long)]
    depth_tolerance: Option<f64>,
    /// Fixed grid cell size in meters
    #[arg(long)]
    cell_size: Option<f64>,
    /// Output directory, replacing `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover metric scale by aligning the reconstruction to the reference trajectory
    Align(StageArgs),
    /// Vote points into the island using the per-frame masks
    Label(StageArgs),
    /// Measure area and perimeter and render the footprint and height map
    Measure(StageArgs),
    /// Run align, label and measure in sequence
    Pipeline(StageArgs),
    /// Generate a synthetic scene directory
    Synth {
        /// Scene spec JSON; defaults to a 200 m × 300 m rectangle
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Relative area errors over a manifest of estimate/truth pairs
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &StageArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        min_votes: args.min_votes,
        depth_tolerance: args.depth_tolerance,
        cell_size: args.cell_size,
        out: args.out.clone(),
    })?;
    Ok(cfg)
}

fn to_value(v: impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn run(command: Command, warnings: &mut Warnings) -> Result<serde_json::Value, CliError> {
    Ok(match command {
        Command::Align(a) => to_value(run_align(&load(&a)?, warnings)?),
        Command::Label(a) => to_value(run_label(&load(&a)?, warnings)?),
        Command::Measure(a) => to_value(run_measure(&load(&a)?)?),
        Command::Pipeline(a) => to_value(run_pipeline(&load(&a)?, warnings)?),
        Command::Synth { config, out, seed } => to_value(run_synth(load_spec(config.as_deref())?, seed, &out)?),
        Command::Eval { config, out } => to_value(run_eval(&config, out.as_deref())?),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut warnings = Warnings::new();
    let result = run(cli.command, &mut warnings);
    for w in &warnings {
        eprintln!("{}", json!({ "warning": w }));
    }
    match result {
        Ok(summary) => {
            // A closed stdout (e.g. piped into `head`) is not a failure of the command.
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&summary).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
