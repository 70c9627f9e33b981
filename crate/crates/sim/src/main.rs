use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smx::config::{parse_config, SCHEMA};
use smx::runner::{run_scenario, RunOverrides};
use smx::{exit, SimError};

#[derive(Parser)]
#[command(name = "smx", version, about = "Structure-preserving Schrödinger–Maxwell time stepping")]
struct Cli {
    /// Increase log detail (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts into the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Override the step count from the file.
        #[arg(long)]
        n_steps: Option<usize>,
        /// Override the series sampling interval.
        #[arg(long)]
        interval: Option<usize>,
    },
    /// Parse and validate a scenario without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the annotated scenario schema.
    DescribeSchema,
}

fn read_config(path: &PathBuf) -> Result<String, SimError> {
    // A missing scenario file is a configuration problem, not an output one.
    fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> Result<(), SimError> {
    match cmd {
        Command::Run { config, output, n_steps, interval } => {
            let text = read_config(&config)?;
            let cfg = parse_config(&text)?;
            let report = run_scenario(&cfg, &text, &output, RunOverrides { n_steps, interval })?;
            println!(
                "{} steps, series at {}, max verified residual {:.3e}",
                report.steps_completed,
                report.series_path.display(),
                report.audit.max_residual
            );
        }
        Command::ValidateConfig { config } => {
            let cfg = parse_config(&read_config(&config)?)?;
            println!(
                "{}: ok (grid {:?}, dt {:.6e}, {} steps, order {})",
                cfg.file.name,
                cfg.grid.dims(),
                cfg.dt,
                cfg.n_steps,
                cfg.order
            );
        }
        Command::DescribeSchema => print!("{SCHEMA}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
