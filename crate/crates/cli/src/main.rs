use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qhd_cli::{cmd_check, cmd_simulate, cmd_sweep, parse_config, CliError, Config};

#[derive(Parser)]
#[command(name = "qhd", version, about = "Bipolar quantum hydrodynamics on a periodic interval")]
struct Cli {
    /// Worker threads for sweeps (default: all available processors).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Reserved; every experiment is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration.
    Simulate { config: PathBuf },
    /// Run a convergence sweep.
    Sweep { config: PathBuf },
    /// Run the built-in invariant suite.
    Check,
}

fn load(path: &Path, output: Option<PathBuf>) -> Result<Config, CliError> {
    let mut config = parse_config(path)?;
    if let Some(dir) = output {
        config.output_mut().dir = dir;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config } => match load(&config, cli.output)? {
            Config::Run(cfg) => {
                let out = cmd_simulate(&cfg)?;
                println!("{} steps, output in {}", out.steps, out.dir.display());
                Ok(())
            }
            Config::Sweep(_) => Err(not_a(&config, "run", "sweep")),
        },
        Command::Sweep { config } => match load(&config, cli.output)? {
            Config::Sweep(cfg) => {
                let out = cmd_sweep(&cfg, cli.jobs)?;
                let rate = out.report.report.main.density_rate.map(|r| r.rate);
                println!(
                    "{} sweep passed (density rate {}), output in {}",
                    out.report.report.sweep_kind.name(),
                    rate.map_or_else(|| "n/a".into(), |r| format!("{r:.3}")),
                    out.dir.display()
                );
                Ok(())
            }
            Config::Run(_) => Err(not_a(&config, "sweep", "run")),
        },
        Command::Check => cmd_check(),
    }
}

fn not_a(path: &Path, wanted: &str, found: &str) -> CliError {
    CliError::Config(qhd_cli::ConfigError {
        issues: vec![qhd_cli::config::Issue {
            path: path.display().to_string(),
            line: None,
            message: format!("expected a {wanted} configuration, found a {found} configuration"),
        }],
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
