use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epn_cli::{CliError, ConfigDocument, MethodArg, Report, SimDoc, EXIT_IO};
use epn_core::Execution;

#[derive(Parser)]
#[command(
    name = "epn",
    version,
    about = "Energy packet network solver, optimizer and simulator"
)]
struct Cli {
    /// TOML network description.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate W, E, C and the utilizations at an allocation.
    Solve {
        /// Comma-separated allocation; overrides `alloc` in the config.
        #[arg(long, value_delimiter = ',')]
        alloc: Option<Vec<f64>>,
    },
    /// Find the allocation minimizing C.
    Optimize {
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        /// Grid spacing for `--method grid` (default 1e-3).
        #[arg(long, value_name = "X")]
        grid_step: Option<f64>,
    },
    /// Write the cost landscape over the simplex to a CSV file.
    Sweep {
        #[arg(long, value_name = "X")]
        step: f64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Simulate the network and compare with the analytic solution.
    Simulate {
        #[arg(long, value_delimiter = ',')]
        alloc: Option<Vec<f64>>,
        /// Simulated seconds per replication.
        #[arg(long, value_name = "S")]
        horizon: Option<f64>,
        /// Seconds discarded at the start of each replication.
        #[arg(long, value_name = "S")]
        warmup: Option<f64>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        #[arg(long, value_name = "K")]
        reps: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<Report, CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Validation("--config PATH is required".into()))?;
    let doc = ConfigDocument::load(&path)?;
    match cli.command {
        Command::Solve { alloc } => epn_cli::solve(&doc, alloc),
        Command::Optimize { method, grid_step } => epn_cli::optimize_cmd(&doc, method, grid_step),
        Command::Sweep { step, out } => epn_cli::sweep(&doc, step, &out),
        Command::Simulate {
            alloc,
            horizon,
            warmup,
            seed,
            reps,
        } => {
            let overrides = SimDoc {
                horizon,
                warmup,
                seed,
                replications: reps,
            };
            epn_cli::simulate(&doc, alloc, &overrides, Execution::default())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(json) => {
                println!("{json}");
                eprintln!("{}", report.summary());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("epn: cannot serialize report: {e}");
                ExitCode::from(EXIT_IO as u8)
            }
        },
        Err(e) => {
            eprintln!("epn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
