use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flatopt_cli::commands;
use flatopt_cli::error::Result;

#[derive(Parser)]
#[command(name = "flatopt", version, about = "Train, probe and bound perturbed-gradient optimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an MLP on a synthetic dataset; writes run.json, metrics.csv, timing.csv.
    Train(JobArgs),
    /// Evaluate the toy landscape panels on a grid; one CSV per panel.
    Landscape(JobArgs),
    /// Run an invariant suite and write a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate the generalization bound; writes bound.csv.
    Bound(JobArgs),
    /// Summarise run directories by dataset and optimizer; writes comparison.csv.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct JobArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let config = commands::read_config(a.config.as_deref())?.with_seed(a.seed);
            let r = commands::train(&config, &a.out)?;
            let s = &r.summary;
            println!(
                "{} on {}: best test acc {:.4} (epoch {}), final train acc {:.4}",
                s.optimizer, s.dataset, s.best_test_acc, s.best_epoch, s.final_train_acc
            );
        }
        Command::Landscape(a) => {
            let config = commands::read_config(a.config.as_deref())?.with_seed(a.seed);
            for path in commands::landscape(&config, &a.out)? {
                println!("{}", path.display());
            }
        }
        Command::Verify { suite, out } => {
            let report = commands::verify(&suite, &out)?;
            for c in &report.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                println!("{status} {}: {:e} (tolerance {:e})", c.check, c.value, c.tolerance);
            }
            commands::require_pass(&report)?;
        }
        Command::Bound(a) => {
            let config = commands::read_config(a.config.as_deref())?;
            let r = commands::bound(&config, &a.out)?;
            println!("{}\n{}", flatopt::pacbayes::BoundReport::CSV_HEADER, r.csv_row());
        }
        Command::Compare { runs, out } => {
            for row in commands::compare(&runs, &out)? {
                println!("{} {} n={} {}", row.dataset, row.optimizer, row.runs, row.formatted());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flatopt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
