use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsplit_cli::compare::{self, SweepConfig};
use qsplit_cli::run::{run_scenario, RunOptions};
use qsplit_cli::verify::{self, VerifyOptions};
use qsplit_cli::{models, CliError, Result};

#[derive(Parser)]
#[command(name = "qsplit", version, about = "Effective Hamiltonians and energy ledgers for bipartite quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its CSV ledger and JSON report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (default: next to the scenario file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the grid step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the final time.
        #[arg(long = "t-max")]
        t_max: Option<f64>,
    },
    /// Check the primary path against independent oracles on random instances.
    Verify {
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Largest dimensions to sample, as dSxdE.
        #[arg(long, default_value = "4x4", value_parser = verify::parse_dims)]
        dims: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write JSON lines here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the printed closed form for the diagonal parts with the exact minimizer.
    CompareClosedForm {
        /// Sweep description (JSON); defaults are used when omitted.
        #[arg(long)]
        sweep: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in model families and their parameters.
    ListModels,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            dt,
            t_max,
        } => {
            let outcome = run_scenario(&scenario, &RunOptions { out_dir: out, dt, t_max })?;
            let s = &outcome.report.summary;
            println!(
                "{}: {} steps, Q_S = {:.6e}, W_S = {:.6e}, integrated first-law residual {:.3e}",
                outcome.report.name, outcome.report.steps, s.final_heat, s.final_work, s.integrated_residual
            );
            println!("csv: {}", outcome.csv_path.display());
            println!("report: {}", outcome.report_path.display());
            outcome.check()
        }
        Command::Verify {
            count,
            dims,
            seed,
            out,
        } => {
            let reports = verify::run_battery(&VerifyOptions {
                count,
                max_dims: dims,
                seed,
            })?;
            let lines = verify::to_json_lines(&reports);
            match out {
                Some(path) => qsplit_cli::run::write_atomic(&path, lines.as_bytes())?,
                None => std::io::stdout()
                    .write_all(lines.as_bytes())
                    .map_err(|e| CliError::io("<stdout>", e))?,
            }
            verify::verdict(&reports)
        }
        Command::CompareClosedForm { sweep, out } => {
            let sweep = match sweep {
                Some(p) => compare::load_sweep(&p)?,
                None => SweepConfig::default(),
            };
            let doc = compare::compare(&sweep)?;
            compare::write_document(&doc, &out)?;
            for (label, s) in [("dimension", &doc.dimension_reading), ("rank", &doc.rank_reading)] {
                println!(
                    "{label} reading: {} rows, {} agree, {} disagree, {} undefined, max deviation {:.3e}",
                    s.rows, s.agree, s.disagree, s.undefined, s.max_deviation
                );
            }
            Ok(())
        }
        Command::ListModels => {
            for (name, mode, params) in models::catalogue() {
                println!("{name:<28} {mode:<26} {params}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
