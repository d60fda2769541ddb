//! Command-line front end: generate markets, run learners, verify invariants, benchmark.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adamix_dons::harness::{
    bench, format_bench_table, generate, read_returns, run_experiment, verify, write_returns, write_trace, Algo,
    ExperimentConfig, Model, VerifyLevel, VerifyOptions,
};
use adamix_dons::{Error, GradientForm};

#[derive(Parser)]
#[command(version, about = "Online portfolio selection with damped Newton experts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic return matrix as CSV.
    Gen {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        d: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a learner over a return file and report regret against the best CRP.
    Run {
        #[arg(long)]
        algo: Algo,
        #[arg(long)]
        returns: PathBuf,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        as_written: bool,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check the invariant suite over a return file.
    Verify {
        #[arg(long)]
        returns: PathBuf,
        #[arg(long, default_value = "fast")]
        level: VerifyLevel,
        #[arg(long)]
        as_written: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the full algorithm per round.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [2, 5, 10])]
        d: Vec<usize>,
        #[arg(long = "T", value_delimiter = ',', default_values_t = [1024, 4096, 8192])]
        t: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn form(as_written: bool) -> GradientForm {
    if as_written {
        GradientForm::AsWritten
    } else {
        GradientForm::Consistent
    }
}

/// `Ok(false)` means an invariant failed.
fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Gen { model, d, t, seed, out } => {
            write_returns(out, &generate(model, d, t, seed)?)?;
            Ok(true)
        }
        Command::Run { algo, returns, eta, beta, as_written, verify, out, trace } => {
            let data = read_returns(returns)?;
            let config = ExperimentConfig { algo, eta, beta, as_written, verify, trace: trace.is_some() };
            let experiment = run_experiment(&config, &data)?;
            serde_json::to_writer_pretty(BufWriter::new(File::create(out)?), &experiment.report)?;
            if let Some(path) = trace {
                write_trace(BufWriter::new(File::create(path)?), &experiment.trace)?;
            }
            let r = &experiment.report;
            println!("{algo}: loss {:.6} regret {:.6} (best CRP loss {:.6})", r.cumulative_loss, r.regret, r.best_crp_loss);
            for v in &r.violations {
                println!("violation: {v}");
            }
            Ok(r.violations.is_empty())
        }
        Command::Verify { returns, level, as_written, out } => {
            let data = read_returns(returns)?;
            let mut options = VerifyOptions::new(level);
            options.gradient_form = form(as_written);
            let report = verify(&data, &options)?;
            for c in &report.checks {
                println!("{}", c.summary());
            }
            if let Some(path) = out {
                serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &report)?;
            }
            Ok(report.passed)
        }
        Command::Bench { d, t, seed } => {
            print!("{}", format_bench_table(&bench(&d, &t, seed)?));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_invariant_violation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
