use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrk_cli::aggregate::SolverSummary;
use qrk_cli::commands::{cmd_bench, cmd_gen, cmd_rate, cmd_solve, GenArgs, RateArgs};
use qrk_cli::{CliError, ExperimentConfig, PartialConfig};
use qrk_core::theory::TheoremVerdict;

#[derive(Parser)]
#[command(
    name = "qrk",
    version,
    about = "Kaczmarz solvers for sparsely corrupted linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corrupted problem and write it to a directory.
    Gen(GenArgs),
    /// Run the configured solvers and write one trace per (solver, trial).
    Solve(RunArgs),
    /// Like `solve`, plus median/IQR aggregates and SVG plots.
    Bench(RunArgs),
    /// Tabulate the contraction factor over a grid of corruption fractions.
    Rate(RateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: PartialConfig,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::resolve(PartialConfig::load(
            self.config.as_deref(),
            self.overrides.clone(),
        )?)
    }
}

fn print_summary(summary: &[SolverSummary]) {
    println!(
        "{:<6} {:>6} {:>14} {:>14}",
        "solver", "trials", "median_error", "median_wl_frac"
    );
    for s in summary {
        let err = s
            .final_error
            .map_or("-".to_string(), |b| format!("{:.3e}", b.median));
        let frac = s
            .final_wl_corruption
            .map_or("-".to_string(), |f| format!("{f:.4}"));
        println!(
            "{:<6} {:>6} {:>14} {:>14}",
            s.solver.name(),
            s.trials,
            err,
            frac
        );
    }
}

fn print_verdict(beta: f64, v: &TheoremVerdict<f64>) {
    println!(
        "beta={beta}: m/n > bound: {} ({:.4e} vs {:.4e}); corruption bound: {} ({:.4e} vs {:.4e})",
        v.tall_enough.holds,
        v.tall_enough.lhs,
        v.tall_enough.rhs,
        v.corruption_small.holds,
        v.corruption_small.lhs,
        v.corruption_small.rhs
    );
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => print!("{}", cmd_gen(&args)?),
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            print_summary(&cmd_solve(&cfg)?.summary);
            println!("wrote {}", cfg.output.display());
        }
        Command::Bench(args) => {
            let cfg = args.resolve()?;
            print_summary(&cmd_bench(&cfg)?.summary);
            println!("wrote {}", cfg.output.display());
        }
        Command::Rate(args) => {
            let out = cmd_rate(&args)?;
            for (b, f) in &out.curve {
                println!("{b:.4} {f:.12}");
            }
            if !out.verdicts.is_empty() {
                println!("{}", TheoremVerdict::<f64>::DISCLAIMER);
                for (b, v) in &out.verdicts {
                    print_verdict(*b, v);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::config("args", message).report_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
