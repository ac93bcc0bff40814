use std::path::PathBuf;

use clap::Args;
use qrk_core::theory::{check_theorem_conditions, rate_curve, TheoremVerdict};
use qrk_core::{Outcome, Params};

use crate::aggregate::{
    aggregate_csv, cycle_iterations, effective_beta, effective_beta_csv, effective_beta_plot,
    error_plot, summarize, summary_csv, SolverSummary,
};
use crate::config::{CorruptionKind, ExperimentConfig, PartialConfig, ProblemKind, ProblemSource};
use crate::error::CliError;
use crate::problem_io::{write_problem, FileFormat, ProblemMeta};
use crate::runner::{build_problem, run_trials, write_file, write_traces, TrialResult};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Generator: gaussian, tomography or csv.
    #[arg(value_enum)]
    pub kind: ProblemKind,
    #[arg(long, value_enum, default_value = "bin")]
    pub format: FileFormat,
    #[command(flatten)]
    pub config: PartialConfig,
}

/// Writes one corrupted problem; returns the manifest text.
pub fn cmd_gen(args: &GenArgs) -> Result<String, CliError> {
    if args.kind == ProblemKind::Dir {
        return Err(CliError::config(
            "problem",
            "gen writes a directory; choose gaussian, tomography or csv",
        ));
    }
    let partial = PartialConfig {
        problem: Some(args.kind),
        vary_problem: Some(false),
        trials: Some(1),
        ..args.config.clone()
    };
    let cfg = ExperimentConfig::resolve(partial)?;
    let problem = build_problem(&cfg, 0)?;
    let truth = problem.truth.ok_or_else(|| {
        CliError::config(
            "make_consistent",
            "a problem directory needs a ground truth; set make_consistent = true",
        )
    })?;
    let clean_labels = problem.system.apply(&truth);
    let outcome = Outcome {
        clean_labels,
        truth,
        support: problem.support.unwrap_or_default(),
        system: problem.system,
    };
    let corruption = match cfg.corruption.kind {
        CorruptionKind::None => "none",
        CorruptionKind::Uniform => "uniform",
        CorruptionKind::TwoLayer => "two-layer",
        CorruptionKind::FiveLayer => "five-layer",
        CorruptionKind::TwoLayerTomo => "two-layer-tomo",
    };
    let (kind, problem_seed) = match cfg.problem {
        ProblemSource::Gaussian { seed, .. } => ("gaussian", Some(seed)),
        ProblemSource::Tomography { seed, .. } => ("tomography", Some(seed)),
        _ => ("csv", None),
    };
    let meta = ProblemMeta {
        kind: kind.into(),
        m: outcome.system.m(),
        n: outcome.system.n(),
        format: args.format,
        problem_seed,
        corruption: corruption.into(),
        beta: cfg.corruption.beta,
        corruption_seed: cfg.corruption.seed,
        corrupted_rows: outcome.support.len(),
    };
    write_problem(&cfg.output, &outcome, &meta)
}

#[derive(Debug)]
pub struct SolveOutput {
    pub results: Vec<TrialResult>,
    pub summary: Vec<SolverSummary>,
}

/// Runs all trials and writes traces, final estimates and `summary.csv`.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<SolveOutput, CliError> {
    let results = run_trials(cfg)?;
    write_traces(&cfg.output, &results)?;
    let summary = summarize(&results, &cfg.solvers);
    write_file(&cfg.output.join("summary.csv"), summary_csv(&summary))?;
    Ok(SolveOutput { results, summary })
}

/// [`cmd_solve`] plus cross-trial aggregates and SVG plots.
pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<SolveOutput, CliError> {
    if cfg.trials < 2 {
        return Err(CliError::Aggregation(cfg.trials));
    }
    let out = cmd_solve(cfg)?;
    let dir = &cfg.output;
    write_file(
        &dir.join("aggregate.csv"),
        aggregate_csv(&out.results, &cfg.solvers),
    )?;
    let has_truth = out.summary.iter().any(|s| s.final_error.is_some());
    if has_truth {
        write_file(
            &dir.join("error.svg"),
            error_plot(&out.results, &cfg.solvers).render(),
        )?;
    }
    let s = &cfg.settings;
    let rows = effective_beta(
        &out.results,
        &cycle_iterations(s.n1, s.s_cycle, s.iterations()),
    );
    if !rows.is_empty() {
        write_file(&dir.join("effective_beta.csv"), effective_beta_csv(&rows))?;
        write_file(
            &dir.join("effective_beta.svg"),
            effective_beta_plot(&rows).render(),
        )?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    /// Comma-separated β values [default: 0, 0.01, …, 0.30].
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long = "c-d", default_value_t = 1.0)]
    pub c_d: f64,
    /// Row count used by the condition check.
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    /// Also evaluate the theorem's two side conditions at each β.
    #[arg(long)]
    pub check_conditions: bool,
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Debug)]
pub struct RateOutput {
    pub curve: Vec<(f64, f64)>,
    pub verdicts: Vec<(f64, TheoremVerdict<f64>)>,
    pub plotted: bool,
}

pub fn default_betas() -> Vec<f64> {
    (0..=30).map(|k| k as f64 / 100.0).collect()
}

/// Tabulates the contraction factor to `rate.csv`, plotting it when there
/// are at least two points.
pub fn cmd_rate(args: &RateArgs) -> Result<RateOutput, CliError> {
    let betas = args.betas.clone().unwrap_or_else(default_betas);
    if betas.is_empty() {
        return Err(CliError::config("betas", "empty grid"));
    }
    let params = Params {
        c_d: args.c_d,
        ..Params::new(args.n, args.m, args.alpha, 0.0)
    };
    let curve = rate_curve(&params, &betas)?;
    let verdicts = if args.check_conditions {
        betas
            .iter()
            .map(|&b| Ok((b, check_theorem_conditions(&params.with_beta(b))?)))
            .collect::<Result<_, CliError>>()?
    } else {
        Vec::new()
    };
    std::fs::create_dir_all(&args.output).map_err(|e| CliError::io(&args.output, e))?;
    let mut csv = String::from("beta,factor\n");
    for (b, f) in &curve {
        csv.push_str(&format!("{b:.16e},{f:.16e}\n"));
    }
    write_file(&args.output.join("rate.csv"), csv)?;
    let plotted = curve.len() >= 2;
    if plotted {
        let plot = crate::svg::Plot {
            title: format!(
                "Contraction factor (n = {}, alpha = {}, C_D = {})",
                args.n, args.alpha, args.c_d
            ),
            x_label: "beta".into(),
            y_label: "factor".into(),
            log_y: false,
            series: vec![crate::svg::Series {
                name: "factor".into(),
                points: curve.clone(),
                band: None,
            }],
        };
        write_file(&args.output.join("rate.svg"), plot.render())?;
    }
    Ok(RateOutput {
        curve,
        verdicts,
        plotted,
    })
}
