//! Trial orchestration.
//!
//! Trial `k` runs every selected solver with seed
//! `derive_seed(base_seed, k)`. With `vary_problem` the problem and the
//! corruption are regenerated from `derive_seed(problem_seed, k)` and
//! `derive_seed(corruption_seed, k)`. Trials share nothing mutable, so they
//! may run concurrently; results are collected in trial order.

use std::path::Path;

use qrk_core::problems::{
    apply_corruption, gen_gaussian_system, gen_tomography_system, load_csv_system, CleanProblem,
};
use qrk_core::solvers::{qrk_solve, rk_solve, wlqrk_solve};
use qrk_core::{derive_seed, CorruptionSpec, Iterate, Oracle, RkConfig, System, Trace};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemSource, SolverKind, StartKind};
use crate::error::{problem_error, CliError};
use crate::problem_io::read_problem;

/// A problem instance as seen by one trial.
#[derive(Debug, Clone)]
pub struct TrialProblem {
    pub system: System,
    pub truth: Option<Vec<f64>>,
    pub support: Option<Vec<usize>>,
}

impl TrialProblem {
    pub fn oracle(&self) -> Option<Oracle<'_, f64>> {
        let truth = self.truth.as_deref()?;
        Some(match &self.support {
            Some(s) => Oracle::with_support(truth, s),
            None => Oracle::new(truth),
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub runs: Vec<(SolverKind, Trace)>,
}

fn clean_problem(
    source: &ProblemSource,
    seed: Option<u64>,
) -> Result<(System, Option<Vec<f64>>), CliError> {
    let generated = match *source {
        ProblemSource::Gaussian { m, n, seed: s } => {
            gen_gaussian_system::<f64>(m, n, seed.unwrap_or(s))
        }
        ProblemSource::Tomography {
            grid,
            rays,
            seed: s,
        } => gen_tomography_system::<f64>(grid, rays, seed.unwrap_or(s)),
        ProblemSource::Csv {
            ref path,
            header,
            make_consistent,
        } => {
            let loaded = load_csv_system::<f64>(path, header, make_consistent)
                .map_err(|e| problem_error(e, Some(path)))?;
            return Ok((loaded.system, loaded.truth));
        }
        ProblemSource::Dir { .. } => unreachable!("handled by build_problem"),
    };
    let clean = generated.map_err(|e| problem_error(e, None))?;
    Ok((clean.system, Some(clean.truth)))
}

/// Builds the problem for `trial`.
pub fn build_problem(cfg: &ExperimentConfig, trial: usize) -> Result<TrialProblem, CliError> {
    if let ProblemSource::Dir { path } = &cfg.problem {
        let (outcome, _) = read_problem(path)?;
        return Ok(TrialProblem {
            system: outcome.system,
            truth: Some(outcome.truth),
            support: Some(outcome.support),
        });
    }
    let vary = |seed: u64| {
        if cfg.vary_problem {
            derive_seed(seed, trial as u64)
        } else {
            seed
        }
    };
    let problem_seed = match cfg.problem {
        ProblemSource::Gaussian { seed, .. } | ProblemSource::Tomography { seed, .. } => {
            Some(vary(seed))
        }
        _ => None,
    };
    let (system, truth) = clean_problem(&cfg.problem, problem_seed)?;
    let Some(model) = cfg.corruption.model(system.m()) else {
        let support = truth.as_ref().map(|_| Vec::new());
        return Ok(TrialProblem {
            system,
            truth,
            support,
        });
    };
    let truth = truth.ok_or_else(|| {
        CliError::config(
            "make_consistent",
            "corrupting a CSV system needs a ground truth; set make_consistent = true",
        )
    })?;
    let spec = CorruptionSpec {
        model,
        beta: cfg.corruption.beta,
        seed: vary(cfg.corruption.seed),
    };
    let outcome = apply_corruption(&CleanProblem { system, truth }, &spec)
        .map_err(|e| problem_error(e, None))?;
    Ok(TrialProblem {
        system: outcome.system,
        truth: Some(outcome.truth),
        support: Some(outcome.support),
    })
}

pub fn starting_point(cfg: &ExperimentConfig, system: &System) -> Result<Iterate, CliError> {
    match cfg.x0 {
        StartKind::Zero => Ok(Iterate::zeros(system.n())),
        StartKind::LeastSquares => Ok(system.least_squares_default()?),
    }
}

/// Runs one solver on a prepared problem.
pub fn run_solver(
    cfg: &ExperimentConfig,
    kind: SolverKind,
    problem: &TrialProblem,
    x0: &Iterate,
    seed: u64,
) -> Result<Trace, CliError> {
    let system = &problem.system;
    let oracle = problem.oracle();
    let m = system.m();
    let s = &cfg.settings;
    let trace = match kind {
        SolverKind::Rk => rk_solve(
            system,
            &RkConfig {
                iterations: s.iterations(),
                seed,
            },
            x0,
            oracle.as_ref(),
        )?,
        SolverKind::Qrk => qrk_solve(system, &s.qrk(m, seed), None, x0, oracle.as_ref())?,
        SolverKind::Wlqrk => wlqrk_solve(system, &s.wlqrk(m, seed), x0, oracle.as_ref())?,
    };
    Ok(trace)
}

pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialResult, CliError> {
    let problem = build_problem(cfg, trial)?;
    let x0 = starting_point(cfg, &problem.system)?;
    let seed = derive_seed(cfg.base_seed, trial as u64);
    let runs = cfg
        .solvers
        .iter()
        .map(|&kind| Ok((kind, run_solver(cfg, kind, &problem, &x0, seed)?)))
        .collect::<Result<_, CliError>>()?;
    Ok(TrialResult { trial, seed, runs })
}

/// All trials, concurrently when `cfg.parallel`.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>, CliError> {
    if cfg.parallel {
        (0..cfg.trials)
            .into_par_iter()
            .map(|k| run_trial(cfg, k))
            .collect()
    } else {
        (0..cfg.trials).map(|k| run_trial(cfg, k)).collect()
    }
}

pub fn trace_file_name(kind: SolverKind, trial: usize) -> String {
    format!("trace_{}_{trial:03}.csv", kind.name())
}

pub fn estimate_file_name(kind: SolverKind, trial: usize) -> String {
    format!("estimate_{}_{trial:03}.csv", kind.name())
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// One trace and one final-estimate file per (solver, trial).
pub fn write_traces(dir: &Path, results: &[TrialResult]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for r in results {
        for (kind, trace) in &r.runs {
            write_file(
                &dir.join(trace_file_name(*kind, r.trial)),
                crate::tracefile::serialize(&trace.records),
            )?;
            let estimate: String = trace.estimate.iter().map(|v| format!("{v:e}\n")).collect();
            write_file(&dir.join(estimate_file_name(*kind, r.trial)), estimate)?;
        }
    }
    Ok(())
}
