//! Cross-trial statistics: per-iteration median and interquartile band.
//!
//! Quartiles use the `statrs` order-statistic estimator (R type 8).

use std::fmt::Write as _;

use qrk_core::TraceRecord;
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::config::SolverKind;
use crate::runner::TrialResult;
use crate::svg::{Plot, Series};

/// Median and quartiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Band {
    pub fn of(values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut data = Data::new(values);
        Some(Self {
            median: data.median(),
            q1: data.lower_quartile(),
            q3: data.upper_quartile(),
        })
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

fn traces(results: &[TrialResult], kind: SolverKind) -> Vec<&[TraceRecord]> {
    results
        .iter()
        .flat_map(|r| r.runs.iter())
        .filter(|(k, _)| *k == kind)
        .map(|(_, t)| t.records.as_slice())
        .collect()
}

fn column(
    traces: &[&[TraceRecord]],
    j: usize,
    f: impl Fn(&TraceRecord) -> Option<f64>,
) -> Option<Vec<f64>> {
    traces.iter().map(|t| t.get(j).and_then(&f)).collect()
}

/// Per-solver summary of final states.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: SolverKind,
    pub trials: usize,
    pub final_error: Option<Band>,
    pub final_wl_corruption: Option<f64>,
    pub partition_checks: usize,
}

pub fn summarize(results: &[TrialResult], solvers: &[SolverKind]) -> Vec<SolverSummary> {
    solvers
        .iter()
        .map(|&solver| {
            let runs: Vec<_> = results
                .iter()
                .flat_map(|r| r.runs.iter())
                .filter(|(k, _)| *k == solver)
                .map(|(_, t)| t)
                .collect();
            let errors: Option<Vec<f64>> = runs.iter().map(|t| t.final_rel_error()).collect();
            let fracs: Option<Vec<f64>> = runs.iter().map(|t| t.final_wl_corruption()).collect();
            SolverSummary {
                solver,
                trials: runs.len(),
                final_error: errors.and_then(Band::of),
                final_wl_corruption: fracs.and_then(Band::of).map(|b| b.median),
                partition_checks: runs.iter().map(|t| t.partition_checks).sum(),
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: &str =
    "solver,trials,median_final_rel_error,q1_final_rel_error,q3_final_rel_error,median_final_wl_corruption_frac,partition_checks";

pub fn summary_csv(summary: &[SolverSummary]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in summary {
        let e = s.final_error;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.solver.name(),
            s.trials,
            cell(e.map(|b| b.median)),
            cell(e.map(|b| b.q1)),
            cell(e.map(|b| b.q3)),
            cell(s.final_wl_corruption),
            s.partition_checks
        );
    }
    out
}

/// Per-iteration median/IQR of the relative error for one solver.
pub fn error_bands(
    results: &[TrialResult],
    kind: SolverKind,
) -> Vec<(usize, Option<Band>, Option<f64>, f64)> {
    let traces = traces(results, kind);
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    (0..len)
        .map(|j| {
            let err = column(&traces, j, |r| r.rel_error).and_then(Band::of);
            let frac = column(&traces, j, |r| r.wl_corruption_frac)
                .and_then(Band::of)
                .map(|b| b.median);
            let q = Band::of(traces.iter().map(|t| t[j].q_current).collect())
                .map_or(f64::NAN, |b| b.median);
            (j, err, frac, q)
        })
        .collect()
}

pub const AGGREGATE_HEADER: &str =
    "solver,iteration,median_rel_error,q1_rel_error,q3_rel_error,median_wl_corruption_frac,median_q_current";

pub fn aggregate_csv(results: &[TrialResult], solvers: &[SolverKind]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for &kind in solvers {
        for (j, err, frac, q) in error_bands(results, kind) {
            let _ = writeln!(
                out,
                "{},{j},{},{},{},{},{}",
                kind.name(),
                cell(err.map(|b| b.median)),
                cell(err.map(|b| b.q1)),
                cell(err.map(|b| b.q3)),
                cell(frac),
                cell(Some(q))
            );
        }
    }
    out
}

/// Iterations at which blocking cycles end: 0, then every multiple of
/// `s_cycle` after the warm-up, up to the budget.
pub fn cycle_iterations(n1: usize, s_cycle: usize, iterations: usize) -> Vec<usize> {
    std::iter::once(0)
        .chain(((n1 + 1)..=iterations).filter(|j| j % s_cycle == 0))
        .collect()
}

/// `(cycle, iteration, band)` of the whitelist corruption fraction.
pub fn effective_beta(results: &[TrialResult], cycles: &[usize]) -> Vec<(usize, usize, Band)> {
    let traces = traces(results, SolverKind::Wlqrk);
    cycles
        .iter()
        .enumerate()
        .filter_map(|(c, &j)| {
            let band = column(&traces, j, |r| r.wl_corruption_frac).and_then(Band::of)?;
            Some((c, j, band))
        })
        .collect()
}

pub const EFFECTIVE_BETA_HEADER: &str =
    "cycle,iteration,median_wl_corruption_frac,q1_wl_corruption_frac,q3_wl_corruption_frac";

pub fn effective_beta_csv(rows: &[(usize, usize, Band)]) -> String {
    let mut out = format!("{EFFECTIVE_BETA_HEADER}\n");
    for &(c, j, b) in rows {
        let _ = writeln!(out, "{c},{j},{:.16e},{:.16e},{:.16e}", b.median, b.q1, b.q3);
    }
    out
}

pub fn error_plot(results: &[TrialResult], solvers: &[SolverKind]) -> Plot {
    let series = solvers
        .iter()
        .map(|&kind| {
            let bands = error_bands(results, kind);
            Series {
                name: kind.name().to_string(),
                points: bands
                    .iter()
                    .filter_map(|(j, e, _, _)| Some((*j as f64, e.as_ref()?.median)))
                    .collect(),
                band: Some(
                    bands
                        .iter()
                        .filter_map(|(j, e, _, _)| {
                            Some((*j as f64, e.as_ref()?.q1, e.as_ref()?.q3))
                        })
                        .collect(),
                ),
            }
        })
        .collect();
    Plot {
        title: "Relative error (median, interquartile band)".into(),
        x_label: "iteration".into(),
        y_label: "||x - x*|| / ||x*||".into(),
        log_y: true,
        series,
    }
}

pub fn effective_beta_plot(rows: &[(usize, usize, Band)]) -> Plot {
    Plot {
        title: "Whitelist corruption fraction".into(),
        x_label: "blocking cycle".into(),
        y_label: "|WL ∩ support| / |WL|".into(),
        log_y: false,
        series: vec![Series {
            name: "wlqrk".into(),
            points: rows.iter().map(|&(c, _, b)| (c as f64, b.median)).collect(),
            band: Some(
                rows.iter()
                    .map(|&(c, _, b)| (c as f64, b.q1, b.q3))
                    .collect(),
            ),
        }],
    }
}
