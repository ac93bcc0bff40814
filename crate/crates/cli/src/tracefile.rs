//! Trace CSV files, one per (solver, trial).
//!
//! ```text
//! iteration,rel_error,wl_size,bl_size,wl_corruption_frac,q_current,wall_time_ns
//! 0,1.0000000000000000e0,2000,0,2.0000000000000001e-1,7.5000000000000000e-1,1250
//! ```
//!
//! Floats carry 17 significant digits (`{:.16e}`), enough to round-trip any
//! `f64`. Fields that need the oracle are empty cells when it is absent.

use std::fmt::Write as _;

use qrk_core::TraceRecord;

pub const HEADER: &str =
    "iteration,rel_error,wl_size,bl_size,wl_corruption_frac,q_current,wall_time_ns";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

fn float_cell(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        let _ = write!(out, "{v:.16e}");
    }
}

pub fn serialize(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        let _ = write!(out, "{},", r.iteration);
        float_cell(&mut out, r.rel_error);
        let _ = write!(out, ",{},{},", r.wl_size, r.bl_size);
        float_cell(&mut out, r.wl_corruption_frac);
        out.push(',');
        float_cell(&mut out, Some(r.q_current));
        let _ = writeln!(out, ",{}", r.wall_time_ns);
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<TraceRecord>, TraceParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(TraceParseError {
                line: 1,
                message: format!("expected header `{HEADER}`"),
            })
        }
    }
    let mut records: Vec<TraceRecord> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fail = |message: String| TraceParseError {
            line: lineno,
            message,
        };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(fail(format!("expected 7 cells, found {}", cells.len())));
        }
        let int = |i: usize| {
            cells[i]
                .parse::<u64>()
                .map_err(|e| fail(format!("column {}: {e}", i + 1)))
        };
        let opt = |i: usize| -> Result<Option<f64>, TraceParseError> {
            if cells[i].is_empty() {
                Ok(None)
            } else {
                cells[i]
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| fail(format!("column {}: {e}", i + 1)))
            }
        };
        let record = TraceRecord {
            iteration: int(0)? as usize,
            rel_error: opt(1)?,
            wl_size: int(2)? as usize,
            bl_size: int(3)? as usize,
            wl_corruption_frac: opt(4)?,
            q_current: opt(5)?.ok_or_else(|| fail("q_current is required".into()))?,
            wall_time_ns: int(6)?,
        };
        let expected = records.last().map_or(0, |r| r.iteration + 1);
        if record.iteration != expected {
            return Err(fail(format!(
                "iteration {} out of sequence (expected {expected})",
                record.iteration
            )));
        }
        records.push(record);
    }
    Ok(records)
}

/// The trace text with the wall-time column removed, for determinism checks.
pub fn without_wall_time(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
