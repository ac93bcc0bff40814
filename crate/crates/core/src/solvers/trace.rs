use std::time::{Duration, Instant};

use super::{SolverError, WhitelistState};
use crate::linalg::Estimate;
use crate::scalar::{relative_error, Scalar};

/// Ground truth available to a benchmark run. Never consulted by the solvers'
/// decisions, only by trace recording.
#[derive(Debug, Clone, Copy)]
pub struct Oracle<'a, T> {
    pub truth: &'a [T],
    /// Sorted corrupted row indices, when known.
    pub support: Option<&'a [usize]>,
}

impl<'a, T> Oracle<'a, T> {
    pub fn new(truth: &'a [T]) -> Self {
        Self {
            truth,
            support: None,
        }
    }

    pub fn with_support(truth: &'a [T], support: &'a [usize]) -> Self {
        Self {
            truth,
            support: Some(support),
        }
    }
}

/// State after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// `‖x_j − x⋆‖ / ‖x⋆‖`; `None` without an oracle.
    pub rel_error: Option<f64>,
    pub wl_size: usize,
    pub bl_size: usize,
    /// `|WL ∩ support| / |WL|`; `None` without a known support.
    pub wl_corruption_frac: Option<f64>,
    pub q_current: f64,
    /// Informational only; excluded from determinism comparisons.
    pub wall_time_ns: u64,
}

impl TraceRecord {
    /// Equality ignoring wall time.
    pub fn same_state(&self, other: &Self) -> bool {
        Self {
            wall_time_ns: 0,
            ..self.clone()
        } == Self {
            wall_time_ns: 0,
            ..other.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    /// Iterations `0..=N`.
    pub records: Vec<TraceRecord>,
    pub estimate: Estimate<T>,
    /// Number of whitelist/blocklist invariant checks performed.
    pub partition_checks: usize,
}

impl<T> RunTrace<T> {
    pub fn final_rel_error(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.rel_error)
    }

    pub fn final_wl_corruption(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.wl_corruption_frac)
    }
}

/// Builds one trace record from scratch.
///
/// The whitelist corruption fraction is computed directly as
/// `|WL ∩ support| / |WL|`.
pub fn record_trace_point<T: Scalar>(
    iteration: usize,
    x: &[T],
    lists: &WhitelistState,
    oracle: Option<&Oracle<'_, T>>,
    elapsed: Duration,
) -> TraceRecord {
    let wl = lists.whitelist();
    TraceRecord {
        iteration,
        rel_error: oracle.map(|o| relative_error(x, o.truth).as_f64()),
        wl_size: wl.len(),
        bl_size: lists.blocklist().len(),
        wl_corruption_frac: oracle.and_then(|o| o.support).map(|support| {
            let hits = wl
                .iter()
                .filter(|i| support.binary_search(i).is_ok())
                .count();
            hits as f64 / wl.len() as f64
        }),
        q_current: lists.q_current(),
        wall_time_ns: elapsed.as_nanos() as u64,
    }
}

/// Incremental recorder used inside the solver loops.
pub(super) struct Recorder<'a, T> {
    truth: Option<&'a [T]>,
    start: Instant,
}

impl<'a, T: Scalar> Recorder<'a, T> {
    pub(super) fn new(
        oracle: Option<&Oracle<'a, T>>,
        n: usize,
        lists: &mut WhitelistState,
    ) -> Result<Self, SolverError> {
        if let Some(o) = oracle {
            if o.truth.len() != n {
                return Err(SolverError::Config(format!(
                    "oracle truth has length {} for n={n}",
                    o.truth.len()
                )));
            }
            if let Some(support) = o.support {
                lists.track_support(support)?;
            }
        }
        Ok(Self {
            truth: oracle.map(|o| o.truth),
            start: Instant::now(),
        })
    }

    pub(super) fn record(&self, iteration: usize, x: &[T], lists: &WhitelistState) -> TraceRecord {
        TraceRecord {
            iteration,
            rel_error: self.truth.map(|t| relative_error(x, t).as_f64()),
            wl_size: lists.whitelist().len(),
            bl_size: lists.blocklist().len(),
            wl_corruption_frac: lists.wl_corruption_fraction(),
            q_current: lists.q_current(),
            wall_time_ns: self.start.elapsed().as_nanos() as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_oracle_leaves_fields_empty() {
        let lists = WhitelistState::new(4, 0.9);
        let r = record_trace_point::<f64>(0, &[0.0], &lists, None, Duration::ZERO);
        assert_eq!(r.rel_error, None);
        assert_eq!(r.wl_corruption_frac, None);
        assert_eq!((r.wl_size, r.bl_size), (4, 0));
    }

    #[test]
    fn full_whitelist_fraction_is_beta() {
        let lists = WhitelistState::new(10, 0.5);
        let truth = [1.0];
        let support = [2, 5, 7, 9];
        let oracle = Oracle::with_support(&truth[..], &support[..]);
        let r = record_trace_point(3, &[1.0], &lists, Some(&oracle), Duration::ZERO);
        assert_eq!(r.wl_corruption_frac, Some(0.4));
        assert_eq!(r.rel_error, Some(0.0));
    }

    #[test]
    fn perfect_screening_fraction_is_zero() {
        let support = [2, 5, 7, 9];
        let mut lists = WhitelistState::new(10, 0.5);
        lists.track_support(&support).unwrap();
        lists.move_to_blocklist(&support).unwrap();
        let truth = [2.0];
        let oracle = Oracle::with_support(&truth[..], &support[..]);
        let r = record_trace_point(3, &[1.0], &lists, Some(&oracle), Duration::ZERO);
        assert_eq!(r.wl_corruption_frac, Some(0.0));
        assert_eq!(lists.wl_corruption_fraction(), Some(0.0));
        assert_eq!(r.rel_error, Some(0.5));
    }
}
