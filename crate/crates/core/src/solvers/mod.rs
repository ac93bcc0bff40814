//! Randomized Kaczmarz, quantile randomized Kaczmarz (QRK) and whitelist QRK.
//!
//! Every solver runs a fixed iteration budget, draws all of its randomness
//! from one [`RngStream`](crate::RngStream) seeded from its config, and
//! returns a [`RunTrace`] with one record per iteration (iteration 0 is the
//! starting point).

mod qrk;
mod trace;
mod whitelist;
mod wlqrk;

use thiserror::Error;

pub use qrk::{qrk_solve, qrk_solve_observed, QrkConfig};
pub use trace::{record_trace_point, Oracle, RunTrace, TraceRecord};
pub use whitelist::WhitelistState;
pub use wlqrk::{wlqrk_solve, wlqrk_solve_observed, SolverConfig};

use crate::linalg::{Estimate, LinalgError, LinearSystem};
use crate::sampling::{RngStream, SamplingError};
use crate::scalar::{dot, norm, Scalar};
use trace::Recorder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("row is not unit-norm (norm {0})")]
    NonUnitRow(f64),
    #[error("iterate became non-finite at iteration {0}")]
    NonFinite(usize),
    #[error("whitelist invariant violated: {0}")]
    InvariantViolation(String),
    #[error("invalid index pool: {0}")]
    InvalidPool(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// One Kaczmarz projection `x⁺ = x − (⟨a, x⟩ − b)·a` onto a unit-norm row.
pub fn rk_step<T: Scalar>(
    x: &Estimate<T>,
    row: &[T],
    label: T,
) -> Result<Estimate<T>, SolverError> {
    if row.len() != x.len() {
        return Err(LinalgError::ShapeMismatch(format!(
            "row of length {} for iterate of length {}",
            row.len(),
            x.len()
        ))
        .into());
    }
    let len = norm(row);
    if !((len - T::one()).abs() <= T::UNIT_NORM_TOL) {
        return Err(SolverError::NonUnitRow(len.as_f64()));
    }
    let r = dot(row, x) - label;
    let next = x.iter().zip(row).map(|(&xi, &a)| xi - r * a).collect();
    Estimate::new(next).map_err(|_| SolverError::NonFinite(1))
}

/// Budget and seed for plain randomized Kaczmarz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkConfig {
    pub iterations: usize,
    pub seed: u64,
}

fn check_start<T: Scalar>(system: &LinearSystem<T>, x0: &Estimate<T>) -> Result<(), SolverError> {
    if x0.len() == system.n() {
        Ok(())
    } else {
        Err(
            LinalgError::ShapeMismatch(format!("x0 of length {} for n={}", x0.len(), system.n()))
                .into(),
        )
    }
}

/// Randomized Kaczmarz with uniform row sampling. Rows are unit-norm, so this
/// is the norm-proportional sampling of the classical method.
pub fn rk_solve<T: Scalar>(
    system: &LinearSystem<T>,
    config: &RkConfig,
    x0: &Estimate<T>,
    oracle: Option<&Oracle<'_, T>>,
) -> Result<RunTrace<T>, SolverError> {
    rk_solve_observed(system, config, x0, oracle, |_, _| {})
}

/// [`rk_solve`], calling `observer(j, x_j)` after every iteration including 0.
pub fn rk_solve_observed<T: Scalar>(
    system: &LinearSystem<T>,
    config: &RkConfig,
    x0: &Estimate<T>,
    oracle: Option<&Oracle<'_, T>>,
    mut observer: impl FnMut(usize, &[T]),
) -> Result<RunTrace<T>, SolverError> {
    check_start(system, x0)?;
    let m = system.m();
    let mut lists = WhitelistState::new(m, 1.0);
    let recorder = Recorder::new(oracle, system.n(), &mut lists)?;
    let mut rng = RngStream::new(config.seed);
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(config.iterations + 1);
    records.push(recorder.record(0, &x, &lists));
    observer(0, &x);
    for j in 1..=config.iterations {
        let k = rng.index_below(m);
        let r = system.project_in_place(x.as_mut_slice(), k);
        if !r.is_finite() {
            return Err(SolverError::NonFinite(j));
        }
        records.push(recorder.record(j, &x, &lists));
        observer(j, &x);
    }
    Ok(RunTrace {
        records,
        estimate: x,
        partition_checks: lists.checks(),
    })
}

/// Draws a batch, screens it at the `q`-quantile of absolute residuals, and
/// projects onto a uniformly chosen admissible row. Shared by QRK and
/// WL-QRK so both consume randomness identically.
struct QuantileStepper<T> {
    batch: Vec<usize>,
    residuals: Vec<T>,
    magnitudes: Vec<T>,
    scratch: Vec<T>,
}

struct StepOutcome<T> {
    tau_q: T,
}

impl<T: Scalar> QuantileStepper<T> {
    fn new(t: usize) -> Self {
        Self {
            batch: Vec::with_capacity(t),
            residuals: Vec::with_capacity(t),
            magnitudes: Vec::with_capacity(t),
            scratch: Vec::with_capacity(t),
        }
    }

    fn quantile(&mut self, q: f64) -> Result<T, SolverError> {
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.magnitudes);
        Ok(crate::sampling::lower_quantile_in_place(
            &mut self.scratch,
            q,
        )?)
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        system: &LinearSystem<T>,
        x: &mut [T],
        rng: &mut RngStream,
        pool: &[usize],
        t: usize,
        q: f64,
        iteration: usize,
    ) -> Result<StepOutcome<T>, SolverError> {
        rng.fill_uniform_indices(pool, t, &mut self.batch)?;
        self.residuals.clear();
        self.residuals
            .extend(self.batch.iter().map(|&i| system.residual_unchecked(x, i)));
        if self.residuals.iter().any(|r| !r.is_finite()) {
            return Err(SolverError::NonFinite(iteration));
        }
        self.magnitudes.clear();
        self.magnitudes
            .extend(self.residuals.iter().map(|r| r.abs()));
        let tau_q = self.quantile(q)?;

        let admissible = self.magnitudes.iter().filter(|&&v| v <= tau_q).count();
        let pick = rng.index_below(admissible);
        let slot = self
            .magnitudes
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= tau_q)
            .nth(pick)
            .map(|(slot, _)| slot)
            .expect("admissible set holds the quantile element");
        let (k, r) = (self.batch[slot], self.residuals[slot]);
        for (xi, &a) in x.iter_mut().zip(system.row(k)) {
            *xi -= r * a;
        }
        Ok(StepOutcome { tau_q })
    }
}
