//! Whitelist quantile randomized Kaczmarz.
//!
//! QRK restricted to a whitelist of rows. Within each batch a second, higher
//! quantile `τ_thr` marks rows with suspiciously large residuals; every
//! `S` iterations after the warm-up, blocked rows whose current residual fits
//! under `τ_q` are returned, rows with a near-unanimous block-vote record are
//! blocked, and `q` is re-estimated from the remaining corruption budget:
//!
//! ```text
//! q ← 1 − α − (β·m − |BL|) / |WL|,   clamped to [q_min, 1 − α]
//! ```
//!
//! The return test reuses the `τ_q` of the batch drawn in the same iteration.
//! Discarding only happens while `|BL| < β·m`; counters are reset exactly when
//! a discard pass runs, and never otherwise. Counters also accumulate during
//! the warm-up, which only postpones their first use.

use super::trace::Recorder;
use super::{check_start, Oracle, QuantileStepper, RunTrace, SolverError, WhitelistState};
use crate::linalg::{Estimate, LinearSystem};
use crate::sampling::RngStream;
use crate::scalar::Scalar;

/// All tunables of WL-QRK.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Upper bound `β` on the corrupted fraction.
    pub beta_bound: f64,
    /// Confidence gap `α`.
    pub alpha: f64,
    /// Batch size.
    pub t: usize,
    /// Warm-up iterations `N₁`.
    pub n1: usize,
    /// Post-warm-up iterations `N₂`.
    pub n2: usize,
    /// Blocking cycle length `S`.
    pub s_cycle: usize,
    /// Block-threshold quantile; `None` means `(q₀ + 1) / 2`.
    pub thr: Option<f64>,
    pub block_vote_ratio: f64,
    pub q_min: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(
        beta_bound: f64,
        alpha: f64,
        t: usize,
        n1: usize,
        n2: usize,
        s_cycle: usize,
        seed: u64,
    ) -> Self {
        Self {
            beta_bound,
            alpha,
            t,
            n1,
            n2,
            s_cycle,
            thr: None,
            block_vote_ratio: 0.9,
            q_min: 0.05,
            seed,
        }
    }

    /// Initial quantile `q₀ = 1 − α − β`.
    pub fn q0(&self) -> f64 {
        1.0 - self.alpha - self.beta_bound
    }

    /// Block-threshold quantile in effect.
    pub fn thr(&self) -> f64 {
        self.thr.unwrap_or((self.q0() + 1.0) / 2.0)
    }

    pub fn iterations(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |msg: String| Err(SolverError::Config(msg));
        if !(self.alpha > 0.0) {
            return fail(format!("alpha = {} must be > 0", self.alpha));
        }
        if !(self.beta_bound >= 0.0) {
            return fail(format!("beta_bound = {} must be >= 0", self.beta_bound));
        }
        if !(self.alpha + self.beta_bound < 1.0) {
            return fail(format!(
                "alpha + beta_bound = {} must be < 1",
                self.alpha + self.beta_bound
            ));
        }
        if self.t == 0 {
            return fail("batch size t must be >= 1".into());
        }
        if self.s_cycle == 0 {
            return fail("blocking cycle s_cycle must be >= 1".into());
        }
        let thr = self.thr();
        if !(thr > 0.0 && thr <= 1.0) {
            return fail(format!("thr = {thr} outside (0, 1]"));
        }
        if !(thr > self.q0()) {
            return fail(format!("thr = {thr} must exceed q0 = {}", self.q0()));
        }
        if !(self.block_vote_ratio > 0.0 && self.block_vote_ratio <= 1.0) {
            return fail(format!(
                "block_vote_ratio = {} outside (0, 1]",
                self.block_vote_ratio
            ));
        }
        if !(self.q_min > 0.0 && self.q_min <= self.q0()) {
            return fail(format!(
                "q_min = {} must lie in (0, q0 = {}]",
                self.q_min,
                self.q0()
            ));
        }
        Ok(())
    }

    /// `1 − α − (β·m − |BL|)/|WL|`, clamped to `[q_min, 1 − α]`.
    pub fn updated_q(&self, m: usize, wl_len: usize, bl_len: usize) -> f64 {
        let raw = 1.0 - self.alpha - (self.beta_bound * m as f64 - bl_len as f64) / wl_len as f64;
        raw.clamp(self.q_min, 1.0 - self.alpha)
    }
}

pub fn wlqrk_solve<T: Scalar>(
    system: &LinearSystem<T>,
    config: &SolverConfig,
    x0: &Estimate<T>,
    oracle: Option<&Oracle<'_, T>>,
) -> Result<RunTrace<T>, SolverError> {
    wlqrk_solve_observed(system, config, x0, oracle, |_, _| {})
}

/// [`wlqrk_solve`], calling `observer(j, x_j)` after every iteration including 0.
pub fn wlqrk_solve_observed<T: Scalar>(
    system: &LinearSystem<T>,
    config: &SolverConfig,
    x0: &Estimate<T>,
    oracle: Option<&Oracle<'_, T>>,
    mut observer: impl FnMut(usize, &[T]),
) -> Result<RunTrace<T>, SolverError> {
    config.validate()?;
    check_start(system, x0)?;
    let m = system.m();
    let thr = config.thr();
    let blocked_budget = config.beta_bound * m as f64;
    let mut lists = WhitelistState::new(m, config.q0());
    let recorder = Recorder::new(oracle, system.n(), &mut lists)?;
    let mut rng = RngStream::new(config.seed);
    let mut stepper = QuantileStepper::new(config.t);
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(config.iterations() + 1);
    records.push(recorder.record(0, &x, &lists));
    observer(0, &x);

    for j in 1..=config.iterations() {
        let q = lists.q_current();
        let outcome = stepper.step(
            system,
            x.as_mut_slice(),
            &mut rng,
            lists.whitelist(),
            config.t,
            q,
            j,
        )?;
        let tau_thr = stepper.quantile(thr)?;
        lists.record_batch(&stepper.batch, &stepper.magnitudes, tau_thr);

        if j > config.n1 && j % config.s_cycle == 0 {
            let returned: Vec<usize> = lists
                .blocklist()
                .iter()
                .copied()
                .filter(|&i| system.residual_unchecked(&x, i).abs() <= outcome.tau_q)
                .collect();
            lists.move_to_whitelist(&returned)?;

            if (lists.blocklist().len() as f64) < blocked_budget {
                let min_samples =
                    (config.s_cycle * config.t) as f64 / lists.whitelist().len() as f64;
                let mut discard: Vec<usize> = lists
                    .whitelist()
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let s = lists.sample_count(i) as f64;
                        s >= min_samples
                            && lists.block_votes(i) as f64 >= config.block_vote_ratio * s
                    })
                    .collect();
                // sampling needs a non-empty whitelist
                if discard.len() == lists.whitelist().len() {
                    discard.clear();
                }
                lists.reset_counters();
                lists.move_to_blocklist(&discard)?;
            } else {
                lists.check_invariants()?;
            }
            let q_next = config.updated_q(m, lists.whitelist().len(), lists.blocklist().len());
            lists.set_q(q_next);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{apply_corruption, gen_gaussian_system, CorruptionModel, CorruptionSpec};
    use crate::solvers::{qrk_solve, QrkConfig};

    #[test]
    fn q_update_arithmetic() {
        let cfg = SolverConfig::new(0.4, 0.05, 10, 0, 0, 1, 0);
        let q = cfg.updated_q(100, 90, 10);
        assert!((q - (1.0 - 0.05 - 30.0 / 90.0)).abs() < 1e-15);
        assert!((q - 0.616_666_666_666_666_7).abs() < 1e-12);
    }

    #[test]
    fn q_update_is_clamped() {
        let cfg = SolverConfig::new(0.1, 0.05, 10, 0, 0, 1, 0);
        // more rows blocked than the budget: raw q exceeds 1 - alpha
        assert_eq!(cfg.updated_q(100, 70, 30), 0.95);
        let cfg = SolverConfig::new(0.9, 0.05, 10, 0, 0, 1, 0);
        assert_eq!(cfg.updated_q(100, 100, 0), 0.05);
    }

    #[test]
    fn default_threshold_exceeds_q0() {
        let cfg = SolverConfig::new(0.2, 0.05, 10, 0, 0, 1, 0);
        assert!((cfg.thr() - 0.875).abs() < 1e-15);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let base = SolverConfig::new(0.2, 0.05, 10, 5, 5, 5, 0);
        let cases = [
            SolverConfig { alpha: 0.0, ..base },
            SolverConfig {
                beta_bound: -0.1,
                ..base
            },
            SolverConfig {
                beta_bound: 0.96,
                ..base
            },
            SolverConfig { t: 0, ..base },
            SolverConfig { s_cycle: 0, ..base },
            SolverConfig {
                thr: Some(0.7),
                ..base
            },
            SolverConfig {
                thr: Some(1.2),
                ..base
            },
            SolverConfig {
                block_vote_ratio: 0.0,
                ..base
            },
            SolverConfig { q_min: 0.9, ..base },
        ];
        for cfg in cases {
            assert!(
                matches!(cfg.validate(), Err(SolverError::Config(_))),
                "{cfg:?}"
            );
        }
    }

    fn corrupted(
        m: usize,
        n: usize,
        beta: f64,
        seed: u64,
    ) -> crate::problems::CorruptionOutcome<f64> {
        let p = gen_gaussian_system::<f64>(m, n, seed).unwrap();
        apply_corruption(
            &p,
            &CorruptionSpec {
                model: CorruptionModel::uniform(),
                beta,
                seed: seed + 1,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_beta_never_blocks_and_matches_qrk() {
        let out = corrupted(200, 5, 0.0, 3);
        let cfg = SolverConfig::new(0.0, 0.05, 50, 10, 290, 20, 17);
        let wl = wlqrk_solve(&out.system, &cfg, &Estimate::zeros(5), Some(&out.oracle())).unwrap();
        assert!(wl
            .records
            .iter()
            .all(|r| r.bl_size == 0 && r.wl_size == 200));
        assert!(wl.records.iter().all(|r| r.q_current == 0.95));
        let qrk = qrk_solve(
            &out.system,
            &QrkConfig {
                q: 0.95,
                t: 50,
                iterations: 300,
                seed: 17,
            },
            None,
            &Estimate::zeros(5),
            None,
        )
        .unwrap();
        assert_eq!(wl.estimate, qrk.estimate);
    }

    #[test]
    fn warm_up_matches_qrk_bit_for_bit() {
        let out = corrupted(300, 8, 0.2, 5);
        let cfg = SolverConfig::new(0.2, 0.05, 120, 40, 200, 10, 99);
        let mut wl_iterates = Vec::new();
        wlqrk_solve_observed(&out.system, &cfg, &Estimate::zeros(8), None, |j, x| {
            if j <= cfg.n1 {
                wl_iterates.push(x.to_vec());
            }
        })
        .unwrap();
        let mut qrk_iterates = Vec::new();
        crate::solvers::qrk_solve_observed(
            &out.system,
            &QrkConfig {
                q: cfg.q0(),
                t: 120,
                iterations: cfg.n1,
                seed: 99,
            },
            None,
            &Estimate::zeros(8),
            None,
            |_, x| qrk_iterates.push(x.to_vec()),
        )
        .unwrap();
        assert_eq!(wl_iterates, qrk_iterates);
    }

    #[test]
    fn screening_blocks_corrupted_rows() {
        let out = corrupted(600, 10, 0.2, 8);
        let cfg = SolverConfig::new(0.2, 0.05, 240, 100, 1900, 100, 4);
        let trace =
            wlqrk_solve(&out.system, &cfg, &Estimate::zeros(10), Some(&out.oracle())).unwrap();
        let last = trace.records.last().unwrap();
        assert!(last.bl_size > 0);
        assert!(last.wl_corruption_frac.unwrap() < 0.2);
        assert!(trace.partition_checks > 0);
        assert_eq!(trace.records.len(), 2001);
        for r in &trace.records {
            assert_eq!(r.wl_size + r.bl_size, 600);
            assert!(r.q_current >= cfg.q_min && r.q_current <= 1.0 - cfg.alpha);
        }
    }
}
