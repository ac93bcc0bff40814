//! Closed-form rate calculators for quantile Kaczmarz and an empirical check
//! that large residuals single out corrupted rows.
//!
//! The expected squared error of full-residual QRK with `q = 1 − β − α`
//! contracts per iteration by
//!
//! ```text
//! ρ(β) = 1 − C_D (1 − 3β − α)³ / (n (1 − 2β − α))
//! ```
//!
//! provided the system is tall enough,
//! `m/n > C₁/(1 − 3β − α) · log(D·K/(1 − 3β − α))`, and the corruption is
//! small enough,
//! `4C_K²√β/α + 2C_K²β/α² < C_D (1 − 3β − α)⁴/(1 − 2β − α)`.
//! None of the constants are quantified in closed form; they are user inputs
//! defaulting to one, which makes [`check_theorem_conditions`] a calculator
//! rather than a certificate.
//!
//! Screening: if `‖x − x⋆‖ < ε₍s₎/2`, where `ε₍s₎` is the `s`-th largest
//! corruption magnitude, then the `s` largest residuals all belong to
//! corrupted rows. Clean rows have `|r_i| ≤ ‖x − x⋆‖` and the `s` rows with
//! `|ε_i| ≥ ε₍s₎` have `|r_i| ≥ |ε_i| − ‖x − x⋆‖ > ε₍s₎/2`.

use std::cmp::Ordering;

use thiserror::Error;

use crate::linalg::LinearSystem;
use crate::problems::CorruptionOutcome;
use crate::scalar::{distance, Scalar};
use crate::solvers::Oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("outside the valid regime: 1 - 3*beta - alpha = {gap} <= 0 (beta = {beta}, alpha = {alpha})")]
    RegimeViolation { beta: f64, alpha: f64, gap: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("order statistic {s} out of range 1..={len}")]
    IndexOutOfRange { s: usize, len: usize },
    #[error("detector needs the ground truth and the corrupted support")]
    OracleMissing,
}

/// Constants and problem parameters of the rate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams<T> {
    pub c_d: T,
    pub c_1: T,
    pub c_k: T,
    pub d_bound: T,
    pub k_subg: T,
    pub n: usize,
    pub m: usize,
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> TheoryParams<T> {
    /// All constants set to one.
    pub fn new(n: usize, m: usize, alpha: T, beta: T) -> Self {
        Self {
            c_d: T::one(),
            c_1: T::one(),
            c_k: T::one(),
            d_bound: T::one(),
            k_subg: T::one(),
            n,
            m,
            alpha,
            beta,
        }
    }

    pub fn with_beta(self, beta: T) -> Self {
        Self { beta, ..self }
    }

    /// `1 − 3β − α`, or an error when it is not positive.
    fn gap(&self) -> Result<T, TheoryError> {
        let constants = [self.c_d, self.c_1, self.c_k, self.d_bound, self.k_subg];
        if constants.iter().any(|c| !(*c > T::zero())) {
            return Err(TheoryError::InvalidParams(
                "constants must be positive".into(),
            ));
        }
        if self.n == 0 {
            return Err(TheoryError::InvalidParams("n must be >= 1".into()));
        }
        if !(self.alpha > T::zero()) || !(self.beta >= T::zero()) {
            return Err(TheoryError::InvalidParams(format!(
                "need alpha > 0 and beta >= 0, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        let three = T::lit(3.0);
        let gap = T::one() - three * self.beta - self.alpha;
        if gap > T::zero() {
            Ok(gap)
        } else {
            Err(TheoryError::RegimeViolation {
                beta: self.beta.as_f64(),
                alpha: self.alpha.as_f64(),
                gap: gap.as_f64(),
            })
        }
    }
}

/// Per-iteration contraction factor `1 − C_D (1−3β−α)³ / (n (1−2β−α))`.
pub fn convergence_factor<T: Scalar>(params: &TheoryParams<T>) -> Result<T, TheoryError> {
    let gap3 = params.gap()?;
    let gap2 = T::one() - T::lit(2.0) * params.beta - params.alpha;
    let n = T::lit(params.n as f64);
    Ok(T::one() - params.c_d * gap3.powi(3) / (n * gap2))
}

/// One inequality with both sides evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

impl<T: Scalar> ConditionCheck<T> {
    fn less(lhs: T, rhs: T) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremVerdict<T> {
    /// `C₁/(1−3β−α)·log(DK/(1−3β−α)) < m/n`, reported as `lhs = m/n`.
    pub tall_enough: ConditionCheck<T>,
    /// `4C_K²√β/α + 2C_K²β/α² < C_D(1−3β−α)⁴/(1−2β−α)`.
    pub corruption_small: ConditionCheck<T>,
}

impl<T: Scalar> TheoremVerdict<T> {
    pub const DISCLAIMER: &'static str =
        "constants are user-supplied; this evaluates the inequalities, it does not certify them";

    pub fn all_hold(&self) -> bool {
        self.tall_enough.holds && self.corruption_small.holds
    }
}

/// Evaluates both side conditions of the rate bound.
pub fn check_theorem_conditions<T: Scalar>(
    params: &TheoryParams<T>,
) -> Result<TheoremVerdict<T>, TheoryError> {
    let gap3 = params.gap()?;
    let gap2 = T::one() - T::lit(2.0) * params.beta - params.alpha;
    let aspect = T::lit(params.m as f64) / T::lit(params.n as f64);
    let tall_rhs = params.c_1 / gap3 * (params.d_bound * params.k_subg / gap3).ln();
    let ck2 = params.c_k * params.c_k;
    let small_lhs = T::lit(4.0) * ck2 * params.beta.sqrt() / params.alpha
        + T::lit(2.0) * ck2 * params.beta / (params.alpha * params.alpha);
    let small_rhs = params.c_d * gap3.powi(4) / gap2;
    Ok(TheoremVerdict {
        tall_enough: ConditionCheck {
            lhs: aspect,
            rhs: tall_rhs,
            holds: aspect > tall_rhs,
        },
        corruption_small: ConditionCheck::less(small_lhs, small_rhs),
    })
}

/// `(β, ρ(β))` for every `β` in `betas`, in the given order.
pub fn rate_curve<T: Scalar>(
    params: &TheoryParams<T>,
    betas: &[T],
) -> Result<Vec<(T, T)>, TheoryError> {
    betas
        .iter()
        .map(|&beta| Ok((beta, convergence_factor(&params.with_beta(beta))?)))
        .collect()
}

fn descending<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

/// `ε₍s₎`: the `s`-th largest corruption magnitude over the support.
pub fn epsilon_order_statistic<T: Scalar>(
    corruption: &CorruptionOutcome<T>,
    s: usize,
) -> Result<T, TheoryError> {
    let eps = corruption.corruption();
    let mut magnitudes: Vec<T> = corruption.support.iter().map(|&i| eps[i].abs()).collect();
    if s == 0 || s > magnitudes.len() {
        return Err(TheoryError::IndexOutOfRange {
            s,
            len: magnitudes.len(),
        });
    }
    let (_, kth, _) = magnitudes.select_nth_unstable_by(s - 1, descending);
    Ok(*kth)
}

/// Indices of the `s` largest `|r_i(x)|` (ties broken arbitrarily).
pub fn top_residual_rows<T: Scalar>(system: &LinearSystem<T>, x: &[T], s: usize) -> Vec<usize> {
    let mut ranked: Vec<(T, usize)> = (0..system.m())
        .map(|i| (system.residual_unchecked(x, i).abs(), i))
        .collect();
    let s = s.min(ranked.len());
    if s == 0 {
        return Vec::new();
    }
    ranked.select_nth_unstable_by(s - 1, |a, b| descending(&a.0, &b.0));
    ranked.truncate(s);
    ranked.into_iter().map(|(_, i)| i).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    /// `‖x_j − x⋆‖`.
    pub error_norm: f64,
    /// All top-`s` residual rows are corrupted.
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorReport {
    pub s: usize,
    pub epsilon_s: f64,
    pub eta: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub hit_iterations: Vec<usize>,
    /// Earliest checkpoint from which every later checkpoint is a hit.
    pub first_stable_iteration: Option<usize>,
    /// Earliest checkpoint with `‖e_j‖ < ε₍s₎/2`.
    pub first_claim_iteration: Option<usize>,
}

impl DetectorReport {
    /// Checkpoints from the first one with `‖e_j‖ < ε₍s₎/2` onwards.
    pub fn after_claim(&self) -> &[Checkpoint] {
        match self.first_claim_iteration {
            Some(j) => {
                let start = self.checkpoints.partition_point(|c| c.iteration < j);
                &self.checkpoints[start..]
            }
            None => &[],
        }
    }

    /// Hit rate over [`Self::after_claim`], `None` if that window is empty.
    pub fn hit_rate_after_claim(&self) -> Option<f64> {
        let window = self.after_claim();
        (!window.is_empty())
            .then(|| window.iter().filter(|c| c.hit).count() as f64 / window.len() as f64)
    }

    /// `1 − hit rate ≤ η` over the post-claim window.
    pub fn meets_eta(&self) -> Option<bool> {
        self.hit_rate_after_claim()
            .map(|r| 1.0 - r <= self.eta + 1e-12)
    }
}

/// Watches a solver's iterates and checks, every `stride` iterations, whether
/// the `s` largest residuals all sit on corrupted rows.
pub struct Detector<'a, T> {
    system: &'a LinearSystem<T>,
    truth: &'a [T],
    corrupted: Vec<bool>,
    s: usize,
    stride: usize,
    epsilon_s: T,
    eta: f64,
    checkpoints: Vec<Checkpoint>,
}

impl<'a, T: Scalar> Detector<'a, T> {
    /// `ε₍s₎` is derived from the oracle as `b̃_i − ⟨a_i, x⋆⟩` on the support.
    pub fn new(
        system: &'a LinearSystem<T>,
        oracle: Option<&Oracle<'a, T>>,
        s: usize,
        stride: usize,
        eta: f64,
    ) -> Result<Self, TheoryError> {
        let oracle = oracle.ok_or(TheoryError::OracleMissing)?;
        let support = oracle.support.ok_or(TheoryError::OracleMissing)?;
        if oracle.truth.len() != system.n() {
            return Err(TheoryError::InvalidParams(
                "truth length differs from n".into(),
            ));
        }
        if stride == 0 {
            return Err(TheoryError::InvalidParams("stride must be >= 1".into()));
        }
        let mut corrupted = vec![false; system.m()];
        let mut magnitudes = Vec::with_capacity(support.len());
        for &i in support {
            if i >= system.m() {
                return Err(TheoryError::InvalidParams(format!(
                    "support index {i} >= m"
                )));
            }
            corrupted[i] = true;
            magnitudes.push(system.residual_unchecked(oracle.truth, i).abs());
        }
        if s == 0 || s > magnitudes.len() {
            return Err(TheoryError::IndexOutOfRange {
                s,
                len: magnitudes.len(),
            });
        }
        let (_, kth, _) = magnitudes.select_nth_unstable_by(s - 1, descending);
        Ok(Self {
            system,
            truth: oracle.truth,
            corrupted,
            s,
            stride,
            epsilon_s: *kth,
            eta,
            checkpoints: Vec::new(),
        })
    }

    pub fn epsilon_s(&self) -> T {
        self.epsilon_s
    }

    /// Records a checkpoint when `iteration` is a multiple of the stride.
    pub fn observe(&mut self, iteration: usize, x: &[T]) {
        if !iteration.is_multiple_of(self.stride) {
            return;
        }
        let hit = top_residual_rows(self.system, x, self.s)
            .iter()
            .all(|&i| self.corrupted[i]);
        self.checkpoints.push(Checkpoint {
            iteration,
            error_norm: distance(x, self.truth).as_f64(),
            hit,
        });
    }

    pub fn report(self) -> DetectorReport {
        let half = self.epsilon_s.as_f64() / 2.0;
        let hit_iterations = self
            .checkpoints
            .iter()
            .filter(|c| c.hit)
            .map(|c| c.iteration)
            .collect();
        let stable_from = self
            .checkpoints
            .iter()
            .rposition(|c| !c.hit)
            .map_or(0, |p| p + 1);
        DetectorReport {
            s: self.s,
            epsilon_s: self.epsilon_s.as_f64(),
            eta: self.eta,
            first_stable_iteration: self.checkpoints.get(stable_from).map(|c| c.iteration),
            first_claim_iteration: self
                .checkpoints
                .iter()
                .find(|c| c.error_norm < half)
                .map(|c| c.iteration),
            hit_iterations,
            checkpoints: self.checkpoints,
        }
    }
}

/// Runs `run`, feeding every iterate it reports to a [`Detector`].
pub fn detector_report<'a, T: Scalar, E>(
    system: &'a LinearSystem<T>,
    oracle: Option<&Oracle<'a, T>>,
    s: usize,
    stride: usize,
    eta: f64,
    run: impl FnOnce(&mut dyn FnMut(usize, &[T])) -> Result<(), E>,
) -> Result<Result<DetectorReport, E>, TheoryError> {
    let mut detector = Detector::new(system, oracle, s, stride, eta)?;
    let outcome = run(&mut |j, x| detector.observe(j, x));
    Ok(outcome.map(|()| detector.report()))
}
