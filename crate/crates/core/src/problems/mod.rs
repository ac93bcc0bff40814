//! Benchmark systems and sparse label corruption.

mod csv_input;
mod tomography;

use thiserror::Error;

pub use csv_input::{load_csv_system, LoadedCsv};
pub use tomography::{gen_tomography_system, phantom, ray_pixel_lengths};

use crate::linalg::{normalize_rows, LinalgError, LinearSystem};
use crate::sampling::{RngStream, SamplingError};
use crate::scalar::Scalar;
use crate::solvers::Oracle;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("corruption fraction {0} outside [0, 1)")]
    InvalidBeta(f64),
    #[error("layers need {requested} corrupted rows but floor(beta*m) = {allowed}")]
    LayerCountMismatch { requested: usize, allowed: usize },
    #[error("clean system is inconsistent (max |A x* - b| = {0:e})")]
    InconsistentClean(f64),
    #[error("line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("line {line}, column {column}: non-numeric field {value:?}")]
    NonNumericField {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("empty input file")]
    EmptyFile,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// A consistent system together with its exact solution.
#[derive(Debug, Clone)]
pub struct CleanProblem<T> {
    pub system: LinearSystem<T>,
    pub truth: Vec<T>,
}

/// `⌊β·m⌋`, snapping products that land within rounding of an integer.
pub fn corruption_budget(beta: f64, m: usize) -> usize {
    let p = beta * m as f64;
    let r = p.round();
    if (p - r).abs() <= 1e-9 * p.max(1.0) {
        r as usize
    } else {
        p.floor() as usize
    }
}

/// Gaussian benchmark: i.i.d. standard normal `A` (rows then normalized) and
/// `x⋆`, with consistent labels `b = A·x⋆`.
///
/// The matrix is drawn first, row by row, then `x⋆`, from one stream seeded
/// with `seed`.
pub fn gen_gaussian_system<T: Scalar>(
    m: usize,
    n: usize,
    seed: u64,
) -> Result<CleanProblem<T>, ProblemError> {
    if n == 0 || m < n {
        return Err(ProblemError::InvalidDims(format!(
            "m={m}, n={n}: need m >= n >= 1"
        )));
    }
    let mut rng = RngStream::new(seed);
    let raw: Vec<T> = (0..m * n).map(|_| T::lit(rng.standard_normal())).collect();
    let truth: Vec<T> = (0..n).map(|_| T::lit(rng.standard_normal())).collect();
    let shape = normalize_rows(&raw, n, &vec![T::zero(); m])?;
    let labels = shape.apply(&truth);
    Ok(CleanProblem {
        system: shape.with_labels(labels)?,
        truth,
    })
}

/// Block of corrupted rows receiving `u ~ Unif(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub lo: f64,
    pub hi: f64,
}

/// How perturbation magnitudes are drawn for the corrupted rows.
#[derive(Debug, Clone, PartialEq)]
pub enum CorruptionModel {
    /// `Unif(1, 5)` on `large_rows`, `Unif(0.01, 0.05)` on `small_rows`.
    TwoLayer {
        large_rows: usize,
        small_rows: usize,
    },
    /// `Unif(10^(x-1), 10^x)` on `rows_per_layer` rows for each `x ∈ {-2, …, 2}`.
    FiveLayer { rows_per_layer: usize },
    /// `Unif(lo, hi)` on all `⌊β·m⌋` corrupted rows.
    Uniform { lo: f64, hi: f64 },
    /// `Unif(1, 2)` on `low_rows`, `Unif(40, 100)` on `high_rows`.
    TwoLayerTomo { low_rows: usize, high_rows: usize },
}

impl CorruptionModel {
    /// Two equal layers filling the budget (1000 + 1000 at `m = 5000, β = 0.4`).
    pub fn two_layer(m: usize, beta: f64) -> Self {
        let budget = corruption_budget(beta, m);
        Self::TwoLayer {
            large_rows: budget - budget / 2,
            small_rows: budget / 2,
        }
    }

    /// Five equal decade layers (400 each at `m = 5000, β = 0.4`).
    pub fn five_layer(m: usize, beta: f64) -> Self {
        Self::FiveLayer {
            rows_per_layer: corruption_budget(beta, m) / 5,
        }
    }

    /// `Unif(-5, 5)`.
    pub fn uniform() -> Self {
        Self::Uniform { lo: -5.0, hi: 5.0 }
    }

    /// 100 rows of `Unif(1, 2)` and 120 rows of `Unif(40, 100)`.
    pub fn two_layer_tomo() -> Self {
        Self::TwoLayerTomo {
            low_rows: 100,
            high_rows: 120,
        }
    }

    /// Concrete layers for a budget of `⌊β·m⌋` rows.
    pub fn layers(&self, budget: usize) -> Result<Vec<Layer>, ProblemError> {
        let layers = match *self {
            Self::TwoLayer {
                large_rows,
                small_rows,
            } => vec![
                Layer {
                    rows: large_rows,
                    lo: 1.0,
                    hi: 5.0,
                },
                Layer {
                    rows: small_rows,
                    lo: 0.01,
                    hi: 0.05,
                },
            ],
            Self::FiveLayer { rows_per_layer } => (-2..=2)
                .map(|x| Layer {
                    rows: rows_per_layer,
                    lo: 10f64.powi(x - 1),
                    hi: 10f64.powi(x),
                })
                .collect(),
            Self::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return Err(SamplingError::InvalidRange { lo, hi }.into());
                }
                vec![Layer {
                    rows: budget,
                    lo,
                    hi,
                }]
            }
            Self::TwoLayerTomo {
                low_rows,
                high_rows,
            } => vec![
                Layer {
                    rows: low_rows,
                    lo: 1.0,
                    hi: 2.0,
                },
                Layer {
                    rows: high_rows,
                    lo: 40.0,
                    hi: 100.0,
                },
            ],
        };
        let requested: usize = layers.iter().map(|l| l.rows).sum();
        if requested > budget {
            return Err(ProblemError::LayerCountMismatch {
                requested,
                allowed: budget,
            });
        }
        Ok(layers)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    pub model: CorruptionModel,
    /// Corruption fraction `β ∈ [0, 1)`.
    pub beta: f64,
    pub seed: u64,
}

/// A corrupted benchmark problem with its ground truth.
#[derive(Debug, Clone)]
pub struct CorruptionOutcome<T> {
    /// Matrix with the corrupted labels `b̃`.
    pub system: LinearSystem<T>,
    /// Clean labels `b = A·x⋆`.
    pub clean_labels: Vec<T>,
    pub truth: Vec<T>,
    /// Sorted indices of the corrupted rows.
    pub support: Vec<usize>,
}

impl<T: Scalar> CorruptionOutcome<T> {
    /// `ε = b̃ − b`.
    pub fn corruption(&self) -> Vec<T> {
        self.system
            .labels()
            .iter()
            .zip(&self.clean_labels)
            .map(|(&a, &b)| a - b)
            .collect()
    }

    pub fn oracle(&self) -> Oracle<'_, T> {
        Oracle::with_support(&self.truth, &self.support)
    }
}

fn max_inconsistency<T: Scalar>(clean: &CleanProblem<T>) -> f64 {
    clean
        .system
        .apply(&clean.truth)
        .iter()
        .zip(clean.system.labels())
        .map(|(&a, &b)| (a - b).abs().as_f64())
        .fold(0.0, f64::max)
}

/// Adds sparse perturbations to a consistent problem.
///
/// Corrupted rows are drawn uniformly without replacement; the first drawn
/// rows fill the first layer, and so on. A draw that would leave a label
/// unchanged (a zero perturbation, or one lost to rounding) is redrawn.
pub fn apply_corruption<T: Scalar>(
    clean: &CleanProblem<T>,
    spec: &CorruptionSpec,
) -> Result<CorruptionOutcome<T>, ProblemError> {
    if !(0.0..1.0).contains(&spec.beta) {
        return Err(ProblemError::InvalidBeta(spec.beta));
    }
    let m = clean.system.m();
    let budget = corruption_budget(spec.beta, m);
    let layers = spec.model.layers(budget)?;
    let gap = max_inconsistency(clean);
    let scale = clean
        .system
        .labels()
        .iter()
        .fold(1.0f64, |acc, v| acc.max(v.abs().as_f64()));
    if gap > (T::epsilon().as_f64() * 1e4).max(1e-10) * scale {
        return Err(ProblemError::InconsistentClean(gap));
    }

    let total: usize = layers.iter().map(|l| l.rows).sum();
    let mut rng = RngStream::new(spec.seed);
    let chosen = rng.sample_distinct(m, total)?;
    let clean_labels = clean.system.labels().to_vec();
    let mut labels = clean_labels.clone();
    let mut cursor = chosen.iter();
    for layer in &layers {
        for &i in cursor.by_ref().take(layer.rows) {
            loop {
                let u = T::lit(rng.sample_real_uniform(layer.lo, layer.hi)?);
                let perturbed = clean_labels[i] + u;
                if perturbed != clean_labels[i] {
                    labels[i] = perturbed;
                    break;
                }
            }
        }
    }
    let mut support = chosen;
    support.sort_unstable();
    Ok(CorruptionOutcome {
        system: clean.system.with_labels(labels)?,
        clean_labels,
        truth: clean.truth.clone(),
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm;

    fn spec(model: CorruptionModel, beta: f64) -> CorruptionSpec {
        CorruptionSpec {
            model,
            beta,
            seed: 11,
        }
    }

    #[test]
    fn gaussian_rows_unit_and_consistent() {
        let p = gen_gaussian_system::<f64>(60, 7, 5).unwrap();
        for i in 0..60 {
            assert!((norm(p.system.row(i)) - 1.0).abs() < 1e-12);
        }
        assert!(max_inconsistency(&p) <= 1e-10);
        let q = gen_gaussian_system::<f64>(60, 7, 5).unwrap();
        assert_eq!(p.system, q.system);
        assert_eq!(p.truth, q.truth);
    }

    #[test]
    fn gaussian_rejects_wide() {
        assert!(matches!(
            gen_gaussian_system::<f64>(10, 100, 1),
            Err(ProblemError::InvalidDims(_))
        ));
    }

    #[test]
    fn budget_rounds_down() {
        assert_eq!(corruption_budget(0.35, 10), 3);
        assert_eq!(corruption_budget(0.4, 5000), 2000);
        assert_eq!(corruption_budget(0.0, 10), 0);
        assert_eq!(corruption_budget(0.07, 100), 7);
    }

    #[test]
    fn zero_beta_leaves_labels() {
        let p = gen_gaussian_system::<f64>(30, 3, 1).unwrap();
        let out = apply_corruption(&p, &spec(CorruptionModel::uniform(), 0.0)).unwrap();
        assert!(out.support.is_empty());
        assert_eq!(out.system.labels(), p.system.labels());
    }

    #[test]
    fn floor_rounding_small_system() {
        let p = gen_gaussian_system::<f64>(10, 2, 1).unwrap();
        let out = apply_corruption(&p, &spec(CorruptionModel::uniform(), 0.35)).unwrap();
        assert_eq!(out.support.len(), 3);
    }

    #[test]
    fn five_layer_counts_and_ranges() {
        let p = gen_gaussian_system::<f64>(5000, 5, 3).unwrap();
        let out = apply_corruption(&p, &spec(CorruptionModel::five_layer(5000, 0.4), 0.4)).unwrap();
        assert_eq!(out.support.len(), 2000);
        let eps = out.corruption();
        for x in -2..=2 {
            let (lo, hi) = (10f64.powi(x - 1), 10f64.powi(x));
            let count = out
                .support
                .iter()
                .filter(|&&i| eps[i] >= lo * (1.0 - 1e-9) && eps[i] < hi * (1.0 + 1e-9))
                .count();
            assert!(count >= 400, "layer {x}: {count}");
        }
    }

    #[test]
    fn two_layer_split_matches_paper_counts() {
        assert_eq!(
            CorruptionModel::two_layer(5000, 0.4),
            CorruptionModel::TwoLayer {
                large_rows: 1000,
                small_rows: 1000
            }
        );
    }

    #[test]
    fn support_exactly_where_labels_differ() {
        let p = gen_gaussian_system::<f64>(400, 10, 9).unwrap();
        for model in [
            CorruptionModel::uniform(),
            CorruptionModel::two_layer(400, 0.3),
            CorruptionModel::five_layer(400, 0.3),
        ] {
            let out = apply_corruption(&p, &spec(model, 0.3)).unwrap();
            let mut flagged = vec![false; 400];
            for &i in &out.support {
                flagged[i] = true;
            }
            for (i, &f) in flagged.iter().enumerate() {
                let differs = out.system.labels()[i] != out.clean_labels[i];
                assert_eq!(differs, f, "row {i}");
            }
            assert!(out.support.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn oversized_layers_rejected() {
        let p = gen_gaussian_system::<f64>(500, 5, 1).unwrap();
        let err = apply_corruption(&p, &spec(CorruptionModel::two_layer_tomo(), 0.3)).unwrap_err();
        assert!(matches!(
            err,
            ProblemError::LayerCountMismatch {
                requested: 220,
                allowed: 150
            }
        ));
    }

    #[test]
    fn inconsistent_clean_rejected() {
        let mut p = gen_gaussian_system::<f64>(20, 2, 1).unwrap();
        let mut labels = p.system.labels().to_vec();
        labels[0] += 1.0;
        p.system = p.system.with_labels(labels).unwrap();
        assert!(matches!(
            apply_corruption(&p, &spec(CorruptionModel::uniform(), 0.1)),
            Err(ProblemError::InconsistentClean(_))
        ));
    }
}
