//! Experiment configuration.
//!
//! A config file is flat TOML: one typed key per line, no tables. Every key
//! has a matching `--kebab-case` flag, and flags override file values. Unset
//! keys fall back to the defaults listed on [`PartialConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qrk_core::problems::corruption_budget;
use qrk_core::{CorruptionModel, QrkConfig, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Gaussian,
    Tomography,
    /// Numeric CSV, last column is the label.
    Csv,
    /// A directory written by `qrk gen`.
    Dir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    None,
    Uniform,
    TwoLayer,
    FiveLayer,
    TwoLayerTomo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Rk,
    Qrk,
    Wlqrk,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rk => "rk",
            Self::Qrk => "qrk",
            Self::Wlqrk => "wlqrk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Zero,
    /// Least-squares solution of the corrupted system.
    LeastSquares,
}

/// Every key optional; one instance per source (file, flags).
///
/// | key | default |
/// |---|---|
/// | `problem` | `gaussian` |
/// | `m`, `n` | 2000, 50 |
/// | `grid`, `rays` | 20, 1250 |
/// | `path`, `header`, `make_consistent` | -, false, true |
/// | `problem_seed` | 1 |
/// | `corruption` | `uniform` |
/// | `beta` | 0.2 |
/// | `corruption_seed` | 2 |
/// | `corruption_lo`, `corruption_hi` | -5, 5 |
/// | `layer_rows` | model default |
/// | `vary_problem` | true |
/// | `solvers` | `["rk", "qrk", "wlqrk"]` |
/// | `alpha` | 0.05 |
/// | `beta_bound` | `beta` |
/// | `q` | `1 - beta_bound - alpha` |
/// | `t` / `t_fraction` | `m` |
/// | `n1`, `n2`, `s_cycle` | 100, 2900, 100 |
/// | `thr` | `(q0 + 1) / 2` |
/// | `block_vote_ratio`, `q_min` | 0.9, 0.05 |
/// | `x0` | `zero` |
/// | `trials`, `base_seed` | 10, 0 |
/// | `parallel` | true |
/// | `output` | `qrk-out` |
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Tomography grid side N (n = N²).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub rays: Option<usize>,
    /// CSV file or problem directory.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub header: Option<bool>,
    #[arg(long)]
    pub make_consistent: Option<bool>,
    #[arg(long, alias = "seed")]
    pub problem_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub corruption: Option<CorruptionKind>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub corruption_seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub corruption_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub corruption_hi: Option<f64>,
    /// Rows per layer: two values for two-layer models, one for five-layer.
    #[arg(long, value_delimiter = ',')]
    pub layer_rows: Option<Vec<usize>>,
    /// Regenerate problem and corruption per trial from derived seeds.
    #[arg(long)]
    pub vary_problem: Option<bool>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub solvers: Option<Vec<SolverKind>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta_bound: Option<f64>,
    /// Fixed quantile for `qrk`.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub t_fraction: Option<f64>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long)]
    pub s_cycle: Option<usize>,
    #[arg(long)]
    pub thr: Option<f64>,
    #[arg(long)]
    pub block_vote_ratio: Option<f64>,
    #[arg(long)]
    pub q_min: Option<f64>,
    #[arg(long, value_enum)]
    pub x0: Option<StartKind>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub parallel: Option<bool>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        PartialConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl PartialConfig {
    /// Field-wise: values in `top` win.
    pub fn overlay(self, top: PartialConfig) -> PartialConfig {
        let base = self;
        overlay!(base, top;
            problem, m, n, grid, rays, path, header, make_consistent, problem_seed,
            corruption, beta, corruption_seed, corruption_lo, corruption_hi, layer_rows,
            vary_problem, solvers, alpha, beta_bound, q, t, t_fraction, n1, n2, s_cycle,
            thr, block_vote_ratio, q_min, x0, trials, base_seed, parallel, output,
        )
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().replace('\n', " ");
            CliError::config("file", message)
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Reads `file` if given and applies `flags` on top.
    pub fn load(file: Option<&Path>, flags: PartialConfig) -> Result<Self, CliError> {
        let base = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        Ok(base.overlay(flags))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Gaussian {
        m: usize,
        n: usize,
        seed: u64,
    },
    Tomography {
        grid: usize,
        rays: usize,
        seed: u64,
    },
    Csv {
        path: PathBuf,
        header: bool,
        make_consistent: bool,
    },
    Dir {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSetup {
    pub kind: CorruptionKind,
    pub beta: f64,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    pub layer_rows: Option<Vec<usize>>,
}

impl CorruptionSetup {
    /// Concrete model for an `m`-row system.
    pub fn model(&self, m: usize) -> Option<CorruptionModel> {
        let rows = self.layer_rows.as_deref();
        Some(match self.kind {
            CorruptionKind::None => return None,
            CorruptionKind::Uniform => CorruptionModel::Uniform {
                lo: self.lo,
                hi: self.hi,
            },
            CorruptionKind::TwoLayer => match rows {
                Some(&[large_rows, small_rows]) => CorruptionModel::TwoLayer {
                    large_rows,
                    small_rows,
                },
                _ => CorruptionModel::two_layer(m, self.beta),
            },
            CorruptionKind::FiveLayer => match rows {
                Some(&[rows_per_layer]) => CorruptionModel::FiveLayer { rows_per_layer },
                _ => CorruptionModel::five_layer(m, self.beta),
            },
            CorruptionKind::TwoLayerTomo => match rows {
                Some(&[low_rows, high_rows]) => CorruptionModel::TwoLayerTomo {
                    low_rows,
                    high_rows,
                },
                _ => CorruptionModel::two_layer_tomo(),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchSize {
    Count(usize),
    Fraction(f64),
}

impl BatchSize {
    pub fn resolve(self, m: usize) -> usize {
        match self {
            Self::Count(t) => t,
            Self::Fraction(f) => ((f * m as f64).round() as usize).max(1),
        }
    }
}

/// Solver tunables before the system size is known.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub alpha: f64,
    pub beta_bound: f64,
    pub q: f64,
    pub t: BatchSize,
    pub n1: usize,
    pub n2: usize,
    pub s_cycle: usize,
    pub thr: Option<f64>,
    pub block_vote_ratio: f64,
    pub q_min: f64,
}

impl SolverSettings {
    pub fn iterations(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn qrk(&self, m: usize, seed: u64) -> QrkConfig {
        QrkConfig {
            q: self.q,
            t: self.t.resolve(m),
            iterations: self.iterations(),
            seed,
        }
    }

    pub fn wlqrk(&self, m: usize, seed: u64) -> SolverConfig {
        SolverConfig {
            thr: self.thr,
            block_vote_ratio: self.block_vote_ratio,
            q_min: self.q_min,
            ..SolverConfig::new(
                self.beta_bound,
                self.alpha,
                self.t.resolve(m),
                self.n1,
                self.n2,
                self.s_cycle,
                seed,
            )
        }
    }
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub corruption: CorruptionSetup,
    pub vary_problem: bool,
    pub solvers: Vec<SolverKind>,
    pub settings: SolverSettings,
    pub x0: StartKind,
    pub trials: usize,
    pub base_seed: u64,
    pub parallel: bool,
    pub output: PathBuf,
}

fn unit_open(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("{v} outside (0, 1]")))
    }
}

impl ExperimentConfig {
    pub fn resolve(p: PartialConfig) -> Result<Self, CliError> {
        let kind = p.problem.unwrap_or(ProblemKind::Gaussian);
        let seed = p.problem_seed.unwrap_or(1);
        let need_path = |p: &PartialConfig| -> Result<PathBuf, CliError> {
            let path = p
                .path
                .clone()
                .ok_or_else(|| CliError::config("path", "required for this problem kind"))?;
            if !path.exists() {
                return Err(CliError::config(
                    "path",
                    format!("{} does not exist", path.display()),
                ));
            }
            Ok(path)
        };
        let problem = match kind {
            ProblemKind::Gaussian => {
                let (m, n) = (p.m.unwrap_or(2000), p.n.unwrap_or(50));
                if n == 0 || m < n {
                    return Err(CliError::config(
                        "m",
                        format!("m={m}, n={n}: need m >= n >= 1"),
                    ));
                }
                ProblemSource::Gaussian { m, n, seed }
            }
            ProblemKind::Tomography => {
                let (grid, rays) = (p.grid.unwrap_or(20), p.rays.unwrap_or(1250));
                if grid < 2 {
                    return Err(CliError::config("grid", format!("{grid} < 2")));
                }
                if rays < grid * grid {
                    return Err(CliError::config(
                        "rays",
                        format!("{rays} < grid^2 = {}", grid * grid),
                    ));
                }
                ProblemSource::Tomography { grid, rays, seed }
            }
            ProblemKind::Csv => ProblemSource::Csv {
                path: need_path(&p)?,
                header: p.header.unwrap_or(false),
                make_consistent: p.make_consistent.unwrap_or(true),
            },
            ProblemKind::Dir => ProblemSource::Dir {
                path: need_path(&p)?,
            },
        };

        let beta = p.beta.unwrap_or(0.2);
        if !(0.0..1.0).contains(&beta) {
            return Err(CliError::config("beta", format!("{beta} outside [0, 1)")));
        }
        let default_kind = if kind == ProblemKind::Dir {
            CorruptionKind::None
        } else {
            CorruptionKind::Uniform
        };
        let corruption = CorruptionSetup {
            kind: p.corruption.unwrap_or(default_kind),
            beta,
            seed: p.corruption_seed.unwrap_or(2),
            lo: p.corruption_lo.unwrap_or(-5.0),
            hi: p.corruption_hi.unwrap_or(5.0),
            layer_rows: p.layer_rows.clone(),
        };
        if kind == ProblemKind::Dir && corruption.kind != CorruptionKind::None {
            return Err(CliError::config(
                "corruption",
                "a generated problem directory is already corrupted; use `none`",
            ));
        }
        if corruption.kind == CorruptionKind::Uniform
            && corruption.lo.partial_cmp(&corruption.hi) != Some(std::cmp::Ordering::Less)
        {
            return Err(CliError::config(
                "corruption_lo",
                format!(
                    "need corruption_lo < corruption_hi, got {} and {}",
                    corruption.lo, corruption.hi
                ),
            ));
        }
        if let Some(rows) = &corruption.layer_rows {
            let expected = match corruption.kind {
                CorruptionKind::TwoLayer | CorruptionKind::TwoLayerTomo => Some(2),
                CorruptionKind::FiveLayer => Some(1),
                _ => None,
            };
            match expected {
                Some(len) if rows.len() == len => {}
                Some(len) => {
                    return Err(CliError::config(
                        "layer_rows",
                        format!("expected {len} values, got {}", rows.len()),
                    ))
                }
                None => {
                    return Err(CliError::config(
                        "layer_rows",
                        "only used by layered corruption models",
                    ))
                }
            }
        }
        if let ProblemSource::Gaussian { m, .. } | ProblemSource::Tomography { rays: m, .. } =
            problem
        {
            if let Some(model) = corruption.model(m) {
                let budget = corruption_budget(beta, m);
                let layers = model
                    .layers(budget)
                    .map_err(|e| CliError::config("layer_rows", e.to_string()))?;
                let total: usize = layers.iter().map(|l| l.rows).sum();
                if total == 0 && beta > 0.0 {
                    log::warn!("corruption model selects no rows at beta={beta}, m={m}");
                }
            }
        }

        let solvers = p
            .solvers
            .clone()
            .unwrap_or_else(|| vec![SolverKind::Rk, SolverKind::Qrk, SolverKind::Wlqrk]);
        if solvers.is_empty() {
            return Err(CliError::config(
                "solvers",
                "select at least one of rk, qrk, wlqrk",
            ));
        }
        let mut seen = Vec::new();
        for s in &solvers {
            if seen.contains(s) {
                return Err(CliError::config(
                    "solvers",
                    format!("`{}` listed twice", s.name()),
                ));
            }
            seen.push(*s);
        }

        let alpha = p.alpha.unwrap_or(0.05);
        let beta_bound = p.beta_bound.unwrap_or(beta);
        let t = match (p.t, p.t_fraction) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "t",
                    "set either t or t_fraction, not both",
                ))
            }
            (Some(0), None) => return Err(CliError::config("t", "must be >= 1")),
            (Some(t), None) => BatchSize::Count(t),
            (None, Some(f)) => BatchSize::Fraction(unit_open("t_fraction", f)?),
            (None, None) => BatchSize::Fraction(1.0),
        };
        let settings = SolverSettings {
            alpha,
            beta_bound,
            q: p.q.unwrap_or(1.0 - beta_bound - alpha),
            t,
            n1: p.n1.unwrap_or(100),
            n2: p.n2.unwrap_or(2900),
            s_cycle: p.s_cycle.unwrap_or(100),
            thr: p.thr,
            block_vote_ratio: p.block_vote_ratio.unwrap_or(0.9),
            q_min: p.q_min.unwrap_or(0.05),
        };
        if solvers.contains(&SolverKind::Qrk) {
            unit_open("q", settings.q)?;
        }
        if solvers.contains(&SolverKind::Wlqrk) {
            settings
                .wlqrk(2, 0)
                .validate()
                .map_err(|e| CliError::config(wlqrk_field(&e.to_string()), e.to_string()))?;
        }

        let trials = p.trials.unwrap_or(10);
        if trials == 0 {
            return Err(CliError::config("trials", "must be >= 1"));
        }
        Ok(Self {
            problem,
            corruption,
            vary_problem: p.vary_problem.unwrap_or(true),
            solvers,
            settings,
            x0: p.x0.unwrap_or(StartKind::Zero),
            trials,
            base_seed: p.base_seed.unwrap_or(0),
            parallel: p.parallel.unwrap_or(true),
            output: p.output.clone().unwrap_or_else(|| PathBuf::from("qrk-out")),
        })
    }
}

/// Names the config key a whitelist-solver validation message is about.
fn wlqrk_field(message: &str) -> &'static str {
    const KEYS: [&str; 7] = [
        "alpha",
        "beta_bound",
        "t",
        "s_cycle",
        "thr",
        "block_vote_ratio",
        "q_min",
    ];
    let body = message.split_once(':').map_or(message, |(_, rest)| rest);
    body.split_whitespace()
        .find_map(|word| KEYS.into_iter().find(|&k| k == word))
        .unwrap_or("solver")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = ExperimentConfig::resolve(PartialConfig::default()).unwrap();
        assert_eq!(
            cfg.problem,
            ProblemSource::Gaussian {
                m: 2000,
                n: 50,
                seed: 1
            }
        );
        assert_eq!(cfg.settings.t.resolve(2000), 2000);
        assert!((cfg.settings.q - 0.75).abs() < 1e-15);
        assert_eq!(cfg.solvers.len(), 3);
    }

    #[test]
    fn flags_override_file() {
        let file =
            PartialConfig::from_toml("m = 300\nn = 10\nbeta = 0.1\nsolvers = [\"qrk\"]\n").unwrap();
        let flags = PartialConfig {
            n: Some(20),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(
            (merged.m, merged.n, merged.beta),
            (Some(300), Some(20), Some(0.1))
        );
        assert_eq!(merged.solvers, Some(vec![SolverKind::Qrk]));
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        let err = PartialConfig::from_toml("bogus = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn field_level_messages() {
        let bad = |p: PartialConfig| ExperimentConfig::resolve(p).unwrap_err().to_string();
        assert!(bad(PartialConfig {
            trials: Some(0),
            ..Default::default()
        })
        .contains("`trials`"));
        assert!(bad(PartialConfig {
            t: Some(5),
            t_fraction: Some(0.5),
            ..Default::default()
        })
        .contains("`t`"));
        assert!(bad(PartialConfig {
            alpha: Some(0.0),
            ..Default::default()
        })
        .contains("`alpha`"));
        assert!(bad(PartialConfig {
            s_cycle: Some(0),
            ..Default::default()
        })
        .contains("`s_cycle`"));
        assert!(bad(PartialConfig {
            q_min: Some(0.9),
            ..Default::default()
        })
        .contains("`q_min`"));
        assert!(bad(PartialConfig {
            thr: Some(0.5),
            ..Default::default()
        })
        .contains("`thr`"));
        assert!(bad(PartialConfig {
            m: Some(10),
            n: Some(100),
            ..Default::default()
        })
        .contains("`m`"));
        assert!(bad(PartialConfig {
            problem: Some(ProblemKind::Csv),
            path: Some("/nonexistent/file.csv".into()),
            ..Default::default()
        })
        .contains("`path`"));
    }

    #[test]
    fn wlqrk_fields_only_checked_when_selected() {
        let p = PartialConfig {
            thr: Some(0.1),
            solvers: Some(vec![SolverKind::Qrk]),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(p).is_ok());
    }

    #[test]
    fn layered_models() {
        let setup = CorruptionSetup {
            kind: CorruptionKind::TwoLayer,
            beta: 0.4,
            seed: 0,
            lo: -5.0,
            hi: 5.0,
            layer_rows: None,
        };
        assert_eq!(
            setup.model(5000),
            Some(CorruptionModel::TwoLayer {
                large_rows: 1000,
                small_rows: 1000
            })
        );
        let p = PartialConfig {
            corruption: Some(CorruptionKind::FiveLayer),
            layer_rows: Some(vec![1, 2]),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(p)
            .unwrap_err()
            .to_string()
            .contains("layer_rows"));
    }
}
