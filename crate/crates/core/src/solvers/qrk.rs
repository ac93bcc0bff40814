use super::trace::Recorder;
use super::{check_start, Oracle, QuantileStepper, RunTrace, SolverError, WhitelistState};
use crate::linalg::{Estimate, LinearSystem};
use crate::sampling::RngStream;
use crate::scalar::Scalar;

/// Quantile level, batch size, budget and seed for QRK.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrkConfig {
    pub q: f64,
    pub t: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl QrkConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(SolverError::Config(format!(
                "q = {} outside (0, 1]",
                self.q
            )));
        }
        if self.t == 0 {
            return Err(SolverError::Config("batch size t must be >= 1".into()));
        }
        Ok(())
    }
}

/// Quantile randomized Kaczmarz over an index pool (`None` = all rows).
///
/// Each iteration draws `t` rows uniformly with replacement from the pool,
/// keeps the rows whose absolute residual is at most the lower `q`-quantile of
/// the batch, and projects onto one of them chosen uniformly. Duplicates in
/// the batch stay in the admissible multiset. `t = m` with the full pool is
/// the full-residual variant.
pub fn qrk_solve<T: Scalar>(
    system: &LinearSystem<T>,
    config: &QrkConfig,
    pool: Option<&[usize]>,
    x0: &Estimate<T>,
    oracle: Option<&Oracle<'_, T>>,
) -> Result<RunTrace<T>, SolverError> {
    qrk_solve_observed(system, config, pool, x0, oracle, |_, _| {})
}

/// [`qrk_solve`], calling `observer(j, x_j)` after every iteration including 0.
pub fn qrk_solve_observed<T: Scalar>(
    system: &LinearSystem<T>,
    config: &QrkConfig,
    pool: Option<&[usize]>,
    x0: &Estimate<T>,
    oracle: Option<&Oracle<'_, T>>,
    mut observer: impl FnMut(usize, &[T]),
) -> Result<RunTrace<T>, SolverError> {
    config.validate()?;
    check_start(system, x0)?;
    let mut lists = match pool {
        Some(pool) => WhitelistState::from_pool(system.m(), pool, config.q)?,
        None => WhitelistState::new(system.m(), config.q),
    };
    if config.q * (config.t as f64) < 1.0 {
        log::warn!(
            "q·t = {} < 1: the admissible set is a single smallest residual",
            config.q * config.t as f64
        );
    }
    let recorder = Recorder::new(oracle, system.n(), &mut lists)?;
    let mut rng = RngStream::new(config.seed);
    let mut stepper = QuantileStepper::new(config.t);
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(config.iterations + 1);
    records.push(recorder.record(0, &x, &lists));
    observer(0, &x);
    for j in 1..=config.iterations {
        stepper.step(
            system,
            x.as_mut_slice(),
            &mut rng,
            lists.whitelist(),
            config.t,
            config.q,
            j,
        )?;
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
    use crate::linalg::normalize_rows;
    use crate::problems::{apply_corruption, gen_gaussian_system, CorruptionModel, CorruptionSpec};
    use crate::scalar::relative_error;
    use crate::solvers::{rk_solve, RkConfig};

    #[test]
    fn full_quantile_degenerates_to_uniform_pick() {
        // with q = 1 every batch element is admissible; the pick is then a
        // uniform draw over t i.i.d. pool draws, i.e. RK on the pool
        let p = gen_gaussian_system::<f64>(50, 4, 3).unwrap();
        let cfg = QrkConfig {
            q: 1.0,
            t: 1,
            iterations: 300,
            seed: 5,
        };
        let trace = qrk_solve(&p.system, &cfg, None, &Estimate::zeros(4), None).unwrap();
        let mut rng = RngStream::new(5);
        let mut x = vec![0.0; 4];
        let pool: Vec<usize> = (0..50).collect();
        for _ in 0..300 {
            let k = rng.sample_uniform_indices(&pool, 1).unwrap()[0];
            let _ = rng.index_below(1);
            p.system.project_in_place(&mut x, k);
        }
        assert_eq!(&*trace.estimate, &x[..]);
    }

    #[test]
    fn equal_residuals_are_all_admissible() {
        // x = 0 and all labels equal: every batch residual has the same
        // magnitude, so each step picks uniformly from the whole batch
        let rows = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let sys = normalize_rows(&rows, 2, &[1.0, 1.0, 2f64.sqrt()]).unwrap();
        let cfg = QrkConfig {
            q: 0.1,
            t: 3,
            iterations: 1,
            seed: 1,
        };
        let mut stepper = QuantileStepper::<f64>::new(3);
        let mut rng = RngStream::new(1);
        let mut x = vec![0.0, 0.0];
        stepper
            .step(&sys, &mut x, &mut rng, &[0, 1, 2], cfg.t, cfg.q, 1)
            .unwrap();
        assert_eq!(stepper.magnitudes.iter().filter(|&&v| v <= 1.0).count(), 3);
    }

    #[test]
    fn pool_restricts_updates() {
        let p = gen_gaussian_system::<f64>(40, 3, 2).unwrap();
        let pool = [0usize, 1, 2];
        let cfg = QrkConfig {
            q: 0.5,
            t: 4,
            iterations: 100,
            seed: 8,
        };
        let trace = qrk_solve(&p.system, &cfg, Some(&pool), &Estimate::zeros(3), None).unwrap();
        assert_eq!(trace.records[0].wl_size, 3);
        assert_eq!(trace.records[0].bl_size, 37);
        assert!(qrk_solve(&p.system, &cfg, Some(&[]), &Estimate::zeros(3), None).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let p = gen_gaussian_system::<f64>(10, 2, 2).unwrap();
        let mut cfg = QrkConfig {
            q: 0.0,
            t: 4,
            iterations: 1,
            seed: 0,
        };
        assert!(qrk_solve(&p.system, &cfg, None, &Estimate::zeros(2), None).is_err());
        cfg.q = 0.5;
        cfg.t = 0;
        assert!(qrk_solve(&p.system, &cfg, None, &Estimate::zeros(2), None).is_err());
    }

    #[test]
    fn qrk_recovers_where_rk_fails() {
        let p = gen_gaussian_system::<f64>(400, 10, 21).unwrap();
        let out = apply_corruption(
            &p,
            &CorruptionSpec {
                model: CorruptionModel::uniform(),
                beta: 0.2,
                seed: 22,
            },
        )
        .unwrap();
        let cfg = QrkConfig {
            q: 0.75,
            t: 400,
            iterations: 2000,
            seed: 23,
        };
        let x0 = Estimate::zeros(10);
        let qrk = qrk_solve(&out.system, &cfg, None, &x0, Some(&out.oracle())).unwrap();
        let rk = rk_solve(
            &out.system,
            &RkConfig {
                iterations: 2000,
                seed: 23,
            },
            &x0,
            None,
        )
        .unwrap();
        assert!(qrk.final_rel_error().unwrap() < 1e-8);
        assert!(relative_error(&rk.estimate, &p.truth) > 0.1);
        assert_eq!(qrk.final_wl_corruption(), Some(0.2));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = gen_gaussian_system::<f64>(100, 5, 1).unwrap();
        let cfg = QrkConfig {
            q: 0.7,
            t: 30,
            iterations: 200,
            seed: 4,
        };
        let a = qrk_solve(
            &p.system,
            &cfg,
            None,
            &Estimate::zeros(5),
            Some(&crate::Oracle::new(&p.truth)),
        )
        .unwrap();
        let b = qrk_solve(
            &p.system,
            &cfg,
            None,
            &Estimate::zeros(5),
            Some(&crate::Oracle::new(&p.truth)),
        )
        .unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(a
            .records
            .iter()
            .zip(&b.records)
            .all(|(x, y)| x.same_state(y)));
    }
}
