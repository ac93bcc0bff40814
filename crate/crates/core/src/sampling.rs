//! Seeded randomness and order-statistic quantiles.
//!
//! # Generator
//!
//! [`RngStream`] is xoshiro256++ (Blackman and Vigna) whose 256-bit state is
//! expanded from the 64-bit seed with SplitMix64. Both algorithms are fixed
//! bit-for-bit, so a seed reproduces the same stream on every platform.
//! Integer ranges are sampled from 64-bit words, never from `usize`, so
//! 32- and 64-bit targets agree.
//!
//! # Seed derivation
//!
//! Independent trials derive their seeds with [`derive_seed`]:
//! `mix64(base ^ trial·0x9E3779B97F4A7C15)` where `mix64` is the SplitMix64
//! output finalizer.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("cannot sample from an empty pool")]
    EmptyPool,
    #[error("invalid range [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("quantile of an empty input")]
    EmptyInput,
    #[error("quantile level {0} outside (0, 1]")]
    QuantileOutOfRange(f64),
    #[error("input contains an unordered value (NaN)")]
    Unordered,
    #[error("cannot draw {count} distinct items from {len}")]
    TooManyDistinct { count: usize, len: usize },
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of an experiment seeded with `base`.
pub fn derive_seed(base: u64, trial: u64) -> u64 {
    mix64(base ^ trial.wrapping_mul(GOLDEN_GAMMA))
}

/// A single-owner deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: Xoshiro256PlusPlus,
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            seed,
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform integer in `0..len`. `len` must be positive.
    #[inline]
    pub fn index_below(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        self.rng.random_range(0..len as u64) as usize
    }

    /// `t` i.i.d. uniform draws from `pool`, with replacement.
    pub fn sample_uniform_indices(
        &mut self,
        pool: &[usize],
        t: usize,
    ) -> Result<Vec<usize>, SamplingError> {
        let mut out = Vec::with_capacity(t);
        self.fill_uniform_indices(pool, t, &mut out)?;
        Ok(out)
    }

    /// As [`Self::sample_uniform_indices`], reusing `out`'s allocation.
    pub fn fill_uniform_indices(
        &mut self,
        pool: &[usize],
        t: usize,
        out: &mut Vec<usize>,
    ) -> Result<(), SamplingError> {
        if pool.is_empty() {
            return Err(SamplingError::EmptyPool);
        }
        out.clear();
        out.extend((0..t).map(|_| pool[self.index_below(pool.len())]));
        Ok(())
    }

    /// Uniform real in `[lo, hi)`.
    pub fn sample_real_uniform(&mut self, lo: f64, hi: f64) -> Result<f64, SamplingError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SamplingError::InvalidRange { lo, hi });
        }
        loop {
            let u: f64 = self.rng.random();
            let v = lo + (hi - lo) * u;
            if v < hi {
                return Ok(v);
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `count` distinct indices from `0..len`, uniformly without replacement,
    /// in draw order.
    pub fn sample_distinct(
        &mut self,
        len: usize,
        count: usize,
    ) -> Result<Vec<usize>, SamplingError> {
        if count > len {
            return Err(SamplingError::TooManyDistinct { count, len });
        }
        Ok(index::sample(&mut self.rng, len, count).into_vec())
    }
}

/// Rank `k = max(1, ⌈q·len⌉)` of the lower `q`-quantile.
///
/// Products within `1e-9` relative of an integer snap to it, so `0.07·100`
/// gives 7, not 8.
pub fn quantile_rank(len: usize, q: f64) -> usize {
    let p = q * len as f64;
    let r = p.round();
    let k = if (p - r).abs() <= 1e-9 * p.max(1.0) {
        r
    } else {
        p.ceil()
    };
    (k as usize).clamp(1, len.max(1))
}

fn check_level(q: f64) -> Result<(), SamplingError> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(SamplingError::QuantileOutOfRange(q))
    }
}

/// Lower `q`-quantile: the `k`-th smallest element, `k = max(1, ⌈q·len⌉)`.
///
/// Runs in expected linear time by selection. `values` is reordered.
pub fn lower_quantile_in_place<T: PartialOrd + Copy>(
    values: &mut [T],
    q: f64,
) -> Result<T, SamplingError> {
    check_level(q)?;
    if values.is_empty() {
        return Err(SamplingError::EmptyInput);
    }
    #[allow(clippy::eq_op)]
    if values.iter().any(|v| v.partial_cmp(v).is_none()) {
        return Err(SamplingError::Unordered);
    }
    let k = quantile_rank(values.len(), q);
    let (_, kth, _) =
        values.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("ordered values"));
    Ok(*kth)
}

/// Lower `q`-quantile of `values`; see [`lower_quantile_in_place`].
pub fn lower_quantile<T: PartialOrd + Copy>(values: &[T], q: f64) -> Result<T, SamplingError> {
    let mut scratch = values.to_vec();
    lower_quantile_in_place(&mut scratch, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_pool_repeats() {
        let mut rng = RngStream::new(3);
        assert_eq!(rng.sample_uniform_indices(&[7], 3).unwrap(), vec![7, 7, 7]);
        assert_eq!(
            rng.sample_uniform_indices(&[], 3),
            Err(SamplingError::EmptyPool)
        );
    }

    #[test]
    fn same_seed_same_draws() {
        let pool: Vec<usize> = (0..50).collect();
        let a = RngStream::new(99)
            .sample_uniform_indices(&pool, 200)
            .unwrap();
        let b = RngStream::new(99)
            .sample_uniform_indices(&pool, 200)
            .unwrap();
        assert_eq!(a, b);
        let c = RngStream::new(100)
            .sample_uniform_indices(&pool, 200)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_indices_frequencies() {
        // each count ~ Binomial(1e5, 1e-3): mean 100, sigma ~ 9.995
        let pool: Vec<usize> = (1..=1000).collect();
        let draws = RngStream::new(2024)
            .sample_uniform_indices(&pool, 100_000)
            .unwrap();
        let mut counts = vec![0usize; 1001];
        for d in draws {
            counts[d] += 1;
        }
        let sigma = (100_000.0f64 * 1e-3 * (1.0 - 1e-3)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - 100.0).abs() <= 5.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn real_uniform_range_and_mean() {
        let mut rng = RngStream::new(1);
        for _ in 0..10_000 {
            let v = rng.sample_real_uniform(0.0, 1.0).unwrap();
            assert!((0.0..1.0).contains(&v));
        }
        let mean = (0..100_000)
            .map(|_| rng.sample_real_uniform(-5.0, 5.0).unwrap())
            .sum::<f64>()
            / 100_000.0;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!(matches!(
            rng.sample_real_uniform(2.0, 2.0),
            Err(SamplingError::InvalidRange { .. })
        ));
    }

    #[test]
    fn distinct_sampling() {
        let mut rng = RngStream::new(8);
        let mut s = rng.sample_distinct(10, 10).unwrap();
        s.sort_unstable();
        assert_eq!(s, (0..10).collect::<Vec<_>>());
        assert!(rng.sample_distinct(3, 4).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|t| derive_seed(42, t)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), seeds.len());
        assert_eq!(derive_seed(42, 5), derive_seed(42, 5));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(lower_quantile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert_eq!(
            lower_quantile(&[5.0, 1.0, 4.0, 2.0, 3.0], 0.4).unwrap(),
            2.0
        );
        assert_eq!(lower_quantile(&[4.5], 0.01).unwrap(), 4.5);
        assert_eq!(lower_quantile(&[1, 2, 3, 4], 0.5).unwrap(), 2);
        assert_eq!(
            lower_quantile::<f64>(&[], 0.5),
            Err(SamplingError::EmptyInput)
        );
        assert_eq!(
            lower_quantile(&[1.0], 0.0),
            Err(SamplingError::QuantileOutOfRange(0.0))
        );
        assert_eq!(
            lower_quantile(&[1.0], 1.5),
            Err(SamplingError::QuantileOutOfRange(1.5))
        );
        assert_eq!(
            lower_quantile(&[1.0, f64::NAN], 0.5),
            Err(SamplingError::Unordered)
        );
    }

    #[test]
    fn rank_snaps_to_integers() {
        assert_eq!(quantile_rank(100, 0.07), 7);
        assert_eq!(quantile_rank(10, 0.7), 7);
        assert_eq!(quantile_rank(3, 0.1), 1);
        assert_eq!(quantile_rank(3, 0.34), 2);
    }

    proptest! {
        #[test]
        fn quantile_matches_sort(values in prop::collection::vec(-1e6f64..1e6, 1..200), q in 0.001f64..=1.0) {
            let got = lower_quantile(&values, q).unwrap();
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(got, sorted[quantile_rank(values.len(), q) - 1]);
            prop_assert!(values.contains(&got));
        }

        #[test]
        fn quantile_monotone(values in prop::collection::vec(-100i32..100, 1..100), q1 in 0.01f64..=1.0, q2 in 0.01f64..=1.0) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(lower_quantile(&values, lo).unwrap() <= lower_quantile(&values, hi).unwrap());
        }
    }
}
