//! Dense row-major storage for row-normalized systems, residuals, and the
//! least-squares warm start.

use std::ops::Deref;

use thiserror::Error;

use crate::scalar::{dot, norm, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("row {0} has (near) zero norm")]
    ZeroRow(usize),
    #[error("invalid dimensions m={m}, n={n}: need m >= n >= 1")]
    InvalidDims { m: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("least squares did not converge after {iterations} iterations (normal-equation residual {residual:e}, target {target:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// A row-normalized system `A·x ≈ b̃`.
///
/// Every row has unit Euclidean norm; labels are scaled with their rows, so the
/// solution set is unchanged by normalization. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<T> {
    rows: Vec<T>,
    labels: Vec<T>,
    m: usize,
    n: usize,
}

/// Divides every row and its label by the row's norm.
///
/// `raw_rows` is row-major with `m = raw_labels.len()` rows.
pub fn normalize_rows<T: Scalar>(
    raw_rows: &[T],
    n: usize,
    raw_labels: &[T],
) -> Result<LinearSystem<T>, LinalgError> {
    let m = raw_labels.len();
    if n == 0 || m < n {
        return Err(LinalgError::InvalidDims { m, n });
    }
    if raw_rows.len() != m * n {
        return Err(LinalgError::ShapeMismatch(format!(
            "{} matrix entries for {m}x{n}",
            raw_rows.len()
        )));
    }
    let mut rows = Vec::with_capacity(m * n);
    let mut labels = Vec::with_capacity(m);
    for (i, (row, &label)) in raw_rows.chunks_exact(n).zip(raw_labels).enumerate() {
        if row
            .iter()
            .chain(std::iter::once(&label))
            .any(|v| !v.is_finite())
        {
            return Err(LinalgError::NonFinite("system"));
        }
        let len = norm(row);
        if !(len >= T::ZERO_ROW_TOL) {
            return Err(LinalgError::ZeroRow(i));
        }
        rows.extend(row.iter().map(|&v| v / len));
        labels.push(label / len);
    }
    Ok(LinearSystem { rows, labels, m, n })
}

impl<T: Scalar> LinearSystem<T> {
    /// Builds a system from raw rows; see [`normalize_rows`].
    pub fn from_raw(raw_rows: &[T], n: usize, raw_labels: &[T]) -> Result<Self, LinalgError> {
        normalize_rows(raw_rows, n, raw_labels)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major matrix entries.
    pub fn rows(&self) -> &[T] {
        &self.rows
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Same matrix, new observed labels.
    pub fn with_labels(&self, labels: Vec<T>) -> Result<Self, LinalgError> {
        if labels.len() != self.m {
            return Err(LinalgError::ShapeMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.m
            )));
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite("labels"));
        }
        Ok(Self {
            rows: self.rows.clone(),
            labels,
            m: self.m,
            n: self.n,
        })
    }

    fn check_index(&self, i: usize) -> Result<(), LinalgError> {
        if i < self.m {
            Ok(())
        } else {
            Err(LinalgError::IndexOutOfRange {
                index: i,
                len: self.m,
            })
        }
    }

    fn check_width(&self, x: &[T]) -> Result<(), LinalgError> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(LinalgError::ShapeMismatch(format!(
                "iterate of length {} for n={}",
                x.len(),
                self.n
            )))
        }
    }

    /// `⟨a_i, x⟩ − b̃_i` without bounds or width checks beyond slice indexing.
    #[inline]
    pub(crate) fn residual_unchecked(&self, x: &[T], i: usize) -> T {
        dot(self.row(i), x) - self.labels[i]
    }

    /// `⟨a_i, x⟩ − b̃_i`.
    pub fn residual(&self, x: &[T], i: usize) -> Result<T, LinalgError> {
        self.check_index(i)?;
        self.check_width(x)?;
        Ok(self.residual_unchecked(x, i))
    }

    /// Residuals for a multiset of row indices, in order; duplicates repeat.
    pub fn batch_residuals(&self, x: &[T], indices: &[usize]) -> Result<Vec<T>, LinalgError> {
        self.check_width(x)?;
        indices
            .iter()
            .map(|&i| {
                self.check_index(i)?;
                Ok(self.residual_unchecked(x, i))
            })
            .collect()
    }

    /// Residuals of every row.
    pub fn full_residuals(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        self.check_width(x)?;
        Ok((0..self.m).map(|i| self.residual_unchecked(x, i)).collect())
    }

    /// `A·x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.rows.chunks_exact(self.n).map(|r| dot(r, x)).collect()
    }

    /// `Aᵀ·y`.
    pub fn apply_transpose(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (row, &w) in self.rows.chunks_exact(self.n).zip(y) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += w * a;
            }
        }
        out
    }

    /// Least-squares solution of `A·x ≈ b̃` by conjugate gradients on the
    /// normal equations (CGLS form, which never forms `AᵀA`).
    ///
    /// Stops once `‖Aᵀ(Ax − b̃)‖ ≤ tolerance·‖Aᵀb̃‖`. A vanishing search
    /// direction curvature (rank deficiency) or exhausting `max_iters`
    /// yields [`LinalgError::NoConvergence`] with the achieved residual.
    pub fn least_squares(
        &self,
        tolerance: T,
        max_iters: usize,
    ) -> Result<Estimate<T>, LinalgError> {
        let mut x = vec![T::zero(); self.n];
        let mut r = self.labels.clone();
        let mut s = self.apply_transpose(&r);
        let target = tolerance * norm(&s);
        let mut p = s.clone();
        let mut gamma = dot(&s, &s);
        let mut iterations = 0;
        loop {
            if gamma.sqrt() <= target {
                return Estimate::new(x);
            }
            if iterations == max_iters {
                break;
            }
            let q = self.apply(&p);
            let delta = dot(&q, &q);
            if !(delta > T::zero()) {
                break;
            }
            let step = gamma / delta;
            for (xi, &pi) in x.iter_mut().zip(&p) {
                *xi += step * pi;
            }
            for (ri, &qi) in r.iter_mut().zip(&q) {
                *ri -= step * qi;
            }
            s = self.apply_transpose(&r);
            let gamma_next = dot(&s, &s);
            let ratio = gamma_next / gamma;
            for (pi, &si) in p.iter_mut().zip(&s) {
                *pi = si + ratio * *pi;
            }
            gamma = gamma_next;
            iterations += 1;
        }
        Err(LinalgError::NoConvergence {
            iterations,
            residual: gamma.sqrt().as_f64(),
            target: target.as_f64(),
        })
    }

    /// Warm start with the default budget: tolerance `1e-10` (or the scalar's
    /// attainable floor) and `10·n` iterations.
    pub fn least_squares_default(&self) -> Result<Estimate<T>, LinalgError> {
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(10.0));
        self.least_squares(tol, 10 * self.n)
    }

    /// Orthogonal projection of `x` onto row `i`'s hyperplane, in place.
    /// Returns the residual that was removed.
    #[inline]
    pub(crate) fn project_in_place(&self, x: &mut [T], i: usize) -> T {
        let r = self.residual_unchecked(x, i);
        for (xi, &a) in x.iter_mut().zip(self.row(i)) {
            *xi -= r * a;
        }
        r
    }
}

/// A solver iterate. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T>(Vec<T>);

impl<T: Scalar> Estimate<T> {
    pub fn new(x: Vec<T>) -> Result<Self, LinalgError> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(Self(x))
        } else {
            Err(LinalgError::NonFinite("estimate"))
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> Deref for Estimate<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: &[f64], n: usize, labels: &[f64]) -> LinearSystem<f64> {
        normalize_rows(rows, n, labels).unwrap()
    }

    #[test]
    fn normalize_unit_row_is_unchanged() {
        let s = sys(&[1.0, 0.0, 0.0, 1.0], 2, &[5.0, 1.0]);
        assert_eq!(s.row(0), &[1.0, 0.0]);
        assert_eq!(s.labels()[0], 5.0);
    }

    #[test]
    fn normalize_scales_row_and_label() {
        let s = sys(&[3.0, 4.0, 1.0, 0.0], 2, &[10.0, 0.0]);
        assert!((s.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((s.row(0)[1] - 0.8).abs() < 1e-15);
        assert!((s.labels()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_row_is_rejected() {
        let err = normalize_rows(&[1.0, 0.0, 0.0, 0.0], 2, &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, LinalgError::ZeroRow(1));
        let err = normalize_rows(&[1e-15, 0.0, 1.0, 1.0], 2, &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, LinalgError::ZeroRow(0));
    }

    #[test]
    fn underdetermined_is_rejected() {
        let err = normalize_rows(&[1.0, 0.0, 0.0], 3, &[1.0]).unwrap_err();
        assert_eq!(err, LinalgError::InvalidDims { m: 1, n: 3 });
    }

    #[test]
    fn residual_examples() {
        let s = sys(&[1.0, 0.0, 0.6, 0.8], 2, &[2.0, 2.0]);
        assert_eq!(s.residual(&[0.0, 0.0], 0).unwrap(), -2.0);
        assert!((s.residual(&[1.0, 1.0], 1).unwrap() + 0.6).abs() < 1e-15);
        assert_eq!(s.residual(&[2.0, 0.0], 0).unwrap(), 0.0);
        assert_eq!(
            s.residual(&[0.0, 0.0], 2),
            Err(LinalgError::IndexOutOfRange { index: 2, len: 2 })
        );
    }

    #[test]
    fn batch_residuals_multiset() {
        let s = sys(&[1.0, 0.0, 0.6, 0.8, 0.0, 1.0], 2, &[2.0, 2.0, -1.0]);
        let x = [0.3, -1.7];
        assert!(s.batch_residuals(&x, &[]).unwrap().is_empty());
        let dup = s.batch_residuals(&x, &[1, 1]).unwrap();
        assert_eq!(dup[0], dup[1]);
        let idx = [2, 0, 1];
        let batch = s.batch_residuals(&x, &idx).unwrap();
        for (l, &i) in idx.iter().enumerate() {
            assert_eq!(batch[l], s.residual(&x, i).unwrap());
        }
        assert!(s.batch_residuals(&x, &[0, 3]).is_err());
    }

    #[test]
    fn least_squares_identity() {
        let s = sys(&[1.0, 0.0, 0.0, 1.0], 2, &[3.0, 7.0]);
        let x = s.least_squares_default().unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_rank_deficient_fails() {
        // two copies of the same direction: AᵀA is singular
        let s = sys(&[1.0, 0.0, 2.0, 0.0, 3.0, 0.0], 2, &[1.0, 2.0, 4.0]);
        let x = s.least_squares(1e-10, 20);
        // the solution restricted to span{e1} is still found exactly
        assert!(x.is_ok());
        let s = sys(&[1.0, 1.0, 1.0, 1.0], 2, &[1.0, 3.0]);
        assert!(s.least_squares(1e-14, 0).is_err());
    }

    #[test]
    fn projection_zeroes_residual() {
        let s = sys(&[3.0, 4.0, 1.0, 2.0], 2, &[1.0, 1.0]);
        let mut x = vec![0.4, -2.0];
        s.project_in_place(&mut x, 0);
        assert!(s.residual(&x, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn estimate_rejects_nan() {
        assert!(Estimate::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(Estimate::<f32>::zeros(3).len(), 3);
    }

    #[test]
    fn single_precision_normalizes() {
        let s = normalize_rows(&[3.0f32, 4.0, 1.0, 0.0], 2, &[10.0, 1.0]).unwrap();
        assert!((norm(s.row(0)) - 1.0).abs() < f32::UNIT_NORM_TOL);
    }
}
