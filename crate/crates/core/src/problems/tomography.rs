//! Straight-ray tomography on an `N×N` pixel grid.
//!
//! Pixel `(row, col)` covers `[col, col+1] × [row, row+1]` and is unknown
//! number `row·N + col`. Each equation integrates the image along one ray.

use super::{CleanProblem, ProblemError};
use crate::linalg::normalize_rows;
use crate::sampling::RngStream;
use crate::scalar::Scalar;

/// Rays whose total path through the grid is shorter than this are redrawn.
const MIN_PATH: f64 = 1e-6;

/// Intersection length of the line `origin + s·direction` with every pixel.
///
/// `direction` need not be normalized. Returns `N²` nonnegative lengths.
pub fn ray_pixel_lengths(grid: usize, origin: [f64; 2], direction: [f64; 2]) -> Vec<f64> {
    let mut lengths = vec![0.0; grid * grid];
    let speed = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if grid == 0 || !(speed > 0.0) {
        return lengths;
    }
    let side = grid as f64;

    // clip the line to the grid square (slab method)
    let (mut s_lo, mut s_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for axis in 0..2 {
        let (o, d) = (origin[axis], direction[axis]);
        if d == 0.0 {
            if o < 0.0 || o > side {
                return lengths;
            }
        } else {
            let (a, b) = ((0.0 - o) / d, (side - o) / d);
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        }
    }
    if !(s_hi > s_lo) {
        return lengths;
    }

    let mut cuts = vec![s_lo, s_hi];
    for axis in 0..2 {
        let (o, d) = (origin[axis], direction[axis]);
        if d != 0.0 {
            for k in 0..=grid {
                let s = (k as f64 - o) / d;
                if s > s_lo && s < s_hi {
                    cuts.push(s);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();

    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let x = origin[0] + mid * direction[0];
        let y = origin[1] + mid * direction[1];
        let col = (x.floor().max(0.0) as usize).min(grid - 1);
        let row = (y.floor().max(0.0) as usize).min(grid - 1);
        lengths[row * grid + col] += (w[1] - w[0]) * speed;
    }
    lengths
}

/// Piecewise-constant test image: three disks of intensity 1, 0.5 and 0.25
/// on a zero background, sampled at pixel centres.
pub fn phantom(grid: usize) -> Vec<f64> {
    let side = grid as f64;
    // (centre x, centre y, radius) as fractions of the side, with intensity
    let disks = [
        (0.30, 0.30, 0.20, 1.0),
        (0.70, 0.35, 0.15, 0.5),
        (0.50, 0.72, 0.18, 0.25),
    ];
    let mut image = vec![0.0; grid * grid];
    for row in 0..grid {
        for col in 0..grid {
            let (x, y) = (col as f64 + 0.5, row as f64 + 0.5);
            for &(cx, cy, r, value) in &disks {
                let (dx, dy) = (x - cx * side, y - cy * side);
                if dx * dx + dy * dy <= (r * side) * (r * side) {
                    image[row * grid + col] = value;
                    break;
                }
            }
        }
    }
    image
}

/// Random-ray tomography system with the [`phantom`] as ground truth.
///
/// Each ray has angle `θ ~ Unif[0, π)` and signed offset from the grid centre
/// `ρ ~ Unif(−N/√2, N/√2)`; rays that miss the grid are redrawn.
pub fn gen_tomography_system<T: Scalar>(
    grid: usize,
    num_rays: usize,
    seed: u64,
) -> Result<CleanProblem<T>, ProblemError> {
    if grid < 2 || num_rays < grid * grid {
        return Err(ProblemError::InvalidDims(format!(
            "grid={grid}, rays={num_rays}: need grid >= 2 and rays >= grid^2"
        )));
    }
    let n = grid * grid;
    let half_diag = grid as f64 / std::f64::consts::SQRT_2;
    let centre = grid as f64 / 2.0;
    let mut rng = RngStream::new(seed);
    let mut raw = Vec::with_capacity(num_rays * n);
    while raw.len() < num_rays * n {
        let theta = rng.sample_real_uniform(0.0, std::f64::consts::PI)?;
        let rho = rng.sample_real_uniform(-half_diag, half_diag)?;
        let (dir, normal) = ([theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]);
        let origin = [centre + rho * normal[0], centre + rho * normal[1]];
        let lengths = ray_pixel_lengths(grid, origin, dir);
        if lengths.iter().sum::<f64>() >= MIN_PATH {
            raw.extend(lengths.into_iter().map(T::lit));
        }
    }
    let truth: Vec<T> = phantom(grid).into_iter().map(T::lit).collect();
    let shape = normalize_rows(&raw, n, &vec![T::zero(); num_rays])?;
    let labels = shape.apply(&truth);
    Ok(CleanProblem {
        system: shape.with_labels(labels)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_ray_through_first_row() {
        let l = ray_pixel_lengths(2, [-1.0, 0.5], [1.0, 0.0]);
        assert_eq!(l, vec![1.0, 1.0, 0.0, 0.0]);
        let norm = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        let unit: Vec<f64> = l.iter().map(|v| v / norm).collect();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((unit[0] - h).abs() < 1e-15 && (unit[1] - h).abs() < 1e-15);
    }

    #[test]
    fn diagonal_ray_lengths() {
        // main diagonal of a 2x2 grid crosses pixels 0 and 3, sqrt(2) each
        let l = ray_pixel_lengths(2, [0.0, 0.0], [1.0, 1.0]);
        let r2 = std::f64::consts::SQRT_2;
        assert!((l[0] - r2).abs() < 1e-12 && (l[3] - r2).abs() < 1e-12);
        assert_eq!(l[1] + l[2], 0.0);
    }

    #[test]
    fn missing_ray_is_empty() {
        let l = ray_pixel_lengths(3, [-1.0, 5.0], [1.0, 0.0]);
        assert!(l.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn chord_length_matches_geometry() {
        // any ray crossing the square: total length equals the clipped chord
        let mut rng = RngStream::new(4);
        for _ in 0..200 {
            let theta = rng.sample_real_uniform(0.0, 3.1).unwrap();
            let origin = [
                rng.sample_real_uniform(0.0, 5.0).unwrap(),
                rng.sample_real_uniform(0.0, 5.0).unwrap(),
            ];
            let dir = [theta.cos(), theta.sin()];
            let l = ray_pixel_lengths(5, origin, dir);
            assert!(l.iter().all(|&v| v >= 0.0));
            // chord by brute-force stepping along the line
            let steps = 200_000;
            let span = 20.0;
            let h = 2.0 * span / steps as f64;
            let inside = (0..steps)
                .filter(|&k| {
                    let s = -span + (k as f64 + 0.5) * h;
                    let (x, y) = (origin[0] + s * dir[0], origin[1] + s * dir[1]);
                    (0.0..=5.0).contains(&x) && (0.0..=5.0).contains(&y)
                })
                .count() as f64
                * h;
            assert!(
                (l.iter().sum::<f64>() - inside).abs() < 1e-3,
                "{} vs {inside}",
                l.iter().sum::<f64>()
            );
        }
    }

    #[test]
    fn phantom_has_three_levels() {
        let img = phantom(16);
        for v in [0.0, 0.25, 0.5, 1.0] {
            assert!(img.contains(&v), "missing level {v}");
        }
    }

    #[test]
    fn tomography_system_shape() {
        let p = gen_tomography_system::<f64>(16, 1300, 2).unwrap();
        assert_eq!((p.system.m(), p.system.n()), (1300, 256));
        assert!(p.system.rows().iter().all(|&v| v >= 0.0));
        let q = gen_tomography_system::<f64>(16, 1300, 2).unwrap();
        assert_eq!(p.system, q.system);
        assert!(gen_tomography_system::<f64>(4, 15, 2).is_err());
        assert!(gen_tomography_system::<f64>(1, 15, 2).is_err());
    }
}
