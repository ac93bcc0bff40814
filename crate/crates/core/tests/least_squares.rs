use nalgebra::{DMatrix, DVector};
use qrk_core::problems::{apply_corruption, gen_gaussian_system};
use qrk_core::{CorruptionModel, CorruptionSpec, System};

fn qr_solution(system: &System) -> DVector<f64> {
    let a = DMatrix::from_row_slice(system.m(), system.n(), system.rows());
    let b = DVector::from_column_slice(system.labels());
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    qr.r()
        .solve_upper_triangular(&qtb)
        .expect("full column rank")
}

#[test]
fn least_squares_matches_householder_qr() {
    let clean = gen_gaussian_system::<f64>(200, 10, 17).unwrap();
    let out = apply_corruption(
        &clean,
        &CorruptionSpec {
            model: CorruptionModel::uniform(),
            beta: 0.2,
            seed: 18,
        },
    )
    .unwrap();
    let ours = out.system.least_squares_default().unwrap();
    let oracle = qr_solution(&out.system);
    let gap = ours
        .iter()
        .zip(oracle.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-6, "max deviation from QR solution {gap:e}");
}

#[test]
fn least_squares_recovers_consistent_truth() {
    let clean = gen_gaussian_system::<f64>(300, 12, 5).unwrap();
    let x = clean.system.least_squares_default().unwrap();
    let gap = x
        .iter()
        .zip(&clean.truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-8, "{gap:e}");
}
