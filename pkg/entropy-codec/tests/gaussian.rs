//! Tolerance checks for the self-built Gaussian tables.  Integer masses may
//! drift a unit or two versus other erfc implementations, which is why the
//! interchange path ships blobs; these tests pin the shared structure.

use entropy_codec::gaussian::{
    gaussian_grid_tables, gaussian_table, quantize_pmf, scale_grid, support_max, SCALE_LEVELS,
};
use entropy_codec::{CodecError, TOTAL};

fn masses(table: &entropy_codec::CdfTable) -> Vec<u32> {
    let (lo, hi) = table.support();
    (lo..=hi)
        .map(|v| {
            let (a, b) = table.cum_range(v, 0).unwrap();
            b - a
        })
        .collect()
}

#[test]
fn grid_is_log_spaced_from_011_to_256() {
    let grid = scale_grid();
    assert_eq!(grid.len(), SCALE_LEVELS);
    assert!((grid[0] - 0.11).abs() < 1e-12);
    assert!((grid[63] - 256.0).abs() < 1e-9);
    let ratio = grid[1] / grid[0];
    for w in grid.windows(2) {
        assert!((w[1] / w[0] - ratio).abs() < 1e-9);
    }
}

#[test]
fn support_grows_with_sigma() {
    assert_eq!(support_max(0.11), 1);
    assert_eq!(support_max(1.0), 6);
    assert_eq!(support_max(256.0), 1536);
    assert_eq!(support_max(0.01), 1);
}

#[test]
fn unit_sigma_central_mass_matches_the_analytic_value() {
    let table = gaussian_table(1.0).unwrap();
    assert_eq!(table.support(), (-6, 6));
    let m = masses(&table);
    // Phi(0.5) - Phi(-0.5) = 0.3829249... of 2^16 is 25095.37.
    assert!((m[6] as f64 - 25095.37).abs() <= 2.0, "central mass {}", m[6]);
}

#[test]
fn tables_are_symmetric_within_one_unit() {
    for sigma in [0.11, 0.5, 1.0, 3.7, 25.0, 256.0] {
        let table = gaussian_table(sigma).unwrap();
        let m = masses(&table);
        let n = m.len();
        for i in 0..n / 2 {
            let a = m[i] as i64;
            let b = m[n - 1 - i] as i64;
            assert!((a - b).abs() <= 1, "sigma {sigma}: bin {i} {a} vs {b}");
        }
    }
}

#[test]
fn smallest_sigma_concentrates_on_zero() {
    // Central bin keeps everything except the one unit each tail bin is
    // floored to: >= 2^16 minus the support size.
    let table = gaussian_table(scale_grid()[0]).unwrap();
    assert_eq!(table.support(), (-1, 1));
    let m = masses(&table);
    assert!(m[1] >= 65533, "central mass {}", m[1]);
    assert!(m[0] >= 1 && m[2] >= 1);
}

#[test]
fn grid_tables_cover_all_levels() {
    let tables = gaussian_grid_tables().unwrap();
    assert_eq!(tables.len(), SCALE_LEVELS);
    for (sigma, table) in scale_grid().into_iter().zip(&tables) {
        let smax = support_max(sigma);
        assert_eq!(table.support(), (-smax, smax));
    }
}

#[test]
fn quantized_masses_sum_to_total_with_no_empty_bin() {
    let cases: Vec<Vec<f64>> = vec![
        vec![0.5, 0.5],
        vec![1e-12, 1.0, 1e-12],
        vec![1.0; 1000],
        (1..=500).map(|i| 1.0 / i as f64).collect(),
    ];
    for pmf in cases {
        let m = quantize_pmf(&pmf).unwrap();
        assert_eq!(m.iter().sum::<u32>(), TOTAL);
        assert!(m.iter().all(|&x| x >= 1));
    }
}

#[test]
fn quantize_rejects_degenerate_inputs() {
    for pmf in [vec![], vec![0.0, 0.0], vec![1.0, -0.5], vec![f64::NAN, 1.0]] {
        match quantize_pmf(&pmf) {
            Err(CodecError::BadInput(_)) => {}
            other => panic!("expected BadInput for {pmf:?}, got {other:?}"),
        }
    }
    assert!(gaussian_table(0.0).is_err());
    assert!(gaussian_table(-1.0).is_err());
}
