//! Discretized zero-mean Gaussian tables on the shared 64-point sigma grid.
//!
//! Bins are unit-width integer bins; the mass beyond +-support folds into
//! the edge bins.  Probabilities are computed from the negative half and
//! mirrored so the float pmf is exactly symmetric before quantization.
//!
//! These builders use platform `erfc`, so their integer masses may differ
//! from another implementation's by a unit or two in the last place.  The
//! byte-exact interchange path therefore always ships tables as blobs
//! ([`crate::tables::TableSet::from_blob`]); this module exists for
//! self-contained use of the crate.

use crate::tables::{CdfTable, TOTAL};
use crate::CodecError;

/// Smallest grid sigma.
pub const SCALE_MIN: f64 = 0.11;
/// Largest grid sigma.
pub const SCALE_MAX: f64 = 256.0;
/// Number of grid points.
pub const SCALE_LEVELS: usize = 64;
/// Support half-width is ceil(TAIL_MULT * sigma), at least 1.
pub const TAIL_MULT: f64 = 6.0;

/// All grid sigmas, ascending and log-spaced.
pub fn scale_grid() -> Vec<f64> {
    let log_min = SCALE_MIN.ln();
    let log_step = (SCALE_MAX.ln() - log_min) / (SCALE_LEVELS - 1) as f64;
    (0..SCALE_LEVELS).map(|i| (log_min + log_step * i as f64).exp()).collect()
}

/// Largest coded magnitude for a sigma.
pub fn support_max(sigma: f64) -> i32 {
    ((TAIL_MULT * sigma).ceil() as i32).max(1)
}

/// Standard normal CDF.
fn ndtr(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Deterministic float pmf -> integer masses summing to 2^16, all >= 1.
///
/// Largest-remainder allocation keeps symmetric inputs symmetric to within
/// one unit; the minimum-mass fixup is repaid one unit per donor starting
/// from the richest bins, so no single bin absorbs the whole debt.
pub fn quantize_pmf(pmf: &[f64]) -> Result<Vec<u32>, CodecError> {
    if pmf.is_empty() || pmf.len() > 0xFFFF {
        return Err(CodecError::BadInput(format!(
            "pmf must have 1..65535 bins, got {}",
            pmf.len()
        )));
    }
    let sum: f64 = pmf.iter().sum();
    if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) || sum <= 0.0 {
        return Err(CodecError::BadInput(
            "pmf must be finite, non-negative and have positive mass".into(),
        ));
    }
    let exact: Vec<f64> = pmf.iter().map(|p| p / sum * TOTAL as f64).collect();
    let mut masses: Vec<i64> = exact.iter().map(|e| e.floor() as i64).collect();
    let short = TOTAL as i64 - masses.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..pmf.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(short.max(0) as usize) {
        masses[i] += 1;
    }
    let mut debt = 0i64;
    for m in masses.iter_mut() {
        if *m == 0 {
            *m = 1;
            debt += 1;
        }
    }
    while debt > 0 {
        let mut donors: Vec<usize> = (0..masses.len()).collect();
        donors.sort_by(|&a, &b| masses[b].cmp(&masses[a]).then(a.cmp(&b)));
        let mut repaid = 0;
        for &i in &donors {
            if debt == 0 {
                break;
            }
            if masses[i] > 1 {
                masses[i] -= 1;
                debt -= 1;
                repaid += 1;
            }
        }
        if debt > 0 && repaid == 0 {
            return Err(CodecError::BadInput(
                "pmf has too many bins for 16-bit precision".into(),
            ));
        }
    }
    Ok(masses.into_iter().map(|m| m as u32).collect())
}

/// Unit-bin table for a zero-mean Gaussian, tails folded into the edges.
pub fn gaussian_table(sigma: f64) -> Result<CdfTable, CodecError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(CodecError::BadInput(format!("sigma must be positive, got {sigma}")));
    }
    let smax = support_max(sigma);
    let mut pmf: Vec<f64> = (-smax..=smax)
        .map(|k| {
            let neg = -(k.abs() as f64);
            ndtr((neg + 0.5) / sigma) - ndtr((neg - 0.5) / sigma)
        })
        .collect();
    let tail = ndtr((-smax as f64 + 0.5) / sigma);
    pmf[0] = tail;
    *pmf.last_mut().unwrap() = tail;
    let masses = quantize_pmf(&pmf)?;
    let mut cdf = Vec::with_capacity(masses.len() + 1);
    cdf.push(0u32);
    let mut acc = 0u32;
    for m in masses {
        acc += m;
        cdf.push(acc);
    }
    CdfTable::new(-smax, cdf)
}

/// One table per grid sigma, in grid order.
pub fn gaussian_grid_tables() -> Result<Vec<CdfTable>, CodecError> {
    scale_grid().into_iter().map(gaussian_table).collect()
}
