//! Kernel dimensions from singular values, with a mandatory gap certificate.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, C64};
use crate::error::{Error, Result};

pub const DEFAULT_REL_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_REQUIRED_GAP: f64 = 100.0;

/// Evidence behind a kernel-dimension call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub sigma_max: f64,
    pub threshold: f64,
    /// Largest singular value counted as zero (0 when none were dropped).
    pub last_dropped: f64,
    /// Smallest singular value counted as nonzero (`inf` when all were dropped).
    pub first_kept: f64,
    /// `first_kept / max(last_dropped, threshold)`.
    pub gap: f64,
    pub kernel_dim: usize,
    pub columns: usize,
}

impl RankCertificate {
    pub fn certified(&self, required: f64) -> bool {
        self.gap >= required
    }
}

/// Classify the singular values of an operator with `columns` inputs.
pub fn certify(singular_values: &[f64], columns: usize, rel_threshold: f64, required_gap: f64) -> Result<RankCertificate> {
    let sigma_max = singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = rel_threshold * sigma_max;
    let mut dropped = columns.saturating_sub(singular_values.len());
    let mut last_dropped: f64 = 0.0;
    let mut first_kept = f64::INFINITY;
    for &s in singular_values {
        if s < threshold || sigma_max == 0.0 {
            dropped += 1;
            last_dropped = last_dropped.max(s);
        } else {
            first_kept = first_kept.min(s);
        }
    }
    let gap = if first_kept.is_infinite() {
        f64::INFINITY
    } else {
        first_kept / last_dropped.max(threshold)
    };
    let cert = RankCertificate { sigma_max, threshold, last_dropped, first_kept, gap, kernel_dim: dropped, columns };
    if !cert.certified(required_gap) {
        return Err(Error::InconclusiveRank { gap, required: required_gap });
    }
    Ok(cert)
}

/// Certified kernel of `m` (columns are inputs) plus an orthonormal kernel basis.
pub fn certified_kernel(m: &CMat, rel_threshold: f64, required_gap: f64) -> Result<(RankCertificate, Vec<DVector<C64>>)> {
    let cols = m.ncols();
    if cols == 0 {
        let cert = certify(&[], 0, rel_threshold, required_gap)?;
        return Ok((cert, Vec::new()));
    }
    if m.nrows() < cols {
        // pad to a square matrix so that every input direction has a singular value
        let mut padded = CMat::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        return certified_kernel(&padded, rel_threshold, required_gap);
    }
    let svd = m.clone().svd(false, true);
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let cert = certify(&sv, cols, rel_threshold, required_gap)?;
    let vt = svd.v_t.expect("requested V");
    let mut basis = Vec::new();
    for (i, &s) in sv.iter().enumerate() {
        if s < cert.threshold || cert.sigma_max == 0.0 {
            basis.push(DVector::from_iterator(cols, vt.row(i).iter().map(|z| z.conj())));
        }
    }
    Ok((cert, basis))
}

/// Singular values of a diagonal operator: the moduli of its entries.
pub fn diagonal_singular_values(diag: &[C64]) -> Vec<f64> {
    diag.iter().map(|z| z.norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clear_gap_is_certified() {
        let c = certify(&[3.0, 2.0, 1e-14], 3, 1e-6, 100.0).unwrap();
        assert_eq!(c.kernel_dim, 1);
        assert!(c.gap > 1e5);
    }

    #[test]
    fn ambiguous_gap_aborts() {
        assert!(matches!(certify(&[1.0, 5e-5, 1e-9], 3, 1e-6, 100.0), Err(Error::InconclusiveRank { .. })));
    }

    #[test]
    fn kernel_of_rank_one_matrix() {
        let m = CMat::from_fn(4, 3, |i, j| C64::new((i + 1) as f64 * (j + 1) as f64, 0.0));
        let (c, basis) = certified_kernel(&m, 1e-6, 100.0).unwrap();
        assert_eq!(c.kernel_dim, 2);
        for v in basis {
            assert!((&m * v).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let m = CMat::zeros(3, 2);
        let (c, basis) = certified_kernel(&m, 1e-6, 100.0).unwrap();
        assert_eq!(c.kernel_dim, 2);
        assert_eq!(basis.len(), 2);
    }
}
