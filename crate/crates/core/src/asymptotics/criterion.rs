use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub m: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

/// Block matrix
/// `[[ (I₁₁)⁻¹, (I⁻¹)_{1·} ], [ (I⁻¹)_{·1}, Ī⁻¹ ]]`
/// for `θ = (θ₁, θ₂)` with `θ₁` the first `q1` coordinates. PSD means the
/// augmented MLE of `θ₁` is asymptotically at least as efficient as the
/// MLE constrained to `θ₂ = 0`.
pub fn amle_cmle_criterion(info: &DMatrix<f64>, avg_info: &DMatrix<f64>, q1: usize) -> Result<CriterionResult> {
    let p = info.nrows();
    if !info.is_square() || avg_info.shape() != (p, p) {
        return Err(AugError::InvalidDimension("information matrices must be square and equal size".into()));
    }
    if q1 == 0 || q1 > p {
        return Err(AugError::InvalidConfig(format!("block size {q1} must lie in 1..={p}")));
    }
    let info_inv = linalg::checked_inverse(info, "I")?;
    let i11_inv = linalg::checked_inverse(&info.view((0, 0), (q1, q1)).into_owned(), "I₁₁")?;
    let avg_inv = linalg::checked_inverse(avg_info, "Ī")?;
    let size = q1 + p;
    let mut m = DMatrix::zeros(size, size);
    m.view_mut((0, 0), (q1, q1)).copy_from(&i11_inv);
    let top = info_inv.rows(0, q1).into_owned();
    m.view_mut((0, q1), (q1, p)).copy_from(&top);
    m.view_mut((q1, 0), (p, q1)).copy_from(&top.transpose());
    m.view_mut((q1, q1), (p, p)).copy_from(&avg_inv);
    let min_eigenvalue = linalg::min_eigenvalue(&m);
    Ok(CriterionResult { m, min_eigenvalue, is_psd: min_eigenvalue >= -1e-10 })
}
