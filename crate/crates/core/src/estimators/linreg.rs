use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::group::FiniteGroup;
use crate::linalg;

/// Closed-form risks `E‖β̂ - β‖²` under noise variance `γ²` for an invariant `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinregRisks {
    pub erm: f64,
    pub adist: f64,
    pub cerm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinregTrio {
    pub beta_erm: DVector<f64>,
    pub beta_adist: DVector<f64>,
    pub beta_cerm: DVector<f64>,
    pub risks: LinregRisks,
}

fn invariant_basis(group: &FiniteGroup, p: usize) -> Result<DMatrix<f64>> {
    if group.dim() != p {
        return Err(AugError::DimensionMismatch { expected: p, got: group.dim() });
    }
    let b = group.invariant_subspace_basis()?;
    if b.ncols() == 0 {
        return Err(AugError::Capability("invariant subspace is trivial".into()));
    }
    Ok(b)
}

/// Risks from the singular value decomposition `X = U D Vᵀ`:
/// ERM `γ² Σ d_j⁻²`, aDIST `γ² Σ d_j⁻² ‖𝒢ᵀ v_j‖²`, cERM `γ² tr((BᵀXᵀXB)⁻¹)`.
pub fn linreg_risks(x: &DMatrix<f64>, group: &FiniteGroup, gamma: f64) -> Result<LinregRisks> {
    let p = x.ncols();
    let xtx = x.transpose() * x;
    linalg::checked_inverse(&xtx, "XᵀX")?;
    let g = group.mean_matrix()?;
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let g2 = gamma * gamma;
    let mut erm = 0.0;
    let mut adist = 0.0;
    for (j, &d) in svd.singular_values.iter().enumerate() {
        let vj = v_t.row(j).transpose();
        erm += 1.0 / (d * d);
        adist += (g.transpose() * vj).norm_squared() / (d * d);
    }
    let b = invariant_basis(group, p)?;
    let inner = linalg::checked_inverse(&(b.transpose() * &xtx * &b), "BᵀXᵀXB")?;
    Ok(LinregRisks { erm: g2 * erm, adist: g2 * adist, cerm: g2 * inner.trace() })
}

/// OLS, its group average `𝒢ᵀ β̂` and least squares restricted to the
/// invariant subspace.
pub fn linreg_trio(x: &DMatrix<f64>, y: &DVector<f64>, group: &FiniteGroup, gamma: f64) -> Result<LinregTrio> {
    if x.nrows() != y.len() {
        return Err(AugError::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let beta_erm = linalg::checked_inverse(&xtx, "XᵀX")? * &xty;
    let beta_adist = group.mean_matrix()?.transpose() * &beta_erm;
    let b = invariant_basis(group, x.ncols())?;
    let c = linalg::checked_inverse(&(b.transpose() * &xtx * &b), "BᵀXᵀXB")? * (b.transpose() * &xty);
    let beta_cerm = &b * c;
    let risks = linreg_risks(x, group, gamma)?;
    Ok(LinregTrio { beta_erm, beta_adist, beta_cerm, risks })
}
