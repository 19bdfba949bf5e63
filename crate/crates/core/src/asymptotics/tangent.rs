use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::estimators::LossModel;
use crate::group::FiniteGroup;
use crate::linalg;

/// `P = B (BᵀB)⁻¹ Bᵀ` and `I - P`.
pub fn tangent_projection(basis: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = basis.nrows();
    if basis.ncols() == 0 {
        return Ok((DMatrix::zeros(p, p), DMatrix::identity(p, p)));
    }
    if linalg::rank(basis, 1e-10) < basis.ncols() {
        return Err(AugError::Singular("tangent basis is rank deficient".into()));
    }
    let gram = linalg::checked_inverse(&(basis.transpose() * basis), "BᵀB")?;
    let proj = basis * gram * basis.transpose();
    let perp = DMatrix::identity(p, p) - &proj;
    Ok((proj, perp))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentialCheck {
    /// `max_{x,g} ‖P ∇ℓ(gx) - P ∇ℓ(x)‖`.
    pub invariance_residual: f64,
    pub within_cov: DMatrix<f64>,
    /// Within-orbit covariance of the normal component `P⊥ ∇ℓ`.
    pub within_cov_perp: DMatrix<f64>,
    pub covariance_residual: f64,
}

/// Checks that the tangential part of the score is constant on orbits, so the
/// within-orbit covariance lives entirely in the normal component.
pub fn tangential_decomposition_check<L: LossModel + ?Sized>(
    loss: &L,
    group: &FiniteGroup,
    theta0: &DVector<f64>,
    basis: &DMatrix<f64>,
    samples: &[DVector<f64>],
) -> Result<TangentialCheck> {
    if samples.is_empty() {
        return Err(AugError::EmptyInput("no samples".into()));
    }
    let (proj, perp) = tangent_projection(basis)?;
    let elems = group.elements()?;
    let p = loss.param_dim();
    let mut residual = 0.0_f64;
    let mut within = DMatrix::zeros(p, p);
    let mut within_perp = DMatrix::zeros(p, p);
    for x in samples {
        let base = &proj * loss.grad(theta0, x);
        let mut grads = Vec::with_capacity(elems.len());
        for g in elems {
            let gr = loss.grad(theta0, &g.apply(x)?);
            residual = residual.max((&proj * &gr - &base).norm());
            grads.push(gr);
        }
        let perp_grads: Vec<DVector<f64>> = grads.iter().map(|gr| &perp * gr).collect();
        within += linalg::covariance(&grads)?;
        within_perp += linalg::covariance(&perp_grads)?;
    }
    let n = samples.len() as f64;
    within /= n;
    within_perp /= n;
    let covariance_residual = linalg::max_abs(&(&within - &within_perp));
    Ok(TangentialCheck {
        invariance_residual: residual,
        within_cov: within,
        within_cov_perp: within_perp,
        covariance_residual,
    })
}
