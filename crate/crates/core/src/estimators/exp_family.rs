use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::group::FiniteGroup;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianMeanEstimates {
    pub mle: DVector<f64>,
    pub amle: DVector<f64>,
    pub cmle: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonEstimates {
    /// Mean-parameter MLE, the coordinatewise sample mean.
    pub mle: DVector<f64>,
    /// Mean parameter of the augmented MLE, `E_g` of the sufficient statistic.
    pub amle: DVector<f64>,
}

fn check_orthogonal(group: &FiniteGroup) -> Result<()> {
    for g in group.generators()? {
        let d = g.nrows();
        if linalg::max_abs(&(g.transpose() * &g - DMatrix::identity(d, d))) > 1e-10 {
            return Err(AugError::Capability("group does not act orthogonally".into()));
        }
    }
    Ok(())
}

fn sample_mean(data: &[DVector<f64>], dim: usize) -> Result<DVector<f64>> {
    let m = linalg::mean_vector(data)?;
    if m.len() != dim {
        return Err(AugError::DimensionMismatch { expected: dim, got: m.len() });
    }
    Ok(m)
}

/// MLE, augmented MLE and constrained MLE of a `N(θ, I)` mean. The aMLE uses
/// the group's mean matrix; the cMLE projects onto an SVD basis of the
/// invariant subspace, so the two routes are computed independently.
pub fn gaussian_mean_estimators(data: &[DVector<f64>], group: &FiniteGroup) -> Result<GaussianMeanEstimates> {
    check_orthogonal(group)?;
    let mle = sample_mean(data, group.dim())?;
    let amle = group.mean_matrix()? * &mle;
    let basis = group.invariant_subspace_basis()?;
    let cmle = &basis * (basis.transpose() * &mle);
    Ok(GaussianMeanEstimates { mle, amle, cmle })
}

/// Independent Poisson coordinates. The aMLE maps the group-averaged
/// sufficient statistic back through the inverse mean map, which here is the
/// identity on the mean scale; means are reported because a zero count has no
/// finite natural parameter.
pub fn poisson_estimators(data: &[DVector<f64>], group: &FiniteGroup) -> Result<PoissonEstimates> {
    if data.iter().flat_map(|x| x.iter()).any(|&v| v < 0.0 || v.fract() != 0.0) {
        return Err(AugError::InvalidConfig("Poisson data must be nonnegative integers".into()));
    }
    let mle = sample_mean(data, group.dim())?;
    let amle = group.mean_matrix()? * &mle;
    Ok(PoissonEstimates { mle, amle })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn sign_group_estimates_vanish() {
        let g = FiniteGroup::sign(1).unwrap();
        let est = gaussian_mean_estimators(&[v(&[1.7])], &g).unwrap();
        assert_eq!(est.amle[0], 0.0);
        assert_eq!(est.cmle[0], 0.0);
        assert_eq!(est.mle[0], 1.7);
    }

    #[test]
    fn flip_projects_to_symmetric_part() {
        let g = FiniteGroup::flip(2).unwrap();
        let est = gaussian_mean_estimators(&[v(&[1.0, 3.0])], &g).unwrap();
        assert_eq!(est.amle, v(&[2.0, 2.0]));
        assert!((est.cmle - v(&[2.0, 2.0])).amax() < 1e-12);
    }

    #[test]
    fn trivial_group_keeps_mle() {
        let g = FiniteGroup::trivial(3).unwrap();
        let est = gaussian_mean_estimators(&[v(&[1.0, 2.0, 3.0]), v(&[0.0, 0.0, 1.0])], &g).unwrap();
        assert_eq!(est.amle, est.mle);
        assert!((est.cmle - &est.mle).amax() < 1e-12);
    }

    #[test]
    fn non_orthogonal_action_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let g = FiniteGroup::from_matrices(2, vec![DMatrix::identity(2, 2), m], false).unwrap();
        assert!(matches!(gaussian_mean_estimators(&[v(&[1.0, 1.0])], &g), Err(AugError::Capability(_))));
    }

    #[test]
    fn poisson_amle_is_flip_symmetric() {
        let g = FiniteGroup::flip(4).unwrap();
        let est = poisson_estimators(&[v(&[0.0, 3.0, 1.0, 7.0])], &g).unwrap();
        for j in 0..4 {
            assert_eq!(est.amle[j], est.amle[3 - j]);
        }
        assert!(poisson_estimators(&[v(&[0.5, 1.0, 1.0, 1.0])], &g).is_err());
    }
}
