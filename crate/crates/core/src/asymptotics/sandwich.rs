use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{AugError, Result};
use crate::estimators::{AveragedLoss, LossModel};
use crate::group::FiniteGroup;
use crate::linalg::{self, MatrixAccumulator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub v_hat: DMatrix<f64>,
    /// `E ∇L ∇Lᵀ`, estimated with each draw symmetrised over its orbit.
    pub grad_cov: DMatrix<f64>,
    /// `E_X Cov_g ∇L(θ, gX)`, exact over the enumerated group per draw.
    pub within_orbit_grad_cov: DMatrix<f64>,
    pub sigma0: DMatrix<f64>,
    pub sigma_g: DMatrix<f64>,
    /// Entrywise Monte Carlo standard errors, holding `V̂` fixed.
    pub sigma0_stderr: DMatrix<f64>,
    pub sigma_g_stderr: DMatrix<f64>,
    pub relative_efficiency: f64,
    pub n_mc: usize,
}

/// Monte Carlo sandwich covariances `Σ₀ = V⁻¹ E∇L∇Lᵀ V⁻¹` and
/// `Σ_G = Σ₀ - V⁻¹ E_X Cov_g ∇L V⁻¹` at `θ₀`.
pub fn estimate_sandwich<L, R, S>(
    loss: &L,
    group: &FiniteGroup,
    theta0: &DVector<f64>,
    mut sampler: S,
    n_mc: usize,
    rng: &mut R,
) -> Result<CovarianceReport>
where
    L: LossModel + ?Sized,
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    if n_mc < 2 {
        return Err(AugError::InvalidConfig("need at least two Monte Carlo draws".into()));
    }
    let elems = group.elements()?;
    let p = loss.param_dim();
    let k = elems.len() as f64;
    let mut v = DMatrix::zeros(p, p);
    let mut grad_cov = DMatrix::zeros(p, p);
    let mut within = DMatrix::zeros(p, p);
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let x = sampler(rng);
        let mut outer = DMatrix::zeros(p, p);
        let mut mean = DVector::zeros(p);
        for g in elems {
            let gx = g.apply(&x)?;
            let gr = loss.grad(theta0, &gx);
            v += loss.hessian_or_fd(theta0, &gx) / k;
            outer.ger(1.0 / k, &gr, &gr, 1.0);
            mean += gr / k;
        }
        let mean_outer = &mean * mean.transpose();
        within += &outer - &mean_outer;
        grad_cov += &outer;
        draws.push((outer, mean_outer));
    }
    let n = n_mc as f64;
    v /= n;
    grad_cov /= n;
    within /= n;
    let v_inv = linalg::checked_inverse(&v, "V̂")?;
    let sigma0 = &v_inv * &grad_cov * &v_inv;
    let sigma_g = &sigma0 - &v_inv * &within * &v_inv;
    let mut acc0 = MatrixAccumulator::new(p, p);
    let mut acc_g = MatrixAccumulator::new(p, p);
    for (outer, mean_outer) in &draws {
        acc0.push(&(&v_inv * outer * &v_inv));
        acc_g.push(&(&v_inv * mean_outer * &v_inv));
    }
    let re = sigma0.trace() / sigma_g.trace();
    Ok(CovarianceReport {
        v_hat: v,
        grad_cov,
        within_orbit_grad_cov: within,
        sigma0,
        sigma_g,
        sigma0_stderr: acc0.stderr(),
        sigma_g_stderr: acc_g.stderr(),
        relative_efficiency: re,
        n_mc,
    })
}

/// Which gradient outer products estimate the middle of the plug-in sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PluginVariant {
    /// Outer products of the orbit-averaged gradient; consistent for `Σ_G`.
    AveragedGradient,
    /// Outer products of the raw gradient; estimates `E∇L∇Lᵀ` instead.
    RawGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PluginInference {
    pub v_hat: DMatrix<f64>,
    pub i_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    /// `(lower, upper)` per coordinate.
    pub intervals: Vec<(f64, f64)>,
    pub z: f64,
}

/// Plug-in sandwich at the augmented estimate and per-coordinate normal
/// intervals `θ̂_j ± z sqrt(Σ̂_jj / n)`.
pub fn plugin_inference<L: LossModel + ?Sized>(
    loss: &L,
    group: &FiniteGroup,
    data: &[DVector<f64>],
    theta_hat: &DVector<f64>,
    alpha: f64,
    variant: PluginVariant,
) -> Result<PluginInference> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AugError::InvalidConfig(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if data.is_empty() {
        return Err(AugError::EmptyInput("no data".into()));
    }
    let averaged = AveragedLoss::new(loss, group.elements()?.to_vec());
    let p = loss.param_dim();
    let mut v = DMatrix::zeros(p, p);
    let mut i_hat = DMatrix::zeros(p, p);
    for x in data {
        v += averaged.hessian_or_fd(theta_hat, x);
        let g = match variant {
            PluginVariant::AveragedGradient => averaged.grad(theta_hat, x),
            PluginVariant::RawGradient => loss.grad(theta_hat, x),
        };
        i_hat.ger(1.0, &g, &g, 1.0);
    }
    let n = data.len() as f64;
    v /= n;
    i_hat /= n;
    let v_inv = linalg::checked_inverse(&v, "V̂")?;
    let sigma_hat = linalg::symmetrize(&(&v_inv * &i_hat * &v_inv));
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let intervals = (0..p)
        .map(|j| {
            let half = z * (sigma_hat[(j, j)].max(0.0) / n).sqrt();
            (theta_hat[j] - half, theta_hat[j] + half)
        })
        .collect();
    Ok(PluginInference { v_hat: v, i_hat, sigma_hat, intervals, z })
}
