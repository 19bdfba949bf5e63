use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::estimators::{augmented_erm_fit, erm_fit, AveragedLoss, FitOptions, LossModel};
use crate::group::FiniteGroup;
use crate::linalg;
use crate::orbit::OrbitAverager;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub n: usize,
    pub reps: usize,
    pub lambda: f64,
    /// Monte Carlo `E‖θ̂ - θ₀‖²` for plain ERM, with its standard error.
    pub lhs_plain: f64,
    pub lhs_plain_stderr: f64,
    pub lhs_aug: f64,
    pub lhs_aug_stderr: f64,
    pub trace_grad_cov: f64,
    pub trace_avg_grad_cov: f64,
    /// `4 tr Cov ∇L / (λ² n)`.
    pub rhs_bound: f64,
    /// `4 tr Cov ∇L̄ / (λ² n)`.
    pub rhs_aug_bound: f64,
}

impl BoundCheck {
    pub fn plain_holds(&self) -> bool {
        self.lhs_plain <= self.rhs_bound + 3.0 * self.lhs_plain_stderr
    }

    pub fn aug_holds(&self) -> bool {
        self.lhs_aug <= self.rhs_aug_bound + 3.0 * self.lhs_aug_stderr
    }
}

/// Compare the Monte Carlo squared error of plain and augmented ERM with the
/// strong-convexity variance bounds. Gradient covariance traces are estimated
/// from `n_trace` fresh draws.
#[allow(clippy::too_many_arguments)]
pub fn strong_convexity_bound_check<L, R, S>(
    loss: &L,
    group: &FiniteGroup,
    theta0: &DVector<f64>,
    mut sampler: S,
    n: usize,
    reps: usize,
    n_trace: usize,
    rng: &mut R,
) -> Result<BoundCheck>
where
    L: LossModel + ?Sized,
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    let lambda = loss.strong_convexity();
    if lambda <= 0.0 {
        return Err(AugError::InvalidConfig("loss must be strongly convex".into()));
    }
    if n == 0 || reps < 2 || n_trace < 2 {
        return Err(AugError::InvalidConfig("need n >= 1, reps >= 2 and n_trace >= 2".into()));
    }
    let avg = OrbitAverager::exact(group)?;
    let opts = FitOptions::default();
    let mut plain = Vec::with_capacity(reps);
    let mut aug = Vec::with_capacity(reps);
    for _ in 0..reps {
        let data: Vec<DVector<f64>> = (0..n).map(|_| sampler(rng)).collect();
        let a = erm_fit(loss, &data, theta0, &opts)?;
        let b = augmented_erm_fit(loss, &avg, &data, theta0, &opts)?;
        plain.push((a.theta_hat - theta0).norm_squared());
        aug.push((b.theta_hat - theta0).norm_squared());
    }
    let averaged = AveragedLoss::new(loss, group.elements()?.to_vec());
    let mut raw_grads = Vec::with_capacity(n_trace);
    let mut avg_grads = Vec::with_capacity(n_trace);
    for _ in 0..n_trace {
        let x = sampler(rng);
        raw_grads.push(loss.grad(theta0, &x));
        avg_grads.push(averaged.grad(theta0, &x));
    }
    let trace_grad_cov = linalg::covariance(&raw_grads)?.trace();
    let trace_avg_grad_cov = linalg::covariance(&avg_grads)?.trace();
    let scale = 4.0 / (lambda * lambda * n as f64);
    let (lhs_plain, lhs_plain_stderr) = linalg::mean_stderr(&plain);
    let (lhs_aug, lhs_aug_stderr) = linalg::mean_stderr(&aug);
    Ok(BoundCheck {
        n,
        reps,
        lambda,
        lhs_plain,
        lhs_plain_stderr,
        lhs_aug,
        lhs_aug_stderr,
        trace_grad_cov,
        trace_avg_grad_cov,
        rhs_bound: scale * trace_grad_cov,
        rhs_aug_bound: scale * trace_avg_grad_cov,
    })
}
