//! Point estimators: plain and augmented ERM, likelihood-based estimators
//! under invariance, estimator averaging over transformed datasets,
//! U-statistics and the linear-regression trio.

mod augment;
mod erm;
mod exp_family;
mod linreg;
mod loss;
mod marginal;
mod ustat;

use nalgebra::DVector;
use serde::Serialize;

pub use augment::{augment_estimator, DatasetAveraging, DatasetGroup};
pub use erm::{augmented_erm_fit, erm_fit, expand_dataset, FitOptions};
pub use exp_family::{gaussian_mean_estimators, poisson_estimators, GaussianMeanEstimates, PoissonEstimates};
pub use linreg::{linreg_risks, linreg_trio, LinregRisks, LinregTrio};
pub use loss::{fd_hessian, AveragedLoss, GaussianLocation, LeastSquares, LogisticLoss1d, LossModel, SquaredLoss};
pub use marginal::{marginal_log_likelihood, marginal_mle_1d};
pub use ustat::u_statistic;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub theta_hat: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub grad_norm: f64,
}
