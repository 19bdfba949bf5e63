use nalgebra::DVector;

use super::loss::{AveragedLoss, LossModel};
use super::EstimatorResult;
use crate::error::{AugError, Result};
use crate::orbit::{AveragingMode, OrbitAverager};

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Gradient-norm tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Use the loss's closed-form minimiser when it has one.
    pub use_closed_form: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100_000, use_closed_form: true }
    }
}

fn risk<L: LossModel + ?Sized>(loss: &L, data: &[DVector<f64>], theta: &DVector<f64>) -> f64 {
    data.iter().map(|x| loss.value(theta, x)).sum::<f64>() / data.len() as f64
}

fn risk_grad<L: LossModel + ?Sized>(loss: &L, data: &[DVector<f64>], theta: &DVector<f64>) -> DVector<f64> {
    let mut acc = DVector::zeros(theta.len());
    for x in data {
        acc += loss.grad(theta, x);
    }
    acc / data.len() as f64
}

/// Minimise `R_n(θ) = mean_i L(θ, x_i)`: closed form when available, else
/// gradient descent with Armijo backtracking. Non-convergence is reported in
/// the result rather than as an error.
pub fn erm_fit<L: LossModel + ?Sized>(
    loss: &L,
    data: &[DVector<f64>],
    init: &DVector<f64>,
    opts: &FitOptions,
) -> Result<EstimatorResult> {
    if data.is_empty() {
        return Err(AugError::EmptyInput("no data to fit".into()));
    }
    if init.len() != loss.param_dim() {
        return Err(AugError::DimensionMismatch { expected: loss.param_dim(), got: init.len() });
    }
    if opts.use_closed_form {
        if let Some(theta) = loss.closed_form_minimizer(data) {
            let g = risk_grad(loss, data, &theta).norm();
            return Ok(EstimatorResult {
                objective: risk(loss, data, &theta),
                grad_norm: g,
                converged: true,
                iterations: 0,
                theta_hat: theta,
            });
        }
    }

    let mut theta = init.clone();
    let mut value = risk(loss, data, &theta);
    let mut grad = risk_grad(loss, data, &theta);
    let mut step = 1.0;
    let mut iterations = 0;
    while grad.norm() > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let gsq = grad.norm_squared();
        let mut accepted = None;
        let mut t = step;
        for _ in 0..80 {
            let cand = &theta - &grad * t;
            let v = risk(loss, data, &cand);
            if v <= value - 1e-4 * t * gsq {
                accepted = Some((cand, v, None));
                break;
            }
            // near the optimum the Armijo decrease drowns in rounding; accept
            // any step that shrinks the gradient without raising the risk
            if v <= value + 1e-14 * value.abs() {
                let g = risk_grad(loss, data, &cand);
                if g.norm() < grad.norm() {
                    accepted = Some((cand, v, Some(g)));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, v, g)) = accepted else { break };
        theta = cand;
        value = v;
        grad = g.unwrap_or_else(|| risk_grad(loss, data, &theta));
        step = (t * 2.0).min(1e6);
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(AugError::Numerical("gradient descent produced non-finite iterate".into()));
        }
    }
    let gn = grad.norm();
    Ok(EstimatorResult { theta_hat: theta, iterations, converged: gn <= opts.tol, objective: value, grad_norm: gn })
}

/// Each point replaced by its transforms under the averager (all elements in
/// exact mode, the `k` draws seeded by the point index otherwise). Every point
/// contributes the same number of copies, so ERM on the result minimises the
/// augmented risk.
pub fn expand_dataset(avg: &OrbitAverager, data: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::new();
    for (i, x) in data.iter().enumerate() {
        for g in avg.transforms_for(i) {
            out.push(g.apply(x)?);
        }
    }
    Ok(out)
}

/// Minimise the orbit-averaged risk `mean_i E_g L(θ, g x_i)`.
pub fn augmented_erm_fit<L: LossModel + ?Sized>(
    loss: &L,
    avg: &OrbitAverager,
    data: &[DVector<f64>],
    init: &DVector<f64>,
    opts: &FitOptions,
) -> Result<EstimatorResult> {
    match avg.mode() {
        AveragingMode::Exact => {
            let wrapped = AveragedLoss::new(loss, avg.group().elements()?.to_vec());
            if opts.use_closed_form {
                if let Some(theta) = loss.closed_form_minimizer(&expand_dataset(avg, data)?) {
                    let g = risk_grad(&wrapped, data, &theta).norm();
                    return Ok(EstimatorResult {
                        objective: risk(&wrapped, data, &theta),
                        grad_norm: g,
                        converged: true,
                        iterations: 0,
                        theta_hat: theta,
                    });
                }
            }
            erm_fit(&wrapped, data, init, &FitOptions { use_closed_form: false, ..*opts })
        }
        AveragingMode::MonteCarlo { .. } => erm_fit(loss, &expand_dataset(avg, data)?, init, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::loss::{GaussianLocation, LogisticLoss1d, SquaredLoss};
    use crate::group::FiniteGroup;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gd() -> FitOptions {
        FitOptions { use_closed_form: false, ..FitOptions::default() }
    }

    fn scalars(xs: &[f64]) -> Vec<DVector<f64>> {
        xs.iter().map(|&x| DVector::from_element(1, x)).collect()
    }

    #[test]
    fn squared_loss_gives_mean() {
        let data = scalars(&[1.0, 2.0, 6.0]);
        let init = DVector::zeros(1);
        for opts in [FitOptions::default(), gd()] {
            let r = erm_fit(&SquaredLoss { dim: 1 }, &data, &init, &opts).unwrap();
            assert!(r.converged);
            assert!((r.theta_hat[0] - 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_location_gives_sample_mean() {
        let mut rng = rng_from_seed(2);
        let data: Vec<_> = (0..50).map(|_| DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng))).collect();
        let mean = data.iter().fold(DVector::zeros(3), |a, x| a + x) / 50.0;
        let r = erm_fit(&GaussianLocation { dim: 3 }, &data, &DVector::zeros(3), &gd()).unwrap();
        assert!((r.theta_hat - mean).norm() < 1e-7);
    }

    #[test]
    fn logistic_matches_grid_search() {
        let mut rng = rng_from_seed(11);
        let data: Vec<_> = (0..100)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let p = 1.0 / (1.0 + (-1.5 * z).exp());
                let y = if rng.random_bool(p) { 1.0 } else { -1.0 };
                DVector::from_vec(vec![z, y])
            })
            .collect();
        let r = erm_fit(&LogisticLoss1d, &data, &DVector::zeros(1), &gd()).unwrap();
        assert!(r.converged);
        // grid oracle on the risk, refined twice
        let risk_at = |t: f64| data.iter().map(|x| LogisticLoss1d.value(&DVector::from_element(1, t), x)).sum::<f64>();
        let (mut lo, mut hi) = (-10.0, 10.0);
        let mut best = 0.0;
        for _ in 0..4 {
            let grid: Vec<f64> = (0..=2000).map(|i| lo + (hi - lo) * i as f64 / 2000.0).collect();
            best = *grid.iter().min_by(|a, b| risk_at(**a).partial_cmp(&risk_at(**b)).unwrap()).unwrap();
            let h = (hi - lo) / 2000.0;
            lo = best - 2.0 * h;
            hi = best + 2.0 * h;
        }
        assert!((r.theta_hat[0] - best).abs() < 1e-6);
    }

    #[test]
    fn sign_group_augmented_fit_is_zero() {
        let g = FiniteGroup::sign(1).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        let data = scalars(&[0.4, 2.5, 3.1]);
        for opts in [FitOptions::default(), gd()] {
            let r =
                augmented_erm_fit(&SquaredLoss { dim: 1 }, &avg, &data, &DVector::from_element(1, 1.0), &opts).unwrap();
            assert!(r.theta_hat[0].abs() < 1e-8);
        }
    }

    #[test]
    fn trivial_group_matches_plain_fit() {
        let g = FiniteGroup::trivial(1).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        let data: Vec<_> = [(0.5, 1.0), (-1.0, -1.0), (0.2, -1.0), (2.0, 1.0)]
            .iter()
            .map(|&(z, y)| DVector::from_vec(vec![z, y]))
            .collect();
        // logistic acts on (z, y); extend the trivial group by one coordinate
        let g2 = g.acting_on_features(1).unwrap();
        let avg2 = OrbitAverager::exact(&g2).unwrap();
        let a = augmented_erm_fit(&LogisticLoss1d, &avg2, &data, &DVector::zeros(1), &gd()).unwrap();
        let b = erm_fit(&LogisticLoss1d, &data, &DVector::zeros(1), &gd()).unwrap();
        assert!((a.theta_hat - b.theta_hat).norm() < 1e-8);
        let _ = avg;
    }

    #[test]
    fn flip_augmented_equals_expanded_fit() {
        let g = FiniteGroup::flip(2).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        let data: Vec<_> = [[1.0, 3.0], [0.0, -2.0], [4.0, 1.0]].iter().map(|r| DVector::from_row_slice(r)).collect();
        let mut expanded = data.clone();
        expanded.extend(data.iter().map(|x| DVector::from_vec(vec![x[1], x[0]])));
        let a = augmented_erm_fit(&SquaredLoss { dim: 2 }, &avg, &data, &DVector::zeros(2), &gd()).unwrap();
        let b = erm_fit(&SquaredLoss { dim: 2 }, &expanded, &DVector::zeros(2), &FitOptions::default()).unwrap();
        assert!((a.theta_hat - b.theta_hat).norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_init() {
        let data = scalars(&[1.0]);
        assert!(erm_fit(&SquaredLoss { dim: 1 }, &data, &DVector::zeros(2), &gd()).is_err());
    }
}
