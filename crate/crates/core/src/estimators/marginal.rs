use nalgebra::DVector;

use super::EstimatorResult;
use crate::error::{AugError, Result};

fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `sum_i log(½[φ(x_i - θ) + φ(x_i + θ)])` for the unit-variance sign mixture.
pub fn marginal_log_likelihood(data: &[f64], theta: f64) -> f64 {
    let c = 0.5 * (2.0 * std::f64::consts::PI).ln();
    data.iter().map(|&x| -0.5 * x * x - 0.5 * theta * theta + log_cosh(x * theta) - c).sum()
}

/// Maximum marginal likelihood under the sign group. The likelihood is even
/// in `θ`, so the nonnegative maximiser is returned. A grid over
/// `[0, max|x| + 1]` brackets the maximum, golden-section search refines it.
pub fn marginal_mle_1d(data: &[f64], tol: f64) -> Result<EstimatorResult> {
    if data.is_empty() {
        return Err(AugError::EmptyInput("no data".into()));
    }
    let ll = |t: f64| marginal_log_likelihood(data, t);
    let upper = data.iter().fold(0.0_f64, |a, x| a.max(x.abs())) + 1.0;
    let n_grid = 2000;
    let h = upper / n_grid as f64;
    let best = (0..=n_grid).map(|i| i as f64 * h).max_by(|a, b| ll(*a).partial_cmp(&ll(*b)).unwrap()).unwrap();
    let (mut a, mut b) = ((best - h).max(0.0), best + h);
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut iterations = 0;
    while b - a > tol && iterations < 500 {
        iterations += 1;
        if ll(c) > ll(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let mut theta = 0.5 * (a + b);
    // the boundary wins whenever it is at least as good as the interior point
    if ll(0.0) >= ll(theta) {
        theta = 0.0;
    }
    let eps = 1e-6;
    let slope = (ll(theta + eps) - ll((theta - eps).max(0.0))) / (theta + eps - (theta - eps).max(0.0));
    Ok(EstimatorResult {
        theta_hat: DVector::from_element(1, theta),
        iterations,
        converged: b - a <= tol,
        objective: -ll(theta) / data.len() as f64,
        grad_norm: if theta == 0.0 { slope.max(0.0) } else { slope.abs() } / data.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_argmax(data: &[f64], hi: f64) -> f64 {
        let n = 200_000;
        (0..=n)
            .map(|i| hi * i as f64 / n as f64)
            .max_by(|a, b| marginal_log_likelihood(data, *a).partial_cmp(&marginal_log_likelihood(data, *b)).unwrap())
            .unwrap()
    }

    #[test]
    fn zeros_give_zero() {
        let r = marginal_mle_1d(&[0.0; 10], 1e-10).unwrap();
        assert_eq!(r.theta_hat[0], 0.0);
    }

    #[test]
    fn symmetric_pair_at_five() {
        let data: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 5.0 } else { -5.0 }).collect();
        let r = marginal_mle_1d(&data, 1e-10).unwrap();
        let oracle = grid_argmax(&data, 10.0);
        assert!((r.theta_hat[0] - oracle).abs() < 1e-3);
        assert!((r.theta_hat[0] - 5.0).abs() < 1e-3);
    }

    #[test]
    fn small_values_hit_boundary() {
        let data = [0.3, -0.3, 0.5, -0.5, 0.1, -0.1];
        let r = marginal_mle_1d(&data, 1e-10).unwrap();
        assert_eq!(grid_argmax(&data, 3.0), 0.0);
        assert_eq!(r.theta_hat[0], 0.0);
    }

    #[test]
    fn likelihood_is_even() {
        let data = [1.0, -2.0, 0.5];
        assert!((marginal_log_likelihood(&data, 1.3) - marginal_log_likelihood(&data, -1.3)).abs() < 1e-12);
    }
}
