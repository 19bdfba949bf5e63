//! Minibatch SGD on the augmented empirical risk: every selected example gets
//! a fresh uniformly drawn transform at every step.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::estimators::{EstimatorResult, LossModel};
use crate::group::FiniteGroup;
use crate::rng::stream_rng;

/// Iterates with norm above this are declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Stream ids: batch selection and augmentation draws never share state, so a
/// trivial group reproduces plain SGD exactly.
pub const BATCH_STREAM: u64 = 0;
pub const AUGMENT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LrSchedule {
    Constant(f64),
    /// `eta0 / (1 + t / t0)` at step `t` (0-based).
    InverseTime {
        eta0: f64,
        t0: f64,
    },
}

impl LrSchedule {
    pub fn rate(&self, t: usize) -> f64 {
        match *self {
            LrSchedule::Constant(eta) => eta,
            LrSchedule::InverseTime { eta0, t0 } => eta0 / (1.0 + t as f64 / t0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LrSchedule::Constant(eta) => eta > 0.0 && eta.is_finite(),
            LrSchedule::InverseTime { eta0, t0 } => eta0 > 0.0 && t0 > 0.0 && eta0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(AugError::InvalidConfig(format!("learning rates must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SgdConfig {
    pub schedule: LrSchedule,
    pub batch_size: usize,
    pub max_steps: usize,
    /// Stop once the minibatch gradient norm falls to this value (0 disables).
    pub tol: f64,
    pub seed: u64,
    /// Keep every iterate in the result.
    pub record_iterates: bool,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            schedule: LrSchedule::Constant(0.1),
            batch_size: 1,
            max_steps: 1000,
            tol: 0.0,
            seed: 0,
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgdResult {
    pub result: EstimatorResult,
    pub diverged: bool,
    /// Minibatch loss (on the transformed examples) before each update.
    pub batch_losses: Vec<f64>,
    /// `θ_0, θ_1, ...` when requested.
    pub iterates: Vec<DVector<f64>>,
}

/// `θ_{t+1} = θ_t - η_t / |S_t| Σ_{i∈S_t} ∇L(θ_t, g_{i,t} x_i)`, with batches
/// drawn without replacement inside an epoch and reshuffled between epochs.
/// A trailing partial batch is dropped.
pub fn augmented_sgd<L: LossModel + ?Sized>(
    loss: &L,
    group: &FiniteGroup,
    data: &[DVector<f64>],
    init: &DVector<f64>,
    cfg: &SgdConfig,
) -> Result<SgdResult> {
    cfg.schedule.validate()?;
    let n = data.len();
    if n == 0 {
        return Err(AugError::EmptyInput("no data".into()));
    }
    if cfg.batch_size == 0 || cfg.batch_size > n {
        return Err(AugError::InvalidConfig(format!("batch size {} must lie in 1..={n}", cfg.batch_size)));
    }
    if init.len() != loss.param_dim() {
        return Err(AugError::DimensionMismatch { expected: loss.param_dim(), got: init.len() });
    }
    let mut batch_rng = stream_rng(cfg.seed, BATCH_STREAM);
    let mut aug_rng = stream_rng(cfg.seed, AUGMENT_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let per_epoch = n / cfg.batch_size;
    let mut theta = init.clone();
    let mut batch_losses = Vec::with_capacity(cfg.max_steps);
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(theta.clone());
    }
    let mut diverged = false;
    let mut grad_norm = f64::INFINITY;
    let mut steps = 0;
    for t in 0..cfg.max_steps {
        let slot = t % per_epoch;
        if slot == 0 {
            order.shuffle(&mut batch_rng);
        }
        let batch = &order[slot * cfg.batch_size..(slot + 1) * cfg.batch_size];
        let mut grad = DVector::zeros(theta.len());
        let mut batch_loss = 0.0;
        for &i in batch {
            let gx = group.haar_sample(&mut aug_rng).apply(&data[i])?;
            grad += loss.grad(&theta, &gx);
            batch_loss += loss.value(&theta, &gx);
        }
        let b = cfg.batch_size as f64;
        grad /= b;
        batch_losses.push(batch_loss / b);
        grad_norm = grad.norm();
        steps = t + 1;
        if cfg.tol > 0.0 && grad_norm <= cfg.tol {
            steps = t;
            break;
        }
        theta -= grad * cfg.schedule.rate(t);
        if cfg.record_iterates {
            iterates.push(theta.clone());
        }
        if !(theta.norm() <= DIVERGENCE_NORM) {
            diverged = true;
            break;
        }
    }
    let objective = batch_losses.last().copied().unwrap_or(f64::NAN);
    Ok(SgdResult {
        result: EstimatorResult {
            theta_hat: theta,
            iterations: steps,
            converged: !diverged && cfg.tol > 0.0 && grad_norm <= cfg.tol,
            objective,
            grad_norm,
        },
        diverged,
        batch_losses,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{augmented_erm_fit, FitOptions, SquaredLoss};
    use crate::orbit::OrbitAverager;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_data(n: usize, d: usize, shift: f64, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                DVector::from_fn(d, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    shift + z
                })
            })
            .collect()
    }

    #[test]
    fn sign_group_drives_to_zero() {
        let data = normal_data(50, 1, 2.0, 1);
        let g = FiniteGroup::sign(1).unwrap();
        let cfg = SgdConfig {
            schedule: LrSchedule::Constant(0.1),
            max_steps: 10_000,
            record_iterates: true,
            ..Default::default()
        };
        let r = augmented_sgd(&SquaredLoss { dim: 1 }, &g, &data, &DVector::zeros(1), &cfg).unwrap();
        // a constant step leaves stationary noise in the last iterate; the tail average settles
        let tail = &r.iterates[5_000..];
        let avg = tail.iter().map(|t| t[0]).sum::<f64>() / tail.len() as f64;
        assert!(avg.abs() < 0.05, "{avg}");
        // with eta_t = 1/(2(t+1)) the iterate is a running mean of transformed points
        let cfg = SgdConfig { schedule: LrSchedule::InverseTime { eta0: 0.5, t0: 1.0 }, batch_size: 10, ..cfg };
        let r = augmented_sgd(&SquaredLoss { dim: 1 }, &g, &data, &DVector::zeros(1), &cfg).unwrap();
        assert!(r.result.theta_hat[0].abs() < 0.05);
    }

    #[test]
    fn trivial_group_reproduces_plain_sgd() {
        let data = normal_data(20, 2, 0.5, 2);
        let g = FiniteGroup::trivial(2).unwrap();
        let cfg = SgdConfig { batch_size: 3, max_steps: 200, seed: 17, ..Default::default() };
        let loss = SquaredLoss { dim: 2 };
        let r = augmented_sgd(&loss, &g, &data, &DVector::zeros(2), &cfg).unwrap();

        // hand-rolled plain SGD on the same batch stream
        let mut rng = stream_rng(17, BATCH_STREAM);
        let mut order: Vec<usize> = (0..20).collect();
        let mut theta = DVector::zeros(2);
        for t in 0..200 {
            let slot = t % 6;
            if slot == 0 {
                order.shuffle(&mut rng);
            }
            let mut grad = DVector::zeros(2);
            for &i in &order[slot * 3..slot * 3 + 3] {
                grad += loss.grad(&theta, &data[i]);
            }
            theta -= grad / 3.0 * 0.1;
        }
        assert_eq!(r.result.theta_hat, theta);
    }

    #[test]
    fn flip_group_reaches_augmented_minimizer() {
        let data = normal_data(40, 2, 0.0, 3);
        let g = FiniteGroup::flip(2).unwrap();
        let loss = SquaredLoss { dim: 2 };
        let exact = augmented_erm_fit(
            &loss,
            &OrbitAverager::exact(&g).unwrap(),
            &data,
            &DVector::zeros(2),
            &FitOptions::default(),
        )
        .unwrap();
        let cfg = SgdConfig {
            schedule: LrSchedule::InverseTime { eta0: 0.25, t0: 50.0 },
            batch_size: 40,
            max_steps: 20_000,
            ..Default::default()
        };
        let r = augmented_sgd(&loss, &g, &data, &DVector::zeros(2), &cfg).unwrap();
        assert!((r.result.theta_hat - exact.theta_hat).norm() < 0.02);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = normal_data(30, 3, 1.0, 4);
        let g = FiniteGroup::cyclic_shift(3).unwrap();
        let cfg = SgdConfig { batch_size: 4, max_steps: 300, seed: 5, ..Default::default() };
        let a = augmented_sgd(&SquaredLoss { dim: 3 }, &g, &data, &DVector::zeros(3), &cfg).unwrap();
        let b = augmented_sgd(&SquaredLoss { dim: 3 }, &g, &data, &DVector::zeros(3), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_flagged_and_bad_config_rejected() {
        let data = normal_data(10, 1, 1.0, 5);
        let g = FiniteGroup::trivial(1).unwrap();
        let loss = SquaredLoss { dim: 1 };
        let cfg = SgdConfig { schedule: LrSchedule::Constant(5.0), max_steps: 500, ..Default::default() };
        let r = augmented_sgd(&loss, &g, &data, &DVector::from_element(1, 1.0), &cfg).unwrap();
        assert!(r.diverged);
        let bad = SgdConfig { batch_size: 11, ..Default::default() };
        assert!(augmented_sgd(&loss, &g, &data, &DVector::zeros(1), &bad).is_err());
        let bad = SgdConfig { schedule: LrSchedule::Constant(0.0), ..Default::default() };
        assert!(augmented_sgd(&loss, &g, &data, &DVector::zeros(1), &bad).is_err());
    }
}
