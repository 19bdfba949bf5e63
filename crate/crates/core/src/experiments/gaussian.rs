use nalgebra::DVector;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde_json::json;

use super::report::ExperimentReport;
use super::{check_group_dim, run_reps};
use crate::error::{AugError, Result};
use crate::estimators::{gaussian_mean_estimators, poisson_estimators};
use crate::group::FiniteGroup;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone)]
pub struct FlipConfig {
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
    /// Flip-symmetric true mean; drawn from the seed when absent.
    pub mu: Option<DVector<f64>>,
}

fn symmetric_mean(d: usize, seed: u64) -> DVector<f64> {
    let mut rng = rng_from_seed(seed);
    let z = DVector::from_fn(d, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    DVector::from_fn(d, |j, _| 0.5 * (z[j] + z[d - 1 - j]))
}

/// One `N(μ, I_d)` observation per replicate; per-coordinate squared error
/// of the MLE, the flip-averaged aMLE and the constrained MLE.
pub fn run_flip_experiment(cfg: &FlipConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    if d == 0 || !d.is_multiple_of(2) {
        return Err(AugError::InvalidConfig(format!("flip experiment needs an even dimension, got {d}")));
    }
    let mu = match &cfg.mu {
        Some(m) if m.len() != d => return Err(AugError::DimensionMismatch { expected: d, got: m.len() }),
        Some(m) => {
            if (0..d).any(|j| (m[j] - m[d - 1 - j]).abs() > 1e-12) {
                return Err(AugError::InvalidConfig("true mean must be flip-symmetric".into()));
            }
            m.clone()
        }
        None => symmetric_mean(d, cfg.seed),
    };
    let group = FiniteGroup::flip(d)?;
    let per_rep = run_reps(cfg.reps, cfg.seed, |_, rng| {
        let x = DVector::from_fn(d, |j, _| {
            let z: f64 = StandardNormal.sample(rng);
            mu[j] + z
        });
        let est = gaussian_mean_estimators(&[x], &group)?;
        let mse = |v: &DVector<f64>| (v - &mu).norm_squared() / d as f64;
        Ok([mse(&est.mle), mse(&est.amle), mse(&est.cmle)])
    })?;
    let key = format!("d={d}");
    let mut report =
        ExperimentReport::new("flip", json!({"d": d, "reps": cfg.reps, "seed": cfg.seed, "n": 1, "mu": mu.as_slice()}));
    for (rep, [mle, amle, cmle]) in per_rep.iter().enumerate() {
        report.push(rep, &key, "mse_mle", *mle);
        report.push(rep, &key, "mse_amle", *amle);
        report.push(rep, &key, "mse_cmle", *cmle);
    }
    let mean = |i: usize| per_rep.iter().map(|r| r[i]).sum::<f64>() / per_rep.len() as f64;
    report.push_derived(&key, "relative_efficiency", mean(0) / mean(1));
    report.finalize()
}

#[derive(Debug, Clone)]
pub struct PoissonConfig {
    pub lambdas: Vec<f64>,
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
    /// Defaults to the flip group on `d` coordinates.
    pub group: Option<FiniteGroup>,
}

/// Independent `Poisson(λ)` coordinates (a flip-symmetric mean); MLE against
/// the aMLE from the group-averaged sufficient statistic.
pub fn run_poisson_experiment(cfg: &PoissonConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    if d == 0 {
        return Err(AugError::InvalidConfig("dimension must be positive".into()));
    }
    if cfg.lambdas.is_empty() {
        return Err(AugError::InvalidConfig("empty lambda grid".into()));
    }
    let dists: Vec<Poisson<f64>> = cfg
        .lambdas
        .iter()
        .map(|&l| Poisson::new(l).map_err(|_| AugError::InvalidConfig(format!("lambda must be positive, got {l}"))))
        .collect::<Result<_>>()?;
    let group = match &cfg.group {
        Some(g) => g.clone(),
        None => FiniteGroup::flip(d)?,
    };
    check_group_dim(&group, d)?;
    let per_rep = run_reps(cfg.reps, cfg.seed, |_, rng| {
        cfg.lambdas
            .iter()
            .zip(&dists)
            .map(|(&lambda, dist)| {
                let x = DVector::from_fn(d, |_, _| dist.sample(rng));
                let est = poisson_estimators(&[x], &group)?;
                let mse = |v: &DVector<f64>| v.iter().map(|t| (t - lambda).powi(2)).sum::<f64>() / d as f64;
                Ok((mse(&est.mle), mse(&est.amle)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = ExperimentReport::new(
        "poisson",
        json!({"lambdas": cfg.lambdas, "d": d, "reps": cfg.reps, "seed": cfg.seed, "group": group.kind().to_string()}),
    );
    for (li, lambda) in cfg.lambdas.iter().enumerate() {
        let key = format!("lambda={lambda}");
        for (rep, vals) in per_rep.iter().enumerate() {
            report.push(rep, &key, "mse_mle", vals[li].0);
            report.push(rep, &key, "mse_amle", vals[li].1);
        }
        let (a, b) = per_rep.iter().fold((0.0, 0.0), |(a, b), v| (a + v[li].0, b + v[li].1));
        report.push_derived(&key, "relative_efficiency", a / b);
    }
    report.finalize()
}
