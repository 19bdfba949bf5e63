use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use super::report::ExperimentReport;
use super::{check_group_dim, run_reps};
use crate::error::{AugError, Result};
use crate::estimators::SquaredLoss;
use crate::group::FiniteGroup;
use crate::linalg;
use crate::sgd::{augmented_sgd, LrSchedule, SgdConfig};

#[derive(Debug, Clone)]
pub struct SgdExperimentConfig {
    pub d: usize,
    pub n: usize,
    /// Data are `N(shift·𝟙, I_d)`.
    pub shift: f64,
    pub schedule: LrSchedule,
    pub batch: usize,
    pub steps: usize,
    /// Defaults to the sign group on `d` coordinates.
    pub group: Option<FiniteGroup>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SgdExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            n: 100,
            shift: 1.0,
            schedule: LrSchedule::Constant(0.1),
            batch: 10,
            steps: 2000,
            group: None,
            reps: 10,
            seed: 0,
        }
    }
}

/// Augmented SGD on `‖θ - x‖²` against the exact augmented minimiser
/// `𝒢 x̄`; reports the distance of the last iterate and of the average over
/// the second half of the run.
pub fn run_sgd_experiment(cfg: &SgdExperimentConfig) -> Result<ExperimentReport> {
    if cfg.d == 0 || cfg.n == 0 || cfg.steps == 0 {
        return Err(AugError::InvalidConfig("d, n and steps must be positive".into()));
    }
    let group = match &cfg.group {
        Some(g) => g.clone(),
        None => FiniteGroup::sign(cfg.d)?,
    };
    check_group_dim(&group, cfg.d)?;
    let g_mean = group.mean_matrix()?;
    let loss = SquaredLoss { dim: cfg.d };
    let per_rep = run_reps(cfg.reps, cfg.seed, |rep, rng| {
        let data: Vec<DVector<f64>> = (0..cfg.n)
            .map(|_| {
                DVector::from_fn(cfg.d, |_, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    cfg.shift + z
                })
            })
            .collect();
        let target = &g_mean * linalg::mean_vector(&data)?;
        let sgd_cfg = SgdConfig {
            schedule: cfg.schedule,
            batch_size: cfg.batch,
            max_steps: cfg.steps,
            tol: 0.0,
            seed: cfg.seed.wrapping_add(rep as u64),
            record_iterates: true,
        };
        let r = augmented_sgd(&loss, &group, &data, &DVector::zeros(cfg.d), &sgd_cfg)?;
        let tail = &r.iterates[r.iterates.len() / 2..];
        let tail_avg = linalg::mean_vector(tail)?;
        Ok([(&r.result.theta_hat - &target).norm(), (tail_avg - &target).norm(), if r.diverged { 1.0 } else { 0.0 }])
    })?;
    let schedule = match cfg.schedule {
        LrSchedule::Constant(eta) => json!({"constant": eta}),
        LrSchedule::InverseTime { eta0, t0 } => json!({"inverse_time": {"eta0": eta0, "t0": t0}}),
    };
    let mut report = ExperimentReport::new(
        "sgd",
        json!({"d": cfg.d, "n": cfg.n, "shift": cfg.shift, "schedule": schedule, "batch": cfg.batch,
               "steps": cfg.steps, "group": group.kind().to_string(), "reps": cfg.reps, "seed": cfg.seed}),
    );
    let key = format!("d={}", cfg.d);
    for (rep, v) in per_rep.iter().enumerate() {
        report.push(rep, &key, "dist_last", v[0]);
        report.push(rep, &key, "dist_tail_average", v[1]);
        report.push(rep, &key, "diverged", v[2]);
    }
    report.finalize()
}
