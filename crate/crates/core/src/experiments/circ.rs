use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use super::report::ExperimentReport;
use super::run_reps;
use crate::asymptotics::{circulant, TENSOR_CUTOFF};
use crate::error::{AugError, Result};

#[derive(Debug, Clone)]
pub struct CircConfig {
    pub dims: Vec<usize>,
    /// Hidden width; it scales both traces and cancels in the ratio.
    pub p: usize,
    pub reps: usize,
    pub seed: u64,
}

/// `(p tr((xxᵀ)²), p tr((C_x C_xᵀ)²) / d²)` for one draw.
pub fn circular_traces(x: &DVector<f64>, p: usize) -> (f64, f64) {
    let d = x.len() as f64;
    let plain = p as f64 * x.norm_squared().powi(2);
    let c = circulant(x);
    let s = &c * c.transpose();
    let aug = p as f64 * (&s * &s).trace() / (d * d);
    (plain, aug)
}

/// Exact `E p‖x‖⁴ / E p tr((CCᵀ)²)/d²` for `x ~ N(0, I_d)`: the DFT
/// coefficients are complex Gaussian except at frequency 0 (and d/2 for
/// even d), which gives `d(d+2) / (2d + r)` with `r` real frequencies.
pub fn expected_circular_ratio(d: usize) -> f64 {
    let r = if d.is_multiple_of(2) { 2.0 } else { 1.0 };
    let d = d as f64;
    d * (d + 2.0) / (2.0 * d + r)
}

/// Trace-of-Fisher ratio between the plain and circularly augmented
/// two-layer quadratic network at `W = I`, per replicate and dimension.
pub fn run_circular_experiment(cfg: &CircConfig) -> Result<ExperimentReport> {
    if cfg.dims.is_empty() {
        return Err(AugError::InvalidConfig("empty dimension grid".into()));
    }
    if cfg.p == 0 {
        return Err(AugError::InvalidConfig("width p must be positive".into()));
    }
    if let Some(&d) = cfg.dims.iter().find(|&&d| d == 0 || d > TENSOR_CUTOFF) {
        return Err(AugError::InvalidConfig(format!("dimension {d} outside 1..={TENSOR_CUTOFF}")));
    }
    let per_rep = run_reps(cfg.reps, cfg.seed, |_, rng| {
        Ok(cfg
            .dims
            .iter()
            .map(|&d| {
                let x = DVector::from_fn(d, |_, _| -> f64 { StandardNormal.sample(rng) });
                circular_traces(&x, cfg.p)
            })
            .collect::<Vec<_>>())
    })?;
    let mut report =
        ExperimentReport::new("circ", json!({"dims": cfg.dims, "p": cfg.p, "reps": cfg.reps, "seed": cfg.seed}));
    for (di, &d) in cfg.dims.iter().enumerate() {
        let key = format!("d={d}");
        let (mut sum_plain, mut sum_aug, mut sum_ratio) = (0.0, 0.0, 0.0);
        for (rep, vals) in per_rep.iter().enumerate() {
            let (plain, aug) = vals[di];
            report.push(rep, &key, "plain_trace", plain);
            report.push(rep, &key, "aug_trace", aug);
            report.push(rep, &key, "ratio", plain / aug);
            sum_plain += plain;
            sum_aug += aug;
            sum_ratio += plain / aug;
        }
        report.push_derived(&key, "ratio_of_means", sum_plain / sum_aug);
        report.push_derived(&key, "mean_of_ratios", sum_ratio / per_rep.len() as f64);
        report.push_derived(&key, "expected_ratio", expected_circular_ratio(d));
        report.push_derived(&key, "half_dimension", d as f64 / 2.0);
    }
    report.finalize()
}
