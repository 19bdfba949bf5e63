use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use super::report::ExperimentReport;
use super::{check_group_dim, run_reps};
use crate::error::{AugError, Result};
use crate::estimators::{linreg_risks, linreg_trio};
use crate::group::FiniteGroup;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// `X = I_p`.
    Identity,
    /// `n × p` standard Gaussian entries, drawn once from the seed.
    Random { n: usize },
}

#[derive(Debug, Clone)]
pub struct LinregConfig {
    pub p: usize,
    pub design: Design,
    pub gamma: f64,
    pub reps: usize,
    pub seed: u64,
    /// Defaults to the permutation group on the `p` features.
    pub group: Option<FiniteGroup>,
}

/// Closed-form risks of ERM, the averaged augmentation distribution and
/// constrained ERM, alongside their Monte Carlo counterparts with an
/// invariant `β = 𝒢 𝟙`.
pub fn run_linreg_experiment(cfg: &LinregConfig) -> Result<ExperimentReport> {
    let p = cfg.p;
    if p < 2 {
        return Err(AugError::InvalidConfig(format!("need p >= 2, got {p}")));
    }
    if !(cfg.gamma >= 0.0 && cfg.gamma.is_finite()) {
        return Err(AugError::InvalidConfig(format!("noise level must be >= 0, got {}", cfg.gamma)));
    }
    let group = match &cfg.group {
        Some(g) => g.clone(),
        None => FiniteGroup::permutation(p)?,
    };
    check_group_dim(&group, p)?;
    let x = match cfg.design {
        Design::Identity => DMatrix::identity(p, p),
        Design::Random { n } => {
            if n < p {
                return Err(AugError::InvalidConfig(format!("random design needs n >= p, got n = {n}")));
            }
            let mut rng = rng_from_seed(cfg.seed);
            DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
        }
    };
    let beta = group.mean_matrix()? * DVector::from_element(p, 1.0);
    let risks = linreg_risks(&x, &group, cfg.gamma)?;
    let signal = &x * &beta;
    let per_rep = run_reps(cfg.reps, cfg.seed, |_, rng| {
        let y = DVector::from_fn(x.nrows(), |i, _| {
            let z: f64 = StandardNormal.sample(rng);
            signal[i] + cfg.gamma * z
        });
        let t = linreg_trio(&x, &y, &group, cfg.gamma)?;
        let err = |b: &DVector<f64>| (b - &beta).norm_squared();
        Ok([err(&t.beta_erm), err(&t.beta_adist), err(&t.beta_cerm)])
    })?;
    let design = match cfg.design {
        Design::Identity => "identity".to_string(),
        Design::Random { n } => format!("random:{n}"),
    };
    let mut report = ExperimentReport::new(
        "linreg",
        json!({"p": p, "design": design, "gamma": cfg.gamma, "reps": cfg.reps, "seed": cfg.seed,
               "group": group.kind().to_string()}),
    );
    let key = format!("p={p}");
    for (rep, v) in per_rep.iter().enumerate() {
        report.push(rep, &key, "loss_erm", v[0]);
        report.push(rep, &key, "loss_adist", v[1]);
        report.push(rep, &key, "loss_cerm", v[2]);
    }
    report.push_derived(&key, "risk_erm", risks.erm);
    report.push_derived(&key, "risk_adist", risks.adist);
    report.push_derived(&key, "risk_cerm", risks.cerm);
    report.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(design: Design, gamma: f64) -> LinregConfig {
        LinregConfig { p: 4, design, gamma, reps: 50, seed: 2, group: None }
    }

    #[test]
    fn zero_noise_gives_zero_risk() {
        let r = run_linreg_experiment(&cfg(Design::Random { n: 12 }, 0.0)).unwrap();
        for m in ["risk_erm", "risk_adist", "risk_cerm"] {
            assert_eq!(r.derived_value("p=4", m), Some(0.0));
        }
        assert!(r.metric_values("p=4", "loss_erm").iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn random_design_adist_not_worse() {
        let r = run_linreg_experiment(&cfg(Design::Random { n: 12 }, 1.0)).unwrap();
        assert!(r.derived_value("p=4", "risk_adist").unwrap() <= r.derived_value("p=4", "risk_erm").unwrap());
    }

    #[test]
    fn config_errors() {
        assert!(run_linreg_experiment(&LinregConfig { p: 1, ..cfg(Design::Identity, 1.0) }).is_err());
        assert!(run_linreg_experiment(&cfg(Design::Random { n: 2 }, 1.0)).is_err());
        assert!(run_linreg_experiment(&cfg(Design::Identity, -1.0)).is_err());
    }
}
