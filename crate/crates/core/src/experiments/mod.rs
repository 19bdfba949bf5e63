//! Desk-scale numerical experiments. Each runner is a pure function of its
//! config and seed; replicates run in parallel on derived streams and are
//! collected in replicate order, so output bytes do not depend on scheduling.

mod circ;
mod gaussian;
mod linreg;
mod relu;
mod report;
mod sgd;
mod sphere;

pub use circ::{run_circular_experiment, CircConfig};
pub use gaussian::{run_flip_experiment, run_poisson_experiment, FlipConfig, PoissonConfig};
pub use linreg::{run_linreg_experiment, Design, LinregConfig};
pub use relu::{
    antipodal_cap_data, relu_margin_lambda, run_relu_gd_experiment, train_relu_gd, ReluGdConfig, ReluNet, ReluTraining,
};
pub use report::{DerivedStat, ExperimentReport, ReportRow, SummaryStat};
pub use sgd::{run_sgd_experiment, SgdExperimentConfig};
pub use sphere::{run_spherical_density, SphereConfig, SphereSampler};

use rayon::prelude::*;

use crate::error::{AugError, Result};
use crate::group::FiniteGroup;
use crate::rng::{derived_rng, AugRng};

/// Runs `f(rep, rng)` for every replicate on `derived_rng(seed, rep + 1)`.
pub(crate) fn run_reps<T, F>(reps: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut AugRng) -> Result<T> + Sync,
{
    if reps == 0 {
        return Err(AugError::InvalidConfig("reps must be positive".into()));
    }
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = derived_rng(seed, r as u64 + 1);
            f(r, &mut rng)
        })
        .collect()
}

/// Parses `kind:dim` group specs such as `flip:10`, `sign:3`, `perm:5`,
/// `subsample:6` (pairs, r = 2) or `subsample:6,3`.
pub fn parse_group_spec(spec: &str) -> Result<FiniteGroup> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| AugError::InvalidConfig(format!("group spec {spec:?} must look like kind:dim")))?;
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| AugError::InvalidConfig(format!("bad number {s:?} in group spec {spec:?}")))
    };
    match kind.trim() {
        "shift" | "cyclic" => FiniteGroup::cyclic_shift(num(arg)?),
        "flip" => FiniteGroup::flip(num(arg)?),
        "sign" => FiniteGroup::sign(num(arg)?),
        "perm" | "permutation" => FiniteGroup::permutation(num(arg)?),
        "orthogonal" => FiniteGroup::orthogonal(num(arg)?),
        "trivial" => FiniteGroup::trivial(num(arg)?),
        "subsample" => match arg.split_once(',') {
            Some((n, r)) => FiniteGroup::subsample(num(n)?, num(r)?),
            None => FiniteGroup::subsample(num(arg)?, 2),
        },
        other => Err(AugError::InvalidConfig(format!("unknown group kind {other:?}"))),
    }
}

pub(crate) fn check_group_dim(group: &FiniteGroup, d: usize) -> Result<()> {
    if group.dim() != d {
        return Err(AugError::DimensionMismatch { expected: d, got: group.dim() });
    }
    Ok(())
}
