use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;
use statrs::function::gamma::ln_gamma;

use super::report::ExperimentReport;
use super::run_reps;
use crate::error::{AugError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SphereSampler {
    /// `N(0, I_p)`.
    Gaussian,
    /// `R U` with `U` uniform on the sphere and `R` uniform over the radii.
    SphereMixture { radii: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct SphereConfig {
    pub n: usize,
    pub p: usize,
    /// Gaussian kernel bandwidth; Silverman's rule on the first coordinates
    /// when absent.
    pub bandwidth: Option<f64>,
    /// Draws of `Z ~ N(0, I_p)` per data point.
    pub n_mc_rotations: usize,
    pub grid: (f64, f64, usize),
    pub sampler: SphereSampler,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SphereConfig {
    fn default() -> Self {
        Self {
            n: 500,
            p: 10,
            bandwidth: None,
            n_mc_rotations: 64,
            grid: (-4.0, 4.0, 201),
            sampler: SphereSampler::Gaussian,
            reps: 50,
            seed: 0,
        }
    }
}

fn gauss_kernel(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Equal-weight Gaussian KDE evaluated on a grid.
pub fn kde(centers: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = 1.0 / (centers.len() as f64 * h);
    grid.iter().map(|&t| centers.iter().map(|&c| gauss_kernel((t - c) / h)).sum::<f64>() * norm).collect()
}

/// Kernel centres `‖y‖ Z(1)/‖Z‖` standing in for the first coordinate of a
/// uniformly rotated `y`. For `p = 1` the two values `±‖y‖` are exact.
pub fn rotated_first_coordinates<R: Rng + ?Sized>(norm: f64, p: usize, k: usize, rng: &mut R) -> Vec<f64> {
    if p == 1 {
        return vec![norm, -norm];
    }
    (0..k)
        .map(|_| {
            let z = DVector::from_fn(p, |_, _| -> f64 { StandardNormal.sample(rng) });
            norm * z[0] / z.norm()
        })
        .collect()
}

/// Density of the first coordinate under the sampler.
pub fn true_marginal(sampler: &SphereSampler, p: usize, t: f64) -> f64 {
    match sampler {
        SphereSampler::Gaussian => gauss_kernel(t),
        SphereSampler::SphereMixture { radii } => {
            // U(1) on S^{p-1} has density c_p (1 - s²)^{(p-3)/2}
            let pf = p as f64;
            let c = (ln_gamma(pf / 2.0) - ln_gamma((pf - 1.0) / 2.0)).exp() / std::f64::consts::PI.sqrt();
            radii
                .iter()
                .map(|&r| {
                    let s = t / r;
                    if s.abs() >= 1.0 {
                        0.0
                    } else {
                        c * (1.0 - s * s).powf((pf - 3.0) / 2.0) / r
                    }
                })
                .sum::<f64>()
                / radii.len() as f64
        }
    }
}

fn trapezoid(grid: &[f64], vals: &[f64]) -> f64 {
    grid.windows(2).zip(vals.windows(2)).map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1])).sum()
}

fn draw_point<R: Rng + ?Sized>(sampler: &SphereSampler, p: usize, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(p, |_, _| -> f64 { StandardNormal.sample(rng) });
    match sampler {
        SphereSampler::Gaussian => z,
        SphereSampler::SphereMixture { radii } => {
            let r = radii[rng.random_range(0..radii.len())];
            &z * (r / z.norm())
        }
    }
}

fn silverman(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    1.06 * sd.max(1e-3) * n.powf(-0.2)
}

/// Baseline KDE on first coordinates against the rotation-augmented KDE;
/// integrated squared error of both against the true marginal.
pub fn run_spherical_density(cfg: &SphereConfig) -> Result<ExperimentReport> {
    let (lo, hi, points) = cfg.grid;
    if cfg.n < 2 || cfg.p == 0 || cfg.n_mc_rotations == 0 {
        return Err(AugError::InvalidConfig("need n >= 2, p >= 1 and at least one rotation".into()));
    }
    if !(hi > lo) || points < 2 {
        return Err(AugError::InvalidConfig("evaluation grid must have hi > lo and at least two points".into()));
    }
    if let Some(h) = cfg.bandwidth {
        if !(h > 0.0 && h.is_finite()) {
            return Err(AugError::InvalidConfig(format!("bandwidth must be positive, got {h}")));
        }
    }
    if let SphereSampler::SphereMixture { radii } = &cfg.sampler {
        if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
            return Err(AugError::InvalidConfig("radii must be positive".into()));
        }
        if cfg.p < 3 {
            return Err(AugError::InvalidConfig("sphere mixture marginal needs p >= 3".into()));
        }
    }
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let truth: Vec<f64> = grid.iter().map(|&t| true_marginal(&cfg.sampler, cfg.p, t)).collect();
    let ise = |est: &[f64]| {
        let sq: Vec<f64> = est.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).collect();
        trapezoid(&grid, &sq)
    };
    let per_rep = run_reps(cfg.reps, cfg.seed, |_, rng| {
        let xs: Vec<DVector<f64>> = (0..cfg.n).map(|_| draw_point(&cfg.sampler, cfg.p, rng)).collect();
        let first: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let h = cfg.bandwidth.unwrap_or_else(|| silverman(&first));
        let centers: Vec<f64> =
            xs.iter().flat_map(|x| rotated_first_coordinates(x.norm(), cfg.p, cfg.n_mc_rotations, rng)).collect();
        Ok((ise(&kde(&first, &grid, h)), ise(&kde(&centers, &grid, h)), h))
    })?;
    let mut report = ExperimentReport::new(
        "sphere",
        json!({"n": cfg.n, "p": cfg.p, "bandwidth": cfg.bandwidth, "n_mc_rotations": cfg.n_mc_rotations,
               "grid": [lo, hi, points], "sampler": format!("{:?}", cfg.sampler), "reps": cfg.reps, "seed": cfg.seed}),
    );
    let key = format!("p={}", cfg.p);
    let mut wins = 0;
    for (rep, &(base, aug, h)) in per_rep.iter().enumerate() {
        report.push(rep, &key, "ise_baseline", base);
        report.push(rep, &key, "ise_augmented", aug);
        report.push(rep, &key, "bandwidth", h);
        if aug <= base {
            wins += 1;
        }
    }
    report.push_derived(&key, "fraction_augmented_better", wins as f64 / per_rep.len() as f64);
    report.finalize()
}
