//! `auglab <experiment> [options]`: runs one experiment and writes its long
//! CSV (and optionally a JSON mirror with the summary block).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use auglab_core::error::AugError;
use auglab_core::experiments::{
    parse_group_spec, run_circular_experiment, run_flip_experiment, run_linreg_experiment, run_poisson_experiment,
    run_relu_gd_experiment, run_sgd_experiment, run_spherical_density, CircConfig, Design, ExperimentReport,
    FlipConfig, LinregConfig, PoissonConfig, ReluGdConfig, SgdExperimentConfig, SphereConfig,
};
use auglab_core::group::FiniteGroup;
use auglab_core::sgd::LrSchedule;

#[derive(Parser)]
#[command(name = "auglab", version, about = "Data augmentation experiments")]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Data dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Number of replicates.
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true, env = "AUGLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write `<out>.json` (or print JSON instead of CSV without --out).
    #[arg(long, global = true)]
    json: bool,
    /// Group override as `kind:dim`, e.g. `flip:10`, `perm:5`, `subsample:6,2`.
    #[arg(long, global = true)]
    group: Option<String>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Gaussian mean under the flip group.
    Flip,
    /// Poisson coordinates under the flip group.
    Poisson {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 10.0])]
        lambdas: Vec<f64>,
    },
    /// Fisher-trace ratio for circular augmentation.
    Circ {
        /// Dimension grid (overrides --dim).
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1)]
        width: usize,
    },
    /// Linear regression risks under feature permutations.
    Linreg {
        /// `identity` or `random:N`.
        #[arg(long, default_value = "identity")]
        design: String,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Two-layer ReLU network trained by augmented gradient descent.
    Relu {
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 1024)]
        width: usize,
        #[arg(long, default_value_t = 0.15)]
        margin: f64,
        #[arg(long, default_value_t = 1.0)]
        lr: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Step budget; defaults to the margin-based schedule.
        #[arg(long)]
        steps: Option<usize>,
        /// Run the whole budget instead of stopping at the target risk.
        #[arg(long)]
        no_early_stop: bool,
    },
    /// Marginal density of spherically invariant data.
    Sphere {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, default_value_t = 64)]
        rotations: usize,
    },
    /// Augmented SGD on a quadratic loss.
    Sgd {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        /// Use `lr / (1 + t / lr_t0)` instead of a constant rate.
        #[arg(long)]
        lr_t0: Option<f64>,
        #[arg(long, default_value_t = 10)]
        batch: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
    },
}

fn group_override(c: &Common) -> Result<Option<FiniteGroup>, AugError> {
    c.group.as_deref().map(parse_group_spec).transpose()
}

fn run(cli: &Cli) -> Result<ExperimentReport, AugError> {
    let c = &cli.common;
    let group = group_override(c)?;
    match &cli.experiment {
        Experiment::Flip => {
            if group.is_some() {
                return Err(AugError::InvalidConfig("the flip experiment fixes its group".into()));
            }
            run_flip_experiment(&FlipConfig {
                d: c.dim.unwrap_or(100),
                reps: c.reps.unwrap_or(100),
                seed: c.seed,
                mu: None,
            })
        }
        Experiment::Poisson { lambdas } => run_poisson_experiment(&PoissonConfig {
            lambdas: lambdas.clone(),
            d: c.dim.unwrap_or(100),
            reps: c.reps.unwrap_or(100),
            seed: c.seed,
            group,
        }),
        Experiment::Circ { dims, width } => {
            let dims = match (dims, c.dim) {
                (Some(d), _) => d.clone(),
                (None, Some(d)) => vec![d],
                (None, None) => vec![4, 8, 16],
            };
            run_circular_experiment(&CircConfig { dims, p: *width, reps: c.reps.unwrap_or(100), seed: c.seed })
        }
        Experiment::Linreg { design, gamma } => {
            let design = match design.as_str() {
                "identity" => Design::Identity,
                other => match other.strip_prefix("random:").map(str::parse) {
                    Some(Ok(n)) => Design::Random { n },
                    _ => return Err(AugError::InvalidConfig(format!("unknown design {other:?}"))),
                },
            };
            run_linreg_experiment(&LinregConfig {
                p: c.dim.unwrap_or(10),
                design,
                gamma: *gamma,
                reps: c.reps.unwrap_or(1000),
                seed: c.seed,
                group,
            })
        }
        Experiment::Relu { n, width, margin, lr, epsilon, steps, no_early_stop } => {
            run_relu_gd_experiment(&ReluGdConfig {
                n: *n,
                m: *width,
                d: c.dim.unwrap_or(8),
                gamma: *margin,
                eta: *lr,
                epsilon: *epsilon,
                steps: *steps,
                early_stop: !no_early_stop,
                group,
                reps: c.reps.unwrap_or(1),
                seed: c.seed,
                ..Default::default()
            })
        }
        Experiment::Sphere { n, bandwidth, rotations } => {
            if group.is_some() {
                return Err(AugError::InvalidConfig("the sphere experiment uses the orthogonal group".into()));
            }
            run_spherical_density(&SphereConfig {
                n: *n,
                p: c.dim.unwrap_or(10),
                bandwidth: *bandwidth,
                n_mc_rotations: *rotations,
                reps: c.reps.unwrap_or(50),
                seed: c.seed,
                ..Default::default()
            })
        }
        Experiment::Sgd { n, lr, lr_t0, batch, steps } => {
            let schedule = match lr_t0 {
                Some(t0) => LrSchedule::InverseTime { eta0: *lr, t0: *t0 },
                None => LrSchedule::Constant(*lr),
            };
            run_sgd_experiment(&SgdExperimentConfig {
                d: c.dim.unwrap_or(2),
                n: *n,
                schedule,
                batch: *batch,
                steps: *steps,
                group,
                reps: c.reps.unwrap_or(10),
                seed: c.seed,
                ..Default::default()
            })
        }
    }
}

fn print_summary(report: &ExperimentReport) {
    for s in &report.summary {
        eprintln!("{:>14} {:<24} mean {:>12.6} stderr {:>10.6}", s.grid_key, s.metric, s.mean, s.stderr);
    }
    for d in &report.derived {
        eprintln!("{:>14} {:<24} {:>12.6}", d.grid_key, d.name, d.value);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("auglab: {e}");
            return ExitCode::from(if e.is_config_error() { 2 } else { 3 });
        }
    };
    let written = match &cli.common.out {
        Some(path) => report.write(path, cli.common.json).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let text = if cli.common.json { report.to_json_string() } else { report.to_csv_string() };
            text.map(|t| print!("{t}")).map_err(|e| e.to_string())
        }
    };
    if let Err(msg) = written {
        eprintln!("auglab: {msg}");
        return ExitCode::from(2);
    }
    print_summary(&report);
    ExitCode::SUCCESS
}
