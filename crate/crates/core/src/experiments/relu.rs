use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use super::report::ExperimentReport;
use super::{check_group_dim, run_reps};
use crate::error::{AugError, Result};
use crate::group::FiniteGroup;
use crate::rng::{stream_rng, AugRng};

const DATA_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const MAX_REJECTIONS: usize = 10_000_000;

#[derive(Debug, Clone)]
pub struct ReluGdConfig {
    pub n: usize,
    /// Hidden width.
    pub m: usize,
    pub d: usize,
    /// Margin of the generated data in the neural-tangent sense.
    pub gamma: f64,
    /// Constant step size, at most 1.
    pub eta: f64,
    /// Target empirical risk.
    pub epsilon: f64,
    /// Failure probability entering `λ`.
    pub delta: f64,
    /// Overrides the step budget `⌈2λ²/(nε)⌉`.
    pub steps: Option<usize>,
    /// Stop once the augmented risk reaches `epsilon`.
    pub early_stop: bool,
    /// Defaults to cyclic shifts of the `d` input coordinates.
    pub group: Option<FiniteGroup>,
    pub n_test: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for ReluGdConfig {
    fn default() -> Self {
        Self {
            n: 512,
            m: 1024,
            d: 8,
            gamma: 0.15,
            eta: 1.0,
            epsilon: 0.1,
            delta: 0.1,
            steps: None,
            early_stop: true,
            group: None,
            n_test: 2000,
            reps: 1,
            seed: 0,
        }
    }
}

/// Points uniform on the unit sphere restricted to `|⟨x, u⟩| ≥ 2γ` with
/// `u = 𝟙/√d`, labelled by the sign of `⟨x, u⟩`. The constant field `v̄ = u`
/// then has margin `|⟨u, x⟩|/2 ≥ γ`, and any coordinate permutation keeps
/// both the labels and the margin.
pub fn antipodal_cap_data<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    if d == 0 {
        return Err(AugError::InvalidConfig("dimension must be positive".into()));
    }
    if !(gamma > 0.0 && 2.0 * gamma < 1.0) {
        return Err(AugError::InvalidConfig(format!("margin must lie in (0, 0.5), got {gamma}")));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut tries = 0;
    while xs.len() < n {
        tries += 1;
        if tries > MAX_REJECTIONS {
            return Err(AugError::Numerical("cap sampler rejected too many draws".into()));
        }
        let z = DVector::from_fn(d, |_, _| -> f64 { StandardNormal.sample(rng) });
        let x = &z / z.norm();
        let t = x.sum() * scale;
        if t.abs() >= 2.0 * gamma {
            ys.push(t.signum());
            xs.push(x);
        }
    }
    Ok((xs, ys))
}

/// `λ = (√(2 ln(4n|G|/δ)) + ln(4/ε)) / (γ/4)`.
pub fn relu_margin_lambda(n: usize, group_order: usize, delta: f64, epsilon: f64, gamma: f64) -> f64 {
    let a = (2.0 * (4.0 * n as f64 * group_order as f64 / delta).ln()).sqrt();
    (a + (4.0 / epsilon).ln()) / (gamma / 4.0)
}

/// `f(x) = m^{-1/2} aᵀ relu(W x)` with fixed outer signs `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReluNet {
    pub w: DMatrix<f64>,
    pub a: DVector<f64>,
}

impl ReluNet {
    /// `W_ij ~ N(0, 1)`, `a_s` uniform on `±1`.
    pub fn init<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Self {
        let w = DMatrix::from_fn(m, d, |_, _| StandardNormal.sample(rng));
        let a = DVector::from_fn(m, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        Self { w, a }
    }

    pub fn forward(&self, x: &DVector<f64>) -> f64 {
        let h = &self.w * x;
        let m = self.a.len() as f64;
        h.iter().zip(self.a.iter()).map(|(&v, &a)| a * v.max(0.0)).sum::<f64>() / m.sqrt()
    }

    /// Fraction of points with `y f(x) ≤ 0`.
    pub fn misclassification(&self, xs: &[DVector<f64>], ys: &[f64]) -> f64 {
        let wrong = xs.iter().zip(ys).filter(|(x, &y)| y * self.forward(x) <= 0.0).count();
        wrong as f64 / xs.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReluTraining {
    pub best_net: ReluNet,
    pub best_step: usize,
    pub best_risk: f64,
    /// Augmented empirical risk at each visited iterate.
    pub risks: Vec<f64>,
    pub steps_run: usize,
    /// `max_s ‖w_s - w_{s,0}‖` at the best iterate.
    pub best_displacement: f64,
    /// Same, maximised over the visited iterates.
    pub max_displacement: f64,
    pub diverged: bool,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn max_row_displacement(w: &DMatrix<f64>, w0: &DMatrix<f64>) -> f64 {
    (w - w0).row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// Logistic risk averaged over `(i, g)` and its gradient in `W`. `rows` holds
/// the augmented inputs row-major (`N × d`).
fn risk_and_grad(net: &ReluNet, rows: &[f64], labels: &[f64]) -> (f64, DMatrix<f64>) {
    let (m, d) = net.w.shape();
    let big_n = labels.len();
    let sqrt_m = (m as f64).sqrt();
    // H = A Wᵀ, row-major N × m; W is column-major so Wᵀ has strides (m, 1)
    let mut h = vec![0.0; big_n * m];
    // SAFETY: buffer lengths and strides match the stated shapes
    unsafe {
        matrixmultiply::dgemm(
            big_n,
            d,
            m,
            1.0,
            rows.as_ptr(),
            d as isize,
            1,
            net.w.as_slice().as_ptr(),
            m as isize,
            1,
            0.0,
            h.as_mut_ptr(),
            m as isize,
            1,
        );
    }
    let mut risk = 0.0;
    for (hk, &y) in h.chunks_exact_mut(m).zip(labels) {
        let f: f64 = hk.iter().zip(net.a.iter()).map(|(&v, &a)| if v > 0.0 { a * v } else { 0.0 }).sum();
        let z = y * f / sqrt_m;
        risk += softplus(-z);
        // ℓ'(z) = -σ(-z)
        let sig = if z >= 0.0 { (-z).exp() / (1.0 + (-z).exp()) } else { 1.0 / (1.0 + z.exp()) };
        let c = -sig * y / (big_n as f64 * sqrt_m);
        for (v, &a) in hk.iter_mut().zip(net.a.iter()) {
            *v = if *v > 0.0 { c * a } else { 0.0 };
        }
    }
    // gradient = Mᵀ A with M stored in h
    let mut grad = DMatrix::zeros(m, d);
    // SAFETY: as above
    unsafe {
        matrixmultiply::dgemm(
            m,
            big_n,
            d,
            1.0,
            h.as_ptr(),
            1,
            m as isize,
            rows.as_ptr(),
            d as isize,
            1,
            0.0,
            grad.as_mut_slice().as_mut_ptr(),
            1,
            m as isize,
        );
    }
    (risk / big_n as f64, grad)
}

/// Full-batch gradient descent `W_{t+1} = W_t - η ∇R̄_n(W_t)` on the
/// orbit-averaged logistic risk, tracking the best of the visited iterates.
#[allow(clippy::too_many_arguments)]
pub fn train_relu_gd(
    init: &ReluNet,
    xs: &[DVector<f64>],
    ys: &[f64],
    group: &FiniteGroup,
    eta: f64,
    steps: usize,
    epsilon: f64,
    early_stop: bool,
) -> Result<ReluTraining> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(AugError::InvalidConfig("need matching nonempty features and labels".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(AugError::InvalidConfig(format!("step size must lie in (0, 1], got {eta}")));
    }
    if steps == 0 {
        return Err(AugError::InvalidConfig("need at least one step".into()));
    }
    let d = init.w.ncols();
    check_group_dim(group, d)?;
    let elems = group.elements()?;
    let mut rows = Vec::with_capacity(xs.len() * elems.len() * d);
    let mut labels = Vec::with_capacity(xs.len() * elems.len());
    for (x, &y) in xs.iter().zip(ys) {
        for g in elems {
            rows.extend(g.apply(x)?.iter());
            labels.push(y);
        }
    }
    let mut net = init.clone();
    let mut best = (f64::INFINITY, 0, init.clone());
    let mut risks = Vec::new();
    let mut max_disp: f64 = 0.0;
    let mut diverged = false;
    for t in 0..steps {
        let (risk, grad) = risk_and_grad(&net, &rows, &labels);
        if !risk.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        risks.push(risk);
        max_disp = max_disp.max(max_row_displacement(&net.w, &init.w));
        if risk < best.0 {
            best = (risk, t, net.clone());
        }
        if early_stop && risk <= epsilon {
            break;
        }
        net.w -= grad * eta;
    }
    let (best_risk, best_step, best_net) = best;
    Ok(ReluTraining {
        best_displacement: max_row_displacement(&best_net.w, &init.w),
        best_net,
        best_step,
        best_risk,
        steps_run: risks.len(),
        risks,
        max_displacement: max_disp,
        diverged,
    })
}

/// Trains on margin data with the orbit-averaged risk and reports the best
/// iterate's risk, held-out error and weight displacement against
/// `ρ = 4λ/(γ√m)`.
pub fn run_relu_gd_experiment(cfg: &ReluGdConfig) -> Result<ExperimentReport> {
    if cfg.n == 0 || cfg.m == 0 || cfg.n_test == 0 {
        return Err(AugError::InvalidConfig("n, m and n_test must be positive".into()));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) || !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(AugError::InvalidConfig("epsilon and delta must lie in (0, 1)".into()));
    }
    let group = match &cfg.group {
        Some(g) => g.clone(),
        None => FiniteGroup::cyclic_shift(cfg.d)?,
    };
    check_group_dim(&group, cfg.d)?;
    let order = group.elements()?.len();
    let lambda = relu_margin_lambda(cfg.n, order, cfg.delta, cfg.epsilon, cfg.gamma);
    let steps = cfg.steps.unwrap_or_else(|| (2.0 * lambda * lambda / (cfg.n as f64 * cfg.epsilon)).ceil() as usize);
    let rho = 4.0 * lambda / (cfg.gamma * (cfg.m as f64).sqrt());
    let runs = run_reps(cfg.reps, cfg.seed, |rep, _| {
        let seed = cfg.seed.wrapping_add(rep as u64);
        let mut data_rng: AugRng = stream_rng(seed, DATA_STREAM);
        let (xs, ys) = antipodal_cap_data(cfg.n, cfg.d, cfg.gamma, &mut data_rng)?;
        let (tx, ty) = antipodal_cap_data(cfg.n_test, cfg.d, cfg.gamma, &mut stream_rng(seed, TEST_STREAM))?;
        let init = ReluNet::init(cfg.m, cfg.d, &mut stream_rng(seed, INIT_STREAM));
        let tr = train_relu_gd(&init, &xs, &ys, &group, cfg.eta, steps, cfg.epsilon, cfg.early_stop)?;
        let test_error = tr.best_net.misclassification(&tx, &ty);
        let train_error = tr.best_net.misclassification(&xs, &ys);
        Ok((tr, test_error, train_error))
    })?;
    let mut report = ExperimentReport::new(
        "relu",
        json!({"n": cfg.n, "m": cfg.m, "d": cfg.d, "gamma": cfg.gamma, "eta": cfg.eta, "epsilon": cfg.epsilon,
               "delta": cfg.delta, "steps": steps, "lambda": lambda, "rho": rho, "early_stop": cfg.early_stop,
               "group": group.kind().to_string(), "n_test": cfg.n_test, "reps": cfg.reps, "seed": cfg.seed}),
    );
    let key = format!("n={},m={}", cfg.n, cfg.m);
    for (rep, (tr, test_error, train_error)) in runs.iter().enumerate() {
        report.push(rep, &key, "best_risk", tr.best_risk);
        report.push(rep, &key, "best_step", tr.best_step as f64);
        report.push(rep, &key, "steps_run", tr.steps_run as f64);
        report.push(rep, &key, "train_error", *train_error);
        report.push(rep, &key, "test_error", *test_error);
        report.push(rep, &key, "best_displacement", tr.best_displacement);
        report.push(rep, &key, "displacement_over_rho", tr.max_displacement / rho);
        report.push(rep, &key, "diverged", if tr.diverged { 1.0 } else { 0.0 });
    }
    report.push_derived(&key, "lambda", lambda);
    report.push_derived(&key, "rho", rho);
    report.push_derived(&key, "step_budget", steps as f64);
    report.finalize()
}
