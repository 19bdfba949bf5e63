//! Approximate invariance: Wasserstein-1 distances between empirical
//! measures, the bias bands they induce for orbit averaging, and empirical
//! Rademacher complexities of plain and orbit-averaged loss classes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::group::FiniteGroup;
use crate::linalg;
use crate::orbit::PointFn;

/// Largest sample size accepted by the assignment solver.
pub const ASSIGNMENT_CUTOFF: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum W1Method {
    Sorted1d,
    ExactAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct W1Result {
    pub distance: f64,
    pub method: W1Method,
    /// `coupling[i] = j` matches `a[i]` with `b[j]` (assignment method only).
    pub coupling: Option<Vec<usize>>,
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(AugError::Numerical("NaN in W1 input".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// Exact W1 between two equal-weight empirical measures on the line:
/// the integral of `|Q_a(t) - Q_b(t)|` over the piecewise-constant quantile
/// functions.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<W1Result> {
    if a.is_empty() || b.is_empty() {
        return Err(AugError::EmptyInput("W1 needs nonempty samples".into()));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len(), b.len());
    // breakpoints at multiples of 1/(n m); compare in integer units
    let (mut i, mut j) = (0usize, 0usize);
    let mut t = 0usize;
    let mut total = 0.0;
    while i < n && j < m {
        let end_a = (i + 1) * m;
        let end_b = (j + 1) * n;
        let end = end_a.min(end_b);
        total += (end - t) as f64 * (a[i] - b[j]).abs();
        t = end;
        if end == end_a {
            i += 1;
        }
        if end == end_b {
            j += 1;
        }
    }
    Ok(W1Result { distance: total / (n * m) as f64, method: W1Method::Sorted1d, coupling: None })
}

/// Minimum-cost perfect matching (Hungarian algorithm with potentials,
/// `O(n³)`). Returns `assignment[row] = col` and the total cost.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Result<(Vec<usize>, f64)> {
    let n = cost.nrows();
    if n != cost.ncols() {
        return Err(AugError::InvalidDimension("cost matrix must be square".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    // 1-based arrays, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok((assignment, total))
}

/// Exact W1 between two equal-size point clouds under Euclidean cost.
pub fn wasserstein1_assignment(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<W1Result> {
    if a.is_empty() {
        return Err(AugError::EmptyInput("W1 needs nonempty samples".into()));
    }
    if a.len() != b.len() {
        return Err(AugError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() > ASSIGNMENT_CUTOFF {
        return Err(AugError::Capability(format!(
            "assignment solver limited to {ASSIGNMENT_CUTOFF} points, got {}",
            a.len()
        )));
    }
    let n = a.len();
    let cost = DMatrix::from_fn(n, n, |i, j| (&a[i] - &b[j]).norm());
    let (assignment, total) = min_cost_assignment(&cost)?;
    Ok(W1Result { distance: total / n as f64, method: W1Method::ExactAssignment, coupling: Some(assignment) })
}

/// Sorted formula on the line, assignment otherwise.
pub fn wasserstein1(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<W1Result> {
    match (a.first(), b.first()) {
        (Some(x), Some(_)) if x.len() == 1 => {
            let fa: Vec<f64> = a.iter().map(|v| v[0]).collect();
            let fb: Vec<f64> = b.iter().map(|v| v[0]).collect();
            wasserstein1_1d(&fa, &fb)
        }
        _ => wasserstein1_assignment(a, b),
    }
}

/// How the sup-norm `‖f‖_∞` needed by the bands is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SupNorm {
    Known(f64),
    /// Twice the largest `‖f(x)‖` over this many fresh draws (and over the
    /// sample in use).
    Probe(usize),
    Unbounded,
}

fn resolve_sup<R, S>(sup: SupNorm, f: &PointFn, values_seen: f64, sampler: &mut S, rng: &mut R) -> Result<f64>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    match sup {
        SupNorm::Known(b) if b >= 0.0 => Ok(b),
        SupNorm::Known(b) => Err(AugError::InvalidConfig(format!("sup-norm {b} is negative"))),
        SupNorm::Probe(n) => {
            let mut m = values_seen;
            for _ in 0..n {
                m = m.max(f(&sampler(rng)).norm());
            }
            Ok(2.0 * m)
        }
        SupNorm::Unbounded => Err(AugError::Capability("band needs a bounded statistic".into())),
    }
}

struct PushForward {
    /// `values[j][i] = f(g_j x_i)`.
    values: Vec<Vec<DVector<f64>>>,
    /// `f(x_i)`.
    base: Vec<DVector<f64>>,
    w1: Vec<f64>,
}

fn push_forward<R, S>(
    f: &PointFn,
    group: &FiniteGroup,
    sampler: &mut S,
    n_mc: usize,
    rng: &mut R,
) -> Result<PushForward>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    if n_mc < 2 {
        return Err(AugError::InvalidConfig("need at least two draws".into()));
    }
    let xs: Vec<DVector<f64>> = (0..n_mc).map(|_| sampler(rng)).collect();
    let base: Vec<DVector<f64>> = xs.iter().map(f).collect();
    let mut values = Vec::new();
    let mut w1 = Vec::new();
    for g in group.elements()? {
        let vals: Vec<DVector<f64>> = xs.iter().map(|x| Ok(f(&g.apply(x)?))).collect::<Result<_>>()?;
        w1.push(wasserstein1(&vals, &base)?.distance);
        values.push(vals);
    }
    Ok(PushForward { values, base, w1 })
}

impl PushForward {
    fn mean_w1(&self) -> f64 {
        self.w1.iter().sum::<f64>() / self.w1.len() as f64
    }

    fn fbar(&self) -> Vec<DVector<f64>> {
        let k = self.values.len() as f64;
        (0..self.base.len())
            .map(|i| self.values.iter().fold(DVector::zeros(self.base[i].len()), |acc, v| acc + &v[i]) / k)
            .collect()
    }

    fn max_norm(&self) -> f64 {
        self.values.iter().flatten().chain(self.base.iter()).fold(0.0_f64, |a, v| a.max(v.norm()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanShiftBand {
    /// `‖mean f̄(X) - mean f(X)‖`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `mean_g W1(f(gX), f(X))` between empirical push-forwards.
    pub rhs: f64,
    pub w1_per_element: Vec<f64>,
}

impl MeanShiftBand {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 3.0 * self.lhs_stderr
    }
}

/// Bias bound for orbit averaging under approximate invariance.
pub fn mean_shift_band<R, S>(
    f: &PointFn,
    group: &FiniteGroup,
    mut sampler: S,
    n_mc: usize,
    rng: &mut R,
) -> Result<MeanShiftBand>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    let pf = push_forward(f, group, &mut sampler, n_mc, rng)?;
    let fbar = pf.fbar();
    let diffs: Vec<DVector<f64>> = fbar.iter().zip(&pf.base).map(|(a, b)| a - b).collect();
    let mean = linalg::mean_vector(&diffs)?;
    let se = (linalg::covariance(&diffs)?.trace().max(0.0) / (n_mc as f64 - 1.0)).sqrt();
    Ok(MeanShiftBand { lhs: mean.norm(), lhs_stderr: se, rhs: pf.mean_w1(), w1_per_element: pf.w1 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceBand {
    /// `Cov f̄(X) - Cov f(X)`.
    pub deviation: DMatrix<f64>,
    /// `-E_X Cov_g f(gX)`.
    pub center: DMatrix<f64>,
    /// `4 ‖f‖_∞ E_g W1(f(gX), f(X))`.
    pub radius: f64,
    pub sup_norm: f64,
    /// Smallest eigenvalue of `deviation - center + radius I`.
    pub lower_margin: f64,
    /// Smallest eigenvalue of `center + radius I - deviation`.
    pub upper_margin: f64,
    /// Entrywise standard error scale of the deviation (max over entries).
    pub stderr: f64,
}

impl CovarianceBand {
    pub fn holds(&self) -> bool {
        self.lower_margin >= -3.0 * self.stderr - 1e-12 && self.upper_margin >= -3.0 * self.stderr - 1e-12
    }
}

/// Loewner band for the covariance of the orbit average.
pub fn covariance_band_check<R, S>(
    f: &PointFn,
    group: &FiniteGroup,
    mut sampler: S,
    n_mc: usize,
    sup_norm: SupNorm,
    rng: &mut R,
) -> Result<CovarianceBand>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    if sup_norm == SupNorm::Unbounded {
        return Err(AugError::Capability("band needs a bounded statistic".into()));
    }
    let pf = push_forward(f, group, &mut sampler, n_mc, rng)?;
    let sup = resolve_sup(sup_norm, f, pf.max_norm(), &mut sampler, rng)?;
    let fbar = pf.fbar();
    let deviation = linalg::covariance(&fbar)? - linalg::covariance(&pf.base)?;
    let p = deviation.nrows();
    let mut within = DMatrix::zeros(p, p);
    for i in 0..pf.base.len() {
        let orbit: Vec<DVector<f64>> = pf.values.iter().map(|v| v[i].clone()).collect();
        within += linalg::covariance(&orbit)?;
    }
    let center = -within / pf.base.len() as f64;
    let radius = 4.0 * sup * pf.mean_w1();
    let eye = DMatrix::<f64>::identity(p, p);
    let lower_margin = linalg::min_eigenvalue(&(&deviation - &center + &eye * radius));
    let upper_margin = linalg::min_eigenvalue(&(&center + &eye * radius - &deviation));
    // per-draw second-moment contributions set the noise scale of the deviation
    let terms: Vec<DMatrix<f64>> =
        fbar.iter().zip(&pf.base).map(|(a, b)| a * a.transpose() - b * b.transpose()).collect();
    let (_, se) = linalg::matrix_mean_stderr(&terms)?;
    Ok(CovarianceBand {
        deviation,
        center,
        radius,
        sup_norm: sup,
        lower_margin,
        upper_margin,
        stderr: linalg::max_abs(&se),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseTradeoff {
    /// `MSE(θ̂_G) - MSE(θ̂)`.
    pub mse_diff: f64,
    pub mse_diff_stderr: f64,
    /// `E_X tr Cov_g θ̂(gX)`.
    pub variance_term: f64,
    /// `E_g W1(θ̂(gX), θ̂(X))`.
    pub w1: f64,
    pub bias_norm: f64,
    pub sup_norm: f64,
    pub delta: f64,
}

impl MseTradeoff {
    pub fn lower(&self) -> f64 {
        -self.variance_term - self.delta
    }

    pub fn upper(&self) -> f64 {
        -self.variance_term + self.delta
    }

    pub fn holds(&self) -> bool {
        let slack = 3.0 * self.mse_diff_stderr;
        self.mse_diff >= self.lower() - slack && self.mse_diff <= self.upper() + slack
    }
}

/// MSE change from averaging a dataset-level estimator over transforms of
/// the whole dataset, against the band `-E tr Cov_g θ̂(gX) ± Δ`.
#[allow(clippy::too_many_arguments)]
pub fn mse_tradeoff<R, S>(
    estimator: &(dyn Fn(&[DVector<f64>]) -> DVector<f64> + Sync),
    group: &FiniteGroup,
    mut data_sampler: S,
    theta0: &DVector<f64>,
    n_mc: usize,
    sup_norm: SupNorm,
    rng: &mut R,
) -> Result<MseTradeoff>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> Vec<DVector<f64>>,
{
    if n_mc < 2 {
        return Err(AugError::InvalidConfig("need at least two draws".into()));
    }
    let elems = group.elements()?;
    let mut base = Vec::with_capacity(n_mc);
    let mut moved: Vec<Vec<DVector<f64>>> = vec![Vec::with_capacity(n_mc); elems.len()];
    let mut diffs = Vec::with_capacity(n_mc);
    let mut var_terms = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let data = data_sampler(rng);
        let est = estimator(&data);
        let orbit: Vec<DVector<f64>> =
            elems.iter().map(|g| Ok(estimator(&g.apply_all(&data)?))).collect::<Result<_>>()?;
        let avg = linalg::mean_vector(&orbit)?;
        diffs.push((&avg - theta0).norm_squared() - (&est - theta0).norm_squared());
        var_terms.push(linalg::covariance(&orbit)?.trace());
        for (j, o) in orbit.into_iter().enumerate() {
            moved[j].push(o);
        }
        base.push(est);
    }
    let w1s: Vec<f64> = moved.iter().map(|m| Ok(wasserstein1(m, &base)?.distance)).collect::<Result<_>>()?;
    let w1 = w1s.iter().sum::<f64>() / w1s.len() as f64;
    let bias_norm = (linalg::mean_vector(&base)? - theta0).norm();
    let seen = moved.iter().flatten().chain(base.iter()).fold(0.0_f64, |a, v| a.max(v.norm()));
    let sup = match sup_norm {
        SupNorm::Known(b) if b >= 0.0 => b,
        SupNorm::Known(b) => return Err(AugError::InvalidConfig(format!("sup-norm {b} is negative"))),
        SupNorm::Probe(n) => {
            let mut m = seen;
            for _ in 0..n {
                m = m.max(estimator(&data_sampler(rng)).norm());
            }
            2.0 * m
        }
        SupNorm::Unbounded => return Err(AugError::Capability("band needs a bounded estimator".into())),
    };
    let (mse_diff, mse_diff_stderr) = linalg::mean_stderr(&diffs);
    let variance_term = var_terms.iter().sum::<f64>() / var_terms.len() as f64;
    let delta = w1 * (w1 + 2.0 * bias_norm + 4.0 * sup);
    Ok(MseTradeoff { mse_diff, mse_diff_stderr, variance_term, w1, bias_norm, sup_norm: sup, delta })
}

/// Loss on which Rademacher complexities are computed; values are clipped
/// into `[0, 1]`.
pub type BoundedLoss<'a> = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_rademacher_draws: usize,
    pub theta_grid_size: usize,
    /// The supremum runs over a finite grid only.
    pub is_lower_bound: bool,
    /// Whether any loss value had to be clipped into `[0, 1]`.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherComparison {
    pub plain: RademacherEstimate,
    pub augmented: RademacherEstimate,
    /// `E_g sup_θ |mean ε_i L(θ, g x_i)|` with one shared `g` per dataset.
    pub symmetrized_plain: f64,
    /// `augmented - symmetrized_plain`, never positive.
    pub delta: f64,
    /// Largest per-draw value of the same difference.
    pub delta_max_per_draw: f64,
}

fn clip(v: f64, clipped: &mut bool) -> f64 {
    if !(0.0..=1.0).contains(&v) {
        *clipped = true;
    }
    v.clamp(0.0, 1.0)
}

/// Loss table `table[t][i] = L(θ_t, x_i)` after clipping.
fn loss_table(loss: &BoundedLoss, grid: &[DVector<f64>], data: &[DVector<f64>], clipped: &mut bool) -> Vec<Vec<f64>> {
    grid.iter().map(|t| data.iter().map(|x| clip(loss(t, x), clipped)).collect()).collect()
}

fn sup_abs(table: &[Vec<f64>], eps: &[f64]) -> f64 {
    let n = eps.len() as f64;
    table.iter().map(|row| (row.iter().zip(eps).map(|(l, e)| l * e).sum::<f64>() / n).abs()).fold(0.0, f64::max)
}

fn draw_signs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
}

fn check_rad_inputs(grid: &[DVector<f64>], data: &[DVector<f64>], n_rad: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(AugError::EmptyInput("empty parameter grid".into()));
    }
    if data.is_empty() {
        return Err(AugError::EmptyInput("no data".into()));
    }
    if n_rad < 2 {
        return Err(AugError::InvalidConfig("need at least two sign draws".into()));
    }
    Ok(())
}

/// `E_ε sup_{θ ∈ grid} |n⁻¹ Σ ε_i L(θ, x_i)|` for fixed data, with `L`
/// replaced by its orbit average when a group is given.
pub fn rademacher_estimate<R: Rng + ?Sized>(
    loss: &BoundedLoss,
    grid: &[DVector<f64>],
    data: &[DVector<f64>],
    group: Option<&FiniteGroup>,
    n_rad: usize,
    rng: &mut R,
) -> Result<RademacherEstimate> {
    check_rad_inputs(grid, data, n_rad)?;
    let mut clipped = false;
    let table = match group {
        None => loss_table(loss, grid, data, &mut clipped),
        Some(g) => averaged_table(loss, grid, data, g, &mut clipped)?,
    };
    let vals: Vec<f64> = (0..n_rad).map(|_| sup_abs(&table, &draw_signs(data.len(), rng))).collect();
    let (value, stderr) = linalg::mean_stderr(&vals);
    Ok(RademacherEstimate {
        value,
        stderr,
        n_rademacher_draws: n_rad,
        theta_grid_size: grid.len(),
        is_lower_bound: true,
        clipped,
    })
}

fn averaged_table(
    loss: &BoundedLoss,
    grid: &[DVector<f64>],
    data: &[DVector<f64>],
    group: &FiniteGroup,
    clipped: &mut bool,
) -> Result<Vec<Vec<f64>>> {
    let elems = group.elements()?;
    let mut table = vec![vec![0.0; data.len()]; grid.len()];
    for g in elems {
        let moved = g.apply_all(data)?;
        for (t, row) in grid.iter().zip(table.iter_mut()) {
            for (cell, x) in row.iter_mut().zip(&moved) {
                *cell += clip(loss(t, x), clipped);
            }
        }
    }
    let k = elems.len() as f64;
    for row in table.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= k;
        }
    }
    Ok(table)
}

/// Plain and augmented estimates on the same sign draws, plus the
/// symmetrised plain estimate that bounds the augmented one draw by draw.
pub fn rademacher_comparison<R: Rng + ?Sized>(
    loss: &BoundedLoss,
    grid: &[DVector<f64>],
    data: &[DVector<f64>],
    group: &FiniteGroup,
    n_rad: usize,
    rng: &mut R,
) -> Result<RademacherComparison> {
    check_rad_inputs(grid, data, n_rad)?;
    let mut clipped = false;
    let plain_table = loss_table(loss, grid, data, &mut clipped);
    let avg_table = averaged_table(loss, grid, data, group, &mut clipped)?;
    let moved_tables: Vec<Vec<Vec<f64>>> = group
        .elements()?
        .iter()
        .map(|g| Ok(loss_table(loss, grid, &g.apply_all(data)?, &mut clipped)))
        .collect::<Result<_>>()?;
    let mut plain = Vec::with_capacity(n_rad);
    let mut aug = Vec::with_capacity(n_rad);
    let mut sym = Vec::with_capacity(n_rad);
    let mut delta_max = f64::NEG_INFINITY;
    for _ in 0..n_rad {
        let eps = draw_signs(data.len(), rng);
        plain.push(sup_abs(&plain_table, &eps));
        let a = sup_abs(&avg_table, &eps);
        let s = moved_tables.iter().map(|t| sup_abs(t, &eps)).sum::<f64>() / moved_tables.len() as f64;
        delta_max = delta_max.max(a - s);
        aug.push(a);
        sym.push(s);
    }
    let est = |vals: &[f64]| {
        let (value, stderr) = linalg::mean_stderr(vals);
        RademacherEstimate {
            value,
            stderr,
            n_rademacher_draws: n_rad,
            theta_grid_size: grid.len(),
            is_lower_bound: true,
            clipped,
        }
    };
    let augmented = est(&aug);
    let symmetrized_plain = sym.iter().sum::<f64>() / n_rad as f64;
    Ok(RademacherComparison {
        plain: est(&plain),
        delta: augmented.value - symmetrized_plain,
        augmented,
        symmetrized_plain,
        delta_max_per_draw: delta_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Action;
    use crate::rng::{rng_from_seed, AugRng};
    use rand_distr::{Distribution, StandardNormal};

    fn brute_force_w1(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
        fn rec(a: &[DVector<f64>], b: &[DVector<f64>], used: &mut Vec<bool>, i: usize, acc: f64, best: &mut f64) {
            if i == a.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    rec(a, b, used, i + 1, acc + (&a[i] - &b[j]).norm(), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
        best / a.len() as f64
    }

    fn cloud(n: usize, d: usize, rng: &mut AugRng) -> Vec<DVector<f64>> {
        (0..n).map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(rng))).collect()
    }

    #[test]
    fn identical_and_translated_1d() {
        let a = [0.3, -1.0, 2.5, 0.0];
        assert_eq!(wasserstein1_1d(&a, &a).unwrap().distance, 0.0);
        let b: Vec<f64> = a.iter().map(|x| x - 0.7).collect();
        assert!((wasserstein1_1d(&a, &b).unwrap().distance - 0.7).abs() < 1e-12);
        assert!(wasserstein1_1d(&[], &a).is_err());
    }

    #[test]
    fn unequal_sizes_by_quantiles() {
        // a = {0, 1}, b = {0, 0, 3}: quantile pieces on [0,1/3),[1/3,1/2),[1/2,2/3),[2/3,1]
        let d = wasserstein1_1d(&[0.0, 1.0], &[0.0, 0.0, 3.0]).unwrap().distance;
        let expected = (1.0 / 3.0) * 0.0 + (1.0 / 6.0) * 0.0 + (1.0 / 6.0) * 1.0 + (1.0 / 3.0) * 2.0;
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn assignment_matches_sorted_in_1d() {
        let mut rng = rng_from_seed(1);
        let a = cloud(60, 1, &mut rng);
        let b = cloud(60, 1, &mut rng);
        let s =
            wasserstein1_1d(&a.iter().map(|v| v[0]).collect::<Vec<_>>(), &b.iter().map(|v| v[0]).collect::<Vec<_>>())
                .unwrap();
        let h = wasserstein1_assignment(&a, &b).unwrap();
        assert!((s.distance - h.distance).abs() < 1e-10);
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = rng_from_seed(2);
        for n in 1..=6 {
            let a = cloud(n, 3, &mut rng);
            let b = cloud(n, 3, &mut rng);
            let h = wasserstein1_assignment(&a, &b).unwrap();
            assert!((h.distance - brute_force_w1(&a, &b)).abs() < 1e-10);
        }
        let a = cloud(4, 2, &mut rng);
        let r = wasserstein1_assignment(&a, &a).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.coupling.unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn swapped_points_are_matched_back() {
        let a = vec![DVector::from_vec(vec![0.0, 0.0]), DVector::from_vec(vec![5.0, 5.0])];
        let b = vec![a[1].clone(), a[0].clone()];
        let r = wasserstein1_assignment(&a, &b).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.coupling.unwrap(), vec![1, 0]);
    }

    #[test]
    fn assignment_size_checks() {
        let a = vec![DVector::zeros(1); 3];
        assert!(wasserstein1_assignment(&a, &a[..2]).is_err());
        let big = vec![DVector::zeros(1); ASSIGNMENT_CUTOFF + 1];
        assert!(matches!(wasserstein1_assignment(&big, &big), Err(AugError::Capability(_))));
    }

    #[test]
    fn translation_gives_equality_in_mean_band() {
        let c = DVector::from_vec(vec![0.3, -0.4]);
        let shift = Action::Affine { matrix: DMatrix::identity(2, 2), offset: c.clone() };
        let g = FiniteGroup::custom(2, vec![shift], false).unwrap();
        let id = |x: &DVector<f64>| x.clone();
        let mut rng = rng_from_seed(3);
        let sampler = |r: &mut AugRng| DVector::from_fn(2, |_, _| StandardNormal.sample(r));
        let band = mean_shift_band(&id, &g, sampler, 100, &mut rng).unwrap();
        assert!((band.lhs - 0.5).abs() < 1e-12);
        assert!((band.rhs - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exact_invariance_mean_band_and_cov_band() {
        let g = FiniteGroup::flip(2).unwrap();
        let f = |x: &DVector<f64>| x.map(|v| v.clamp(-1.0, 1.0));
        let mut rng = rng_from_seed(4);
        let sampler = |r: &mut AugRng| DVector::from_fn(2, |_, _| StandardNormal.sample(r));
        let band = mean_shift_band(&f, &g, sampler, 300, &mut rng).unwrap();
        assert!(band.holds());
        let cov = covariance_band_check(&f, &g, sampler, 300, SupNorm::Known(2f64.sqrt()), &mut rng).unwrap();
        assert!(cov.holds());
        assert!(matches!(
            covariance_band_check(&f, &g, sampler, 10, SupNorm::Unbounded, &mut rng),
            Err(AugError::Capability(_))
        ));
    }

    #[test]
    fn trivial_group_band_collapses() {
        let g = FiniteGroup::trivial(1).unwrap();
        let f = |x: &DVector<f64>| x.map(|v| v.tanh());
        let mut rng = rng_from_seed(5);
        let sampler = |r: &mut AugRng| DVector::from_fn(1, |_, _| StandardNormal.sample(r));
        let cov = covariance_band_check(&f, &g, sampler, 50, SupNorm::Known(1.0), &mut rng).unwrap();
        assert_eq!(cov.deviation[(0, 0)], 0.0);
        assert_eq!(cov.radius, 0.0);
        assert!(cov.holds());
        let est = |d: &[DVector<f64>]| d[0].clone();
        let data_sampler = |r: &mut AugRng| vec![DVector::from_fn(1, |_, _| StandardNormal.sample(r))];
        let m = mse_tradeoff(&est, &g, data_sampler, &DVector::zeros(1), 50, SupNorm::Probe(0), &mut rng).unwrap();
        assert_eq!((m.mse_diff, m.variance_term, m.w1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rademacher_singleton_grid_matches_walk() {
        // constant loss c: E|n⁻¹ Σ ε_i c| = c E|S_n| / n, computed from binomial weights
        let n = 10;
        let c = 0.6;
        let mut exact = 0.0;
        let mut binom = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
            }
            exact += binom * ((2 * k) as f64 - n as f64).abs();
        }
        exact *= c / (n as f64 * 2f64.powi(n as i32));
        let loss = move |_: &DVector<f64>, _: &DVector<f64>| c;
        let data = vec![DVector::zeros(1); n];
        let mut rng = rng_from_seed(6);
        let r = rademacher_estimate(&loss, &[DVector::zeros(1)], &data, None, 10_000, &mut rng).unwrap();
        assert!((r.value - exact).abs() < 4.0 * r.stderr);
        assert!(r.is_lower_bound);

        let data = vec![DVector::zeros(1); 100];
        let r = rademacher_estimate(&loss, &[DVector::zeros(1)], &data, None, 10_000, &mut rng).unwrap();
        let envelope = c * (2.0 / std::f64::consts::PI).sqrt() / 10.0;
        assert!((r.value / envelope - 1.0).abs() < 0.1);
    }

    #[test]
    fn rademacher_zero_loss_and_empty_grid() {
        let zero = |_: &DVector<f64>, _: &DVector<f64>| 0.0;
        let data = vec![DVector::zeros(1); 5];
        let mut rng = rng_from_seed(7);
        let r = rademacher_estimate(&zero, &[DVector::zeros(1)], &data, None, 100, &mut rng).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(rademacher_estimate(&zero, &[], &data, None, 100, &mut rng).is_err());
    }

    #[test]
    fn augmented_bounded_by_symmetrized_per_draw() {
        let mut rng = rng_from_seed(8);
        let data = cloud(40, 1, &mut rng);
        let grid: Vec<_> = (0..11).map(|i| DVector::from_element(1, -1.0 + 0.2 * i as f64)).collect();
        let loss = |t: &DVector<f64>, x: &DVector<f64>| ((t[0] - x[0]).powi(2) / 8.0).min(1.0);
        let g = FiniteGroup::sign(1).unwrap();
        let cmp = rademacher_comparison(&loss, &grid, &data, &g, 2000, &mut rng).unwrap();
        assert!(cmp.delta_max_per_draw <= 1e-12);
        assert!(cmp.delta <= 0.0);
        assert!(cmp.augmented.value <= cmp.plain.value);
    }
}
