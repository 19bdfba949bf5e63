use nalgebra::{DMatrix, DVector};

use crate::group::GroupElement;

/// A loss `L(θ, x)` with its gradient in `θ`.
pub trait LossModel: Sync {
    fn param_dim(&self) -> usize;

    fn value(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64;

    fn grad(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, _theta: &DVector<f64>, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Analytic Hessian if available, central finite differences otherwise.
    fn hessian_or_fd(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
        self.hessian(theta, x).unwrap_or_else(|| fd_hessian(self, theta, x))
    }

    /// Strong-convexity constant in `θ`, 0 when unknown.
    fn strong_convexity(&self) -> f64 {
        0.0
    }

    /// Exact minimiser of the empirical risk, when one is known.
    fn closed_form_minimizer(&self, _data: &[DVector<f64>]) -> Option<DVector<f64>> {
        None
    }
}

/// Central-difference Hessian from the gradient, step `1e-5 (1 + |θ_j|)`.
pub fn fd_hessian<L: LossModel + ?Sized>(loss: &L, theta: &DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let p = theta.len();
    let mut h = DMatrix::zeros(p, p);
    for j in 0..p {
        let step = 1e-5 * (1.0 + theta[j].abs());
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[j] += step;
        down[j] -= step;
        let col = (loss.grad(&up, x) - loss.grad(&down, x)) / (2.0 * step);
        h.set_column(j, &col);
    }
    (&h + h.transpose()) * 0.5
}

fn sample_mean(data: &[DVector<f64>]) -> Option<DVector<f64>> {
    let first = data.first()?;
    let mut acc = DVector::zeros(first.len());
    for x in data {
        acc += x;
    }
    Some(acc / data.len() as f64)
}

/// `‖θ - x‖²`.
#[derive(Debug, Clone, Copy)]
pub struct SquaredLoss {
    pub dim: usize,
}

impl LossModel for SquaredLoss {
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        (theta - x).norm_squared()
    }
    fn grad(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        (theta - x) * 2.0
    }
    fn hessian(&self, _: &DVector<f64>, _: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim) * 2.0)
    }
    fn strong_convexity(&self) -> f64 {
        2.0
    }
    fn closed_form_minimizer(&self, data: &[DVector<f64>]) -> Option<DVector<f64>> {
        sample_mean(data)
    }
}

/// Negative log-likelihood of `N(θ, I)` up to a constant: `‖θ - x‖² / 2`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianLocation {
    pub dim: usize,
}

impl LossModel for GaussianLocation {
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        0.5 * (theta - x).norm_squared()
    }
    fn grad(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        theta - x
    }
    fn hessian(&self, _: &DVector<f64>, _: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim))
    }
    fn strong_convexity(&self) -> f64 {
        1.0
    }
    fn closed_form_minimizer(&self, data: &[DVector<f64>]) -> Option<DVector<f64>> {
        sample_mean(data)
    }
}

/// Linear regression, datum `x = (features, y)`: `(y - θᵀfeatures)² / 2`.
#[derive(Debug, Clone, Copy)]
pub struct LeastSquares {
    pub p: usize,
}

impl LeastSquares {
    fn split<'a>(&self, x: &'a DVector<f64>) -> (nalgebra::DVectorView<'a, f64>, f64) {
        (x.rows(0, self.p), x[self.p])
    }
}

impl LossModel for LeastSquares {
    fn param_dim(&self) -> usize {
        self.p
    }
    fn value(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        let (f, y) = self.split(x);
        0.5 * (y - theta.dot(&f)).powi(2)
    }
    fn grad(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let (f, y) = self.split(x);
        f * (theta.dot(&f) - y)
    }
    fn hessian(&self, _: &DVector<f64>, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (f, _) = self.split(x);
        Some(f * f.transpose())
    }
    fn closed_form_minimizer(&self, data: &[DVector<f64>]) -> Option<DVector<f64>> {
        let mut xtx = DMatrix::zeros(self.p, self.p);
        let mut xty = DVector::zeros(self.p);
        for x in data {
            let (f, y) = self.split(x);
            xtx += f * f.transpose();
            xty += f * y;
        }
        xtx.cholesky().map(|c| c.solve(&xty))
    }
}

/// Logistic loss for a scalar slope, datum `x = (z, y)` with `y = ±1`:
/// `log(1 + exp(-y θ z))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticLoss1d;

fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LossModel for LogisticLoss1d {
    fn param_dim(&self) -> usize {
        1
    }
    fn value(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        log1p_exp(-x[1] * theta[0] * x[0])
    }
    fn grad(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let m = x[1] * theta[0] * x[0];
        DVector::from_element(1, -x[1] * x[0] * sigmoid(-m))
    }
    fn hessian(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let s = sigmoid(x[1] * theta[0] * x[0]);
        Some(DMatrix::from_element(1, 1, x[0] * x[0] * s * (1.0 - s)))
    }
}

/// `L̄(θ, x) = mean_g L(θ, g x)` over a fixed list of transforms.
pub struct AveragedLoss<'a, L: LossModel + ?Sized> {
    pub base: &'a L,
    pub transforms: Vec<GroupElement>,
}

impl<'a, L: LossModel + ?Sized> AveragedLoss<'a, L> {
    pub fn new(base: &'a L, transforms: Vec<GroupElement>) -> Self {
        assert!(!transforms.is_empty(), "averaged loss needs at least one transform");
        Self { base, transforms }
    }

    fn moved(&self, x: &DVector<f64>) -> impl Iterator<Item = DVector<f64>> + '_ {
        let x = x.clone();
        self.transforms.iter().map(move |g| g.apply(&x).expect("transform dimension matches data"))
    }
}

impl<L: LossModel + ?Sized> LossModel for AveragedLoss<'_, L> {
    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }
    fn value(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.moved(x).map(|gx| self.base.value(theta, &gx)).sum::<f64>() / self.transforms.len() as f64
    }
    fn grad(&self, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.param_dim());
        for gx in self.moved(x) {
            acc += self.base.grad(theta, &gx);
        }
        acc / self.transforms.len() as f64
    }
    fn hessian(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let p = self.param_dim();
        let mut acc = DMatrix::zeros(p, p);
        for gx in self.moved(x) {
            acc += self.base.hessian_or_fd(theta, &gx);
        }
        Some(acc / self.transforms.len() as f64)
    }
    fn strong_convexity(&self) -> f64 {
        self.base.strong_convexity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn fd_grad<L: LossModel>(loss: &L, theta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(theta.len(), |j, _| {
            let h = 1e-6 * (1.0 + theta[j].abs());
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += h;
            down[j] -= h;
            (loss.value(&up, x) - loss.value(&down, x)) / (2.0 * h)
        })
    }

    fn check_grad<L: LossModel>(loss: &L, theta: &DVector<f64>, x: &DVector<f64>) {
        let a = loss.grad(theta, x);
        let b = fd_grad(loss, theta, x);
        let scale = 1.0 + a.norm();
        assert!((a - b).norm() / scale < 1e-5);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let t3 = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let x3 = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            check_grad(&SquaredLoss { dim: 3 }, &t3, &x3);
            check_grad(&GaussianLocation { dim: 3 }, &t3, &x3);
            let x4 = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
            check_grad(&LeastSquares { p: 3 }, &t3, &x4);
            let t1 = DVector::from_element(1, rng.random_range(-3.0..3.0));
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let z = DVector::from_vec(vec![rng.random_range(-2.0..2.0), sign]);
            check_grad(&LogisticLoss1d, &t1, &z);
        }
    }

    #[test]
    fn fd_hessian_matches_analytic() {
        let x = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let t = DVector::from_vec(vec![0.5]);
        let z = DVector::from_vec(vec![0.7, -1.0]);
        let a = LogisticLoss1d.hessian(&t, &z).unwrap();
        let b = fd_hessian(&LogisticLoss1d, &t, &z);
        assert!((a - b).amax() < 1e-8);
        let ls = LeastSquares { p: 2 };
        let th = DVector::from_vec(vec![1.0, 2.0]);
        assert!((ls.hessian(&th, &x).unwrap() - fd_hessian(&ls, &th, &x)).amax() < 1e-6);
    }

    #[test]
    fn averaged_loss_over_sign_group_is_even() {
        let g = FiniteGroup::sign(1).unwrap();
        let base = SquaredLoss { dim: 1 };
        let avg = AveragedLoss::new(&base, g.elements().unwrap().to_vec());
        let x = DVector::from_element(1, 1.5);
        let t = DVector::from_element(1, 0.0);
        assert_eq!(avg.grad(&t, &x)[0], 0.0);
        let h = avg.hessian(&t, &x).unwrap();
        assert_eq!(h[(0, 0)], 2.0);
    }
}
