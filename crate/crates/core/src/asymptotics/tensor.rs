use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{AugError, Result};
use crate::linalg::{self, MatrixAccumulator};

/// Largest input or hidden dimension for dense fourth-moment tensors.
pub const TENSOR_CUTOFF: usize = 16;

/// A `p² × d²` matrix indexed by `((s, s'), (j, j'))`, row `s·p + s'`,
/// column `j·d + j'` (Kronecker layout).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor4 {
    pub p: usize,
    pub d: usize,
    pub entries: DMatrix<f64>,
}

impl Tensor4 {
    pub fn new(p: usize, d: usize, entries: DMatrix<f64>) -> Result<Self> {
        if entries.shape() != (p * p, d * d) {
            return Err(AugError::InvalidDimension(format!(
                "tensor entries are {:?}, expected {}x{}",
                entries.shape(),
                p * p,
                d * d
            )));
        }
        Ok(Self { p, d, entries })
    }

    pub fn get(&self, s: usize, s2: usize, j: usize, j2: usize) -> f64 {
        self.entries[(s * self.p + s2, j * self.d + j2)]
    }

    /// The same numbers arranged as the `pd × pd` information matrix of the
    /// flattened weight matrix, row `s·d + j`.
    pub fn as_fisher_matrix(&self) -> DMatrix<f64> {
        let (p, d) = (self.p, self.d);
        DMatrix::from_fn(p * d, p * d, |r, c| self.get(r / d, c / d, r % d, c % d))
    }

    pub fn fisher_trace(&self) -> f64 {
        let mut t = 0.0;
        for s in 0..self.p {
            for j in 0..self.d {
                t += self.get(s, s, j, j);
            }
        }
        t
    }

    /// `(W ⊗ W) · self` for a `d² × d²` tensor and a `p × d` matrix `W`.
    pub fn left_mul_kron(&self, w: &DMatrix<f64>) -> Result<Tensor4> {
        if self.p != self.d || w.ncols() != self.d {
            return Err(AugError::DimensionMismatch { expected: self.d, got: w.ncols() });
        }
        Tensor4::new(w.nrows(), self.d, linalg::kron(w, w) * &self.entries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorEstimate {
    pub mean: Tensor4,
    pub stderr: DMatrix<f64>,
    pub n_mc: usize,
}

/// `C(i, j) = x[(i - j) mod d]`, so column `j` is `x` shifted down by `j`.
pub fn circulant(x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    DMatrix::from_fn(d, d, |i, j| x[(i + d - j) % d])
}

fn check_dims(p: usize, d: usize) -> Result<()> {
    if d == 0 || p == 0 {
        return Err(AugError::InvalidDimension("tensor dimensions must be positive".into()));
    }
    if d > TENSOR_CUTOFF || p > TENSOR_CUTOFF {
        return Err(AugError::Capability(format!("tensor dimensions ({p}, {d}) exceed cutoff {TENSOR_CUTOFF}")));
    }
    Ok(())
}

fn mc_tensor<R, S, F>(p: usize, d: usize, mut sampler: S, n_mc: usize, rng: &mut R, term: F) -> Result<TensorEstimate>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
    F: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    check_dims(p, d)?;
    if n_mc < 2 {
        return Err(AugError::InvalidConfig("need at least two Monte Carlo draws".into()));
    }
    let mut acc = MatrixAccumulator::new(p * p, d * d);
    for _ in 0..n_mc {
        let x = sampler(rng);
        if x.len() != d {
            return Err(AugError::DimensionMismatch { expected: d, got: x.len() });
        }
        acc.push(&term(&x));
    }
    Ok(TensorEstimate { mean: Tensor4::new(p, d, acc.mean())?, stderr: acc.stderr(), n_mc })
}

/// `I_W = (W ⊗ W) E(XXᵀ ⊗ XXᵀ)` for `f(W, x) = 1ᵀσ(Wx)`, `σ(t) = t²/2`.
pub fn fisher_tensor_2lnn<R, S>(w: &DMatrix<f64>, sampler: S, n_mc: usize, rng: &mut R) -> Result<TensorEstimate>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    mc_tensor(w.nrows(), w.ncols(), sampler, n_mc, rng, |x| {
        let u = w * x;
        let left = linalg::kron(
            &DMatrix::from_column_slice(u.len(), 1, u.as_slice()),
            &DMatrix::from_column_slice(u.len(), 1, u.as_slice()),
        );
        let right = linalg::kron(
            &DMatrix::from_column_slice(x.len(), 1, x.as_slice()),
            &DMatrix::from_column_slice(x.len(), 1, x.as_slice()),
        );
        left * right.transpose()
    })
}

/// `Ī_W = (W ⊗ W) d⁻² E(C_X C_Xᵀ ⊗ C_X C_Xᵀ)`, the information of the
/// gradient averaged over circular shifts.
pub fn augmented_fisher_tensor_2lnn<R, S>(
    w: &DMatrix<f64>,
    sampler: S,
    n_mc: usize,
    rng: &mut R,
) -> Result<TensorEstimate>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    let d = w.ncols() as f64;
    mc_tensor(w.nrows(), w.ncols(), sampler, n_mc, rng, |x| {
        let c = circulant(x);
        let ws = w * (&c * c.transpose());
        linalg::kron(&ws, &ws) / (d * d)
    })
}

/// `d⁻² E(C_X C_Xᵀ ⊗ C_X C_Xᵀ)` by Monte Carlo (the `W = I` case).
pub fn circulant_fourth_moment_mc<R, S>(d: usize, sampler: S, n_mc: usize, rng: &mut R) -> Result<TensorEstimate>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    augmented_fisher_tensor_2lnn(&DMatrix::identity(d, d), sampler, n_mc, rng)
}

/// Third Wick pairing in the Fourier-domain tensor `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WickConvention {
    /// `F_iᵀF_{i'} · F_jᵀF_{j'}`, the pairing Isserlis' theorem gives.
    Isserlis,
    /// `F_iᵀF_{i'} · F_iᵀF_{j'}`, which disagrees with direct simulation.
    RepeatedIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DftClosedForm {
    pub tensor: Tensor4,
    /// `max |Im|` of the complex product before taking the real part.
    pub imag_residue: f64,
    /// `max |R - Rᴴ|` of the complex product.
    pub hermitian_residue: f64,
}

/// `d⁻² E(C_X C_Xᵀ ⊗ C_X C_Xᵀ)` for `X ~ N(0, I_d)` as
/// `Re(F₂* (F₂² ⊙ M) F₂*)` with the unitary DFT `F`, `F₂ = F ⊗ F`.
pub fn dft_fourth_moment_closed_form(d: usize, convention: WickConvention) -> Result<DftClosedForm> {
    check_dims(d, d)?;
    let scale = 1.0 / (d as f64).sqrt();
    let f = DMatrix::from_fn(d, d, |j, k| Complex64::from_polar(scale, -2.0 * PI * (j * k) as f64 / d as f64));
    let ftf = f.transpose() * &f;
    let f2 = f.kronecker(&f);
    let f2_sq = &f2 * &f2;
    let m = DMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (i2, j2) = (c / d, c % d);
        let third = match convention {
            WickConvention::Isserlis => ftf[(i, i2)] * ftf[(j, j2)],
            WickConvention::RepeatedIndex => ftf[(i, i2)] * ftf[(i, j2)],
        };
        ftf[(i, j)] * ftf[(i2, j2)] + ftf[(i, j2)] * ftf[(i2, j)] + third
    });
    let f2_conj = f2.map(|z| z.conj());
    let prod = &f2_conj * f2_sq.component_mul(&m) * &f2_conj;
    let imag_residue = prod.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    let herm = &prod - prod.adjoint();
    let hermitian_residue = herm.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let tensor = Tensor4::new(d, d, prod.map(|z| z.re))?;
    Ok(DftClosedForm { tensor, imag_residue, hermitian_residue })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationGain {
    /// `(W⊗W) E[η'(f)² XXᵀ⊗XXᵀ]`.
    pub eu: Tensor4,
    /// `(W⊗W) E[v η'(f)² XXᵀ⊗XXᵀ]`.
    pub evu: Tensor4,
    /// `(W⊗W) d⁻² E[v η'(f)² C_XC_Xᵀ⊗C_XC_Xᵀ]`, or the uncompressed term
    /// again when no augmentation is applied.
    pub evu_aug: Tensor4,
    pub gain: Tensor4,
    pub gain_stderr: DMatrix<f64>,
    pub gain_trace: f64,
    pub gain_trace_stderr: f64,
}

/// Monte Carlo terms of the least-squares classification sandwich for the
/// quadratic two-layer network `f(W, x) = ‖Wx‖²/2` with link `η`. With
/// `circular = false` the averaged term uses `XXᵀ` and the gain vanishes.
pub fn classification_gain<R, S>(
    w: &DMatrix<f64>,
    eta: &dyn Fn(f64) -> f64,
    eta_prime: &dyn Fn(f64) -> f64,
    mut sampler: S,
    n_mc: usize,
    circular: bool,
    rng: &mut R,
) -> Result<ClassificationGain>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> DVector<f64>,
{
    let (p, d) = w.shape();
    check_dims(p, d)?;
    if n_mc < 2 {
        return Err(AugError::InvalidConfig("need at least two Monte Carlo draws".into()));
    }
    let (rows, cols) = (p * p, d * d);
    let mut eu = MatrixAccumulator::new(rows, cols);
    let mut evu = MatrixAccumulator::new(rows, cols);
    let mut evu_aug = MatrixAccumulator::new(rows, cols);
    let mut gain = MatrixAccumulator::new(rows, cols);
    let mut traces = Vec::with_capacity(n_mc);
    let dd = (d * d) as f64;
    for _ in 0..n_mc {
        let x = sampler(rng);
        if x.len() != d {
            return Err(AugError::DimensionMismatch { expected: d, got: x.len() });
        }
        let u = w * &x;
        let f = 0.5 * u.norm_squared();
        let e = eta(f);
        let ep2 = eta_prime(f).powi(2);
        let v = e * (1.0 - e);
        let uxt = &u * x.transpose();
        let plain = linalg::kron(&uxt, &uxt);
        let aug = if circular {
            let c = circulant(&x);
            let ws = w * (&c * c.transpose());
            linalg::kron(&ws, &ws) / dd
        } else {
            plain.clone()
        };
        eu.push(&(&plain * ep2));
        evu.push(&(&plain * (v * ep2)));
        evu_aug.push(&(&aug * (v * ep2)));
        let g = (&plain - &aug) * (v * ep2);
        let t = Tensor4::new(p, d, g.clone())?.fisher_trace();
        traces.push(t);
        gain.push(&g);
    }
    let (gain_trace, gain_trace_stderr) = linalg::mean_stderr(&traces);
    Ok(ClassificationGain {
        eu: Tensor4::new(p, d, eu.mean())?,
        evu: Tensor4::new(p, d, evu.mean())?,
        evu_aug: Tensor4::new(p, d, evu_aug.mean())?,
        gain: Tensor4::new(p, d, gain.mean())?,
        gain_stderr: gain.stderr(),
        gain_trace,
        gain_trace_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_from_seed, AugRng};
    use rand_distr::{Distribution, StandardNormal};

    fn normal(d: usize) -> impl FnMut(&mut AugRng) -> DVector<f64> {
        move |rng: &mut AugRng| DVector::from_fn(d, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn circulant_columns_are_shifts() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let c = circulant(&x);
        assert_eq!(c.column(0), x.column(0));
        assert_eq!(c.column(1).into_owned(), DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(circulant(&DVector::from_element(1, 2.5))[(0, 0)], 2.5);
    }

    #[test]
    fn fixed_input_single_entry() {
        let w = DMatrix::identity(2, 2);
        let mut rng = rng_from_seed(0);
        let est = fisher_tensor_2lnn(&w, |_: &mut AugRng| DVector::from_vec(vec![1.0, 0.0]), 3, &mut rng).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 0)] = 1.0;
        assert_eq!(est.mean.entries, expected);
    }

    #[test]
    fn one_dimensional_closed_form_is_third_moment() {
        let r = dft_fourth_moment_closed_form(1, WickConvention::Isserlis).unwrap();
        assert!((r.tensor.entries[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_real_and_hermitian() {
        for d in [2, 3, 4, 5] {
            let r = dft_fourth_moment_closed_form(d, WickConvention::Isserlis).unwrap();
            assert!(r.imag_residue < 1e-8);
            assert!(r.hermitian_residue < 1e-10);
            assert!(linalg::max_abs(&(&r.tensor.entries - r.tensor.entries.transpose())) < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_direct_expectation_d2() {
        // oracle: E over X ~ N(0, I_2) of d⁻² (CCᵀ ⊗ CCᵀ), computed from
        // Gaussian moments of the entries of CCᵀ = [[a, b], [b, a]] with
        // a = x1² + x2², b = 2 x1 x2: E a² = 8, E b² = 4, E ab = 0.
        let mut oracle = DMatrix::zeros(4, 4);
        let s = |i: usize, j: usize| if i == j { 'a' } else { 'b' };
        for r in 0..4 {
            for c in 0..4 {
                let (i, i2, j, j2) = (r / 2, r % 2, c / 2, c % 2);
                let pair = (s(i, j), s(i2, j2));
                let m = match pair {
                    ('a', 'a') => 8.0,
                    ('b', 'b') => 4.0,
                    _ => 0.0,
                };
                oracle[(r, c)] = m / 4.0;
            }
        }
        let r = dft_fourth_moment_closed_form(2, WickConvention::Isserlis).unwrap();
        assert!(linalg::max_abs(&(r.tensor.entries - &oracle)) < 1e-12);
        let repeated = dft_fourth_moment_closed_form(2, WickConvention::RepeatedIndex).unwrap();
        assert!(linalg::max_abs(&(repeated.tensor.entries - &oracle)) > 0.1);
    }

    #[test]
    fn fisher_trace_expectation() {
        // with W = I_p-padded identity the trace is ‖x‖⁴, mean d(d + 2)
        let d = 3;
        let mut rng = rng_from_seed(1);
        let w = DMatrix::identity(d, d);
        let est = fisher_tensor_2lnn(&w, normal(d), 40_000, &mut rng).unwrap();
        let t = est.mean.fisher_trace();
        assert!((t - 15.0).abs() < 0.5, "{t}");
    }

    #[test]
    fn information_loss_nonnegative_on_random_directions() {
        let d = 3;
        let p = 2;
        let mut rng = rng_from_seed(2);
        let w = DMatrix::from_fn(p, d, |_, _| StandardNormal.sample(&mut rng));
        let mut rng_a = rng_from_seed(10);
        let mut rng_b = rng_from_seed(10);
        let full = fisher_tensor_2lnn(&w, normal(d), 20_000, &mut rng_a).unwrap().mean.as_fisher_matrix();
        let avg = augmented_fisher_tensor_2lnn(&w, normal(d), 20_000, &mut rng_b).unwrap().mean.as_fisher_matrix();
        // per-draw quadratic forms give the standard error of the difference
        for _ in 0..10 {
            let mut v = DVector::from_fn(p * d, |_, _| StandardNormal.sample(&mut rng));
            v /= v.norm();
            let mut draws = rng_from_seed(10);
            let mut sample = normal(d);
            let vals: Vec<f64> = (0..20_000)
                .map(|_| {
                    let x = sample(&mut draws);
                    let g = (&w * &x) * x.transpose();
                    let c = circulant(&x);
                    let gbar = &w * (&c * c.transpose()) / d as f64;
                    let flat = |m: &DMatrix<f64>| DVector::from_fn(p * d, |r, _| m[(r / d, r % d)]);
                    v.dot(&flat(&g)).powi(2) - v.dot(&flat(&gbar)).powi(2)
                })
                .collect();
            let (mean, se) = linalg::mean_stderr(&vals);
            let q = (v.transpose() * (&full - &avg) * &v)[(0, 0)];
            assert!((q - mean).abs() < 1e-8 * (1.0 + q.abs()));
            assert!(q >= -3.0 * se);
        }
    }

    #[test]
    fn classification_gain_vanishes_without_augmentation() {
        let mut rng = rng_from_seed(3);
        let w = DMatrix::identity(2, 2);
        let sig = |t: f64| 1.0 / (1.0 + (-t).exp());
        let dsig = |t: f64| sig(t) * (1.0 - sig(t));
        let r = classification_gain(&w, &sig, &dsig, normal(2), 200, false, &mut rng).unwrap();
        assert_eq!(linalg::max_abs(&r.gain.entries), 0.0);
        let r = classification_gain(&w, &sig, &dsig, normal(2), 200, true, &mut rng).unwrap();
        assert!(linalg::max_abs(&(&r.gain.entries - r.gain.entries.transpose())) < 1e-12);
    }

    #[test]
    fn cutoff_enforced() {
        assert!(matches!(dft_fourth_moment_closed_form(17, WickConvention::Isserlis), Err(AugError::Capability(_))));
    }
}
