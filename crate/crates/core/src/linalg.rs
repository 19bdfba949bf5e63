//! Small dense linear-algebra and summary-statistic helpers shared by the
//! numerical modules. Everything here works on `nalgebra` dynamic matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{AugError, Result};

/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn mean_vector(points: &[DVector<f64>]) -> Result<DVector<f64>> {
    let first = points.first().ok_or_else(|| AugError::EmptyInput("no points to average".into()))?;
    let mut acc = DVector::zeros(first.len());
    for p in points {
        if p.len() != first.len() {
            return Err(AugError::DimensionMismatch { expected: first.len(), got: p.len() });
        }
        acc += p;
    }
    Ok(acc / points.len() as f64)
}

/// Covariance with `1/N` normalisation (the covariance of the empirical
/// measure, not the unbiased estimator).
pub fn covariance(points: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let mean = mean_vector(points)?;
    let p = mean.len();
    let mut acc = DMatrix::zeros(p, p);
    for x in points {
        let c = x - &mean;
        acc.ger(1.0, &c, &c, 1.0);
    }
    Ok(acc / points.len() as f64)
}

pub fn outer(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, rejecting anything with condition number above
/// [`SINGULAR_CONDITION`].
pub fn checked_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(AugError::InvalidDimension(format!("{what} is {}x{}", m.nrows(), m.ncols())));
    }
    let cond = condition_number(m);
    if !cond.is_finite() || cond > SINGULAR_CONDITION {
        return Err(AugError::Singular(format!("{what} has condition number {cond:e}")));
    }
    m.clone().try_inverse().ok_or_else(|| AugError::Singular(format!("{what} is not invertible")))
}

/// Orthonormal basis (as columns) of the null space of `m`, using singular
/// values below `threshold` (relative to 1, the matrices here are O(1)).
pub fn null_space(m: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    // pad to at least `cols` rows so the full right singular basis is returned
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= threshold {
            basis.push(v_t.row(k).transpose());
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Numerical rank via singular values above `threshold`.
pub fn rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > threshold).count()
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Sample mean and standard error (`sd / sqrt(n)`, with the `n-1` sd).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Entrywise mean and standard error of a sequence of equally-shaped matrices.
pub fn matrix_mean_stderr(samples: &[DMatrix<f64>]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let first = samples.first().ok_or_else(|| AugError::EmptyInput("no matrix samples".into()))?;
    let (r, c) = first.shape();
    let n = samples.len() as f64;
    let mut sum = DMatrix::zeros(r, c);
    let mut sq = DMatrix::zeros(r, c);
    for s in samples {
        sum += s;
        sq += s.component_mul(s);
    }
    let mean = &sum / n;
    let stderr = if samples.len() < 2 {
        DMatrix::zeros(r, c)
    } else {
        let mut se = DMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                let var = ((sq[(i, j)] - n * mean[(i, j)] * mean[(i, j)]) / (n - 1.0)).max(0.0);
                se[(i, j)] = (var / n).sqrt();
            }
        }
        se
    };
    Ok((mean, stderr))
}

/// Streaming accumulator for entrywise mean / stderr of matrix-valued samples.
#[derive(Debug, Clone)]
pub struct MatrixAccumulator {
    sum: DMatrix<f64>,
    sq: DMatrix<f64>,
    count: usize,
}

impl MatrixAccumulator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { sum: DMatrix::zeros(rows, cols), sq: DMatrix::zeros(rows, cols), count: 0 }
    }

    pub fn push(&mut self, m: &DMatrix<f64>) {
        self.sum += m;
        self.sq += m.component_mul(m);
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> DMatrix<f64> {
        &self.sum / self.count.max(1) as f64
    }

    pub fn stderr(&self) -> DMatrix<f64> {
        let n = self.count as f64;
        let mean = self.mean();
        if self.count < 2 {
            return DMatrix::zeros(mean.nrows(), mean.ncols());
        }
        DMatrix::from_fn(mean.nrows(), mean.ncols(), |i, j| {
            let var = ((self.sq[(i, j)] - n * mean[(i, j)] * mean[(i, j)]) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
    }
}
