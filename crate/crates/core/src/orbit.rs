//! Orbit averaging `f̄(x) = E_g f(gx)`, exact or by `k` sampled transforms,
//! and the variance identities it satisfies on empirical measures.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{AugError, Result};
use crate::group::{FiniteGroup, GroupElement};
use crate::linalg;
use crate::rng::derived_rng;

/// Vector-valued statistic of a single data point.
pub type PointFn<'a> = dyn Fn(&DVector<f64>) -> DVector<f64> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingMode {
    Exact,
    /// `k` i.i.d. uniform draws per point; point `i` uses seed `seed ^ i`.
    MonteCarlo {
        k: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitAverager<'g> {
    group: &'g FiniteGroup,
    mode: AveragingMode,
}

/// The three terms of the law of total covariance, all under one joint
/// empirical measure over (point, transform).
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceDecomposition {
    pub cov_f: DMatrix<f64>,
    pub cov_fbar: DMatrix<f64>,
    pub mean_within_orbit_cov: DMatrix<f64>,
    /// `max |cov_f - cov_fbar - mean_within_orbit_cov|`.
    pub residual: f64,
}

impl VarianceDecomposition {
    /// Smallest eigenvalue of `cov_f - cov_fbar` (nonnegative in exact arithmetic).
    pub fn loewner_gap(&self) -> f64 {
        linalg::min_eigenvalue(&(&self.cov_f - &self.cov_fbar))
    }

    /// Build from `values[i][j] = f(g_j x_i)`, every point having the same
    /// number of transforms.
    pub fn from_values(values: &[Vec<DVector<f64>>]) -> Result<Self> {
        if values.is_empty() || values[0].is_empty() {
            return Err(AugError::EmptyInput("no values to decompose".into()));
        }
        let k = values[0].len();
        if values.iter().any(|v| v.len() != k) {
            return Err(AugError::InvalidConfig("ragged transform counts".into()));
        }
        let flat: Vec<DVector<f64>> = values.iter().flatten().cloned().collect();
        let cov_f = linalg::covariance(&flat)?;
        let means: Vec<DVector<f64>> = values.iter().map(|row| linalg::mean_vector(row)).collect::<Result<_>>()?;
        let cov_fbar = linalg::covariance(&means)?;
        let p = cov_f.nrows();
        let mut within = DMatrix::zeros(p, p);
        for row in values {
            within += linalg::covariance(row)?;
        }
        within /= values.len() as f64;
        let residual = linalg::max_abs(&(&cov_f - &cov_fbar - &within));
        Ok(Self { cov_f, cov_fbar, mean_within_orbit_cov: within, residual })
    }
}

impl<'g> OrbitAverager<'g> {
    pub fn new(group: &'g FiniteGroup, mode: AveragingMode) -> Result<Self> {
        match mode {
            AveragingMode::Exact => {
                group.elements()?;
            }
            AveragingMode::MonteCarlo { k: 0, .. } => {
                return Err(AugError::InvalidConfig("Monte Carlo averaging needs k >= 1".into()))
            }
            AveragingMode::MonteCarlo { .. } => {}
        }
        Ok(Self { group, mode })
    }

    pub fn exact(group: &'g FiniteGroup) -> Result<Self> {
        Self::new(group, AveragingMode::Exact)
    }

    pub fn monte_carlo(group: &'g FiniteGroup, k: usize, seed: u64) -> Result<Self> {
        Self::new(group, AveragingMode::MonteCarlo { k, seed })
    }

    pub fn group(&self) -> &'g FiniteGroup {
        self.group
    }

    pub fn mode(&self) -> AveragingMode {
        self.mode
    }

    fn require_exact(&self, what: &str) -> Result<()> {
        match self.mode {
            AveragingMode::Exact => Ok(()),
            _ => Err(AugError::Capability(format!("{what} needs exact averaging"))),
        }
    }

    /// The transforms averaged over at data point `index`.
    pub fn transforms_for(&self, index: usize) -> Vec<GroupElement> {
        match self.mode {
            AveragingMode::Exact => self.group.elements().expect("checked in new").to_vec(),
            AveragingMode::MonteCarlo { k, seed } => {
                let mut rng = derived_rng(seed, index as u64);
                (0..k).map(|_| self.group.haar_sample(&mut rng)).collect()
            }
        }
    }

    /// `f(g x)` for each transform used at point `index`.
    pub fn orbit_values(&self, f: &PointFn, x: &DVector<f64>, index: usize) -> Result<Vec<DVector<f64>>> {
        self.transforms_for(index).iter().map(|g| Ok(f(&g.apply(x)?))).collect()
    }

    /// `f̄(x)` treating `x` as data point `index` (only matters for seeding).
    pub fn average_at(&self, f: &PointFn, x: &DVector<f64>, index: usize) -> Result<DVector<f64>> {
        let vals = self.orbit_values(f, x, index)?;
        let p = vals[0].len();
        if let Some(bad) = vals.iter().find(|v| v.len() != p) {
            return Err(AugError::DimensionMismatch { expected: p, got: bad.len() });
        }
        linalg::mean_vector(&vals)
    }

    pub fn average(&self, f: &PointFn, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.average_at(f, x, 0)
    }

    /// `f̄` at every data point; point `i` is seeded with index `i`.
    pub fn average_dataset(&self, f: &PointFn, data: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        data.par_iter().enumerate().map(|(i, x)| self.average_at(f, x, i)).collect()
    }

    /// `max_{x, g} ‖f̄(gx) - f̄(x)‖`; zero for true groups, possibly not for
    /// semigroups.
    pub fn invariance_defect(&self, f: &PointFn, points: &[DVector<f64>]) -> Result<f64> {
        self.require_exact("invariance defect")?;
        let mut worst = 0.0_f64;
        for x in points {
            let base = self.average(f, x)?;
            for g in self.group.elements()? {
                let moved = self.average(f, &g.apply(x)?)?;
                worst = worst.max((moved - &base).norm());
            }
        }
        Ok(worst)
    }

    /// Law of total covariance on the empirical measure of `data` times the
    /// uniform measure on the group.
    pub fn total_variance_decomposition(&self, f: &PointFn, data: &[DVector<f64>]) -> Result<VarianceDecomposition> {
        self.require_exact("total variance decomposition")?;
        if data.len() < 2 {
            return Err(AugError::EmptyInput("need at least two data points".into()));
        }
        let values: Vec<Vec<DVector<f64>>> =
            data.par_iter().enumerate().map(|(i, x)| self.orbit_values(f, x, i)).collect::<Result<_>>()?;
        VarianceDecomposition::from_values(&values)
    }

    /// Returns `(mean_i φ(f̄(x_i)), mean_{i,g} φ(f(g x_i)))`; Jensen gives lhs <= rhs.
    pub fn jensen_contraction_check(
        &self,
        f: &PointFn,
        phi: &(dyn Fn(&DVector<f64>) -> f64 + Sync),
        data: &[DVector<f64>],
    ) -> Result<(f64, f64)> {
        self.require_exact("Jensen check")?;
        if data.is_empty() {
            return Err(AugError::EmptyInput("no data".into()));
        }
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (i, x) in data.iter().enumerate() {
            let vals = self.orbit_values(f, x, i)?;
            lhs += phi(&linalg::mean_vector(&vals)?);
            rhs += vals.iter().map(phi).sum::<f64>() / vals.len() as f64;
        }
        let n = data.len() as f64;
        Ok((lhs / n, rhs / n))
    }
}

/// Decomposition with the within-orbit term replaced by the spread of `k`
/// sampled transforms, shared by every data point. Without replacement and
/// `k = |G|` this is the exact decomposition.
pub fn finite_aug_decomposition<R: Rng + ?Sized>(
    f: &PointFn,
    group: &FiniteGroup,
    k: usize,
    data: &[DVector<f64>],
    rng: &mut R,
    with_replacement: bool,
) -> Result<VarianceDecomposition> {
    if k == 0 {
        return Err(AugError::InvalidConfig("k must be at least 1".into()));
    }
    if data.len() < 2 {
        return Err(AugError::EmptyInput("need at least two data points".into()));
    }
    let transforms: Vec<GroupElement> = if with_replacement {
        (0..k).map(|_| group.haar_sample(rng)).collect()
    } else {
        let elems = group.elements()?;
        if k > elems.len() {
            return Err(AugError::InvalidConfig(format!("k = {k} exceeds group order {}", elems.len())));
        }
        index::sample(rng, elems.len(), k).into_iter().map(|i| elems[i].clone()).collect()
    };
    let values: Vec<Vec<DVector<f64>>> = data
        .iter()
        .map(|x| transforms.iter().map(|g| Ok(f(&g.apply(x)?))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    VarianceDecomposition::from_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn gaussian_data(n: usize, d: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))).collect()
    }

    fn first(x: &DVector<f64>) -> DVector<f64> {
        v(&[x[0]])
    }

    #[test]
    fn flip_average_of_first_coordinate() {
        let g = FiniteGroup::flip(2).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        assert_eq!(avg.average(&first, &v(&[1.0, 3.0])).unwrap(), v(&[2.0]));
    }

    #[test]
    fn cyclic_average_of_first_coordinate() {
        let g = FiniteGroup::cyclic_shift(3).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        // shifts of (1,2,3) have first coordinates 1, 3, 2
        assert_eq!(avg.average(&first, &v(&[1.0, 2.0, 3.0])).unwrap(), v(&[2.0]));
    }

    #[test]
    fn invariant_function_is_unchanged() {
        let g = FiniteGroup::cyclic_shift(4).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        let sum = |x: &DVector<f64>| v(&[x.sum()]);
        let x = v(&[0.3, -1.0, 2.0, 5.0]);
        assert!((avg.average(&sum, &x).unwrap()[0] - x.sum()).abs() < 1e-14);
    }

    #[test]
    fn exact_mode_rejects_sampler_groups() {
        let g = FiniteGroup::orthogonal(3).unwrap();
        assert!(OrbitAverager::exact(&g).is_err());
        assert!(OrbitAverager::monte_carlo(&g, 0, 1).is_err());
        assert!(OrbitAverager::monte_carlo(&g, 4, 1).is_ok());
    }

    #[test]
    fn defect_zero_for_groups_positive_for_semigroup() {
        let data = gaussian_data(100, 3, 1);
        let g = FiniteGroup::flip(3).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        let f = |x: &DVector<f64>| v(&[x[0] * x[1], x[2].sin()]);
        assert!(avg.invariance_defect(&f, &data).unwrap() < 1e-10);

        let s = FiniteGroup::sign(2).unwrap();
        let sq = |x: &DVector<f64>| x.component_mul(x);
        let avg = OrbitAverager::exact(&s).unwrap();
        assert_eq!(avg.invariance_defect(&sq, &gaussian_data(20, 2, 2)).unwrap(), 0.0);

        let sub = FiniteGroup::subsample(3, 2).unwrap();
        let avg = OrbitAverager::exact(&sub).unwrap();
        let row_sum = |x: &DVector<f64>| v(&[x.sum()]);
        assert!(avg.invariance_defect(&row_sum, &[v(&[1.0, 2.0, 3.0])]).unwrap() > 0.1);
    }

    #[test]
    fn total_variance_identity_and_trivial_group() {
        let data = gaussian_data(50, 4, 3);
        let id = |x: &DVector<f64>| x.clone();
        let g = FiniteGroup::flip(4).unwrap();
        let dec = OrbitAverager::exact(&g).unwrap().total_variance_decomposition(&id, &data).unwrap();
        assert!(dec.residual < 1e-12);
        assert!(dec.loewner_gap() > -1e-10);

        let t = FiniteGroup::trivial(4).unwrap();
        let dec = OrbitAverager::exact(&t).unwrap().total_variance_decomposition(&id, &data).unwrap();
        assert_eq!(dec.mean_within_orbit_cov, DMatrix::zeros(4, 4));
        assert!(linalg::max_abs(&(&dec.cov_f - &dec.cov_fbar)) < 1e-15);
    }

    #[test]
    fn flip_cov_fbar_matches_projection() {
        // Cov((x + Jx)/2) = (I + J)/2 for standard Gaussian x in R^2
        let data = gaussian_data(10_000, 2, 4);
        let g = FiniteGroup::flip(2).unwrap();
        let id = |x: &DVector<f64>| x.clone();
        let dec = OrbitAverager::exact(&g).unwrap().total_variance_decomposition(&id, &data).unwrap();
        // entries of the sample covariance of (x1+x2)/2 have sd about sqrt(2/n)*0.5
        let tol = 3.0 * (2.0_f64 / 10_000.0).sqrt();
        for i in 0..2 {
            for j in 0..2 {
                assert!((dec.cov_fbar[(i, j)] - 0.5).abs() < tol);
            }
        }
    }

    #[test]
    fn jensen_cases() {
        let data = gaussian_data(30, 3, 5);
        let id = |x: &DVector<f64>| x.clone();
        let s = FiniteGroup::sign(3).unwrap();
        let avg = OrbitAverager::exact(&s).unwrap();
        let (l, r) = avg.jensen_contraction_check(&id, &|y| y.norm_squared(), &data).unwrap();
        assert_eq!(l, 0.0);
        assert!(r > 0.0);

        let f = FiniteGroup::flip(3).unwrap();
        let avg = OrbitAverager::exact(&f).unwrap();
        let (l, r) = avg.jensen_contraction_check(&id, &|y| 2.0 * y[0] - y[2] + 1.0, &data).unwrap();
        assert!((l - r).abs() < 1e-12);
        let (l, r) = avg.jensen_contraction_check(&id, &|y| y[0].abs(), &data).unwrap();
        assert!(l <= r + 1e-12);
    }

    #[test]
    fn finite_aug_edge_cases() {
        let data = gaussian_data(40, 3, 6);
        let id = |x: &DVector<f64>| x.clone();
        let g = FiniteGroup::cyclic_shift(3).unwrap();
        let mut rng = rng_from_seed(1);
        let one = finite_aug_decomposition(&id, &g, 1, &data, &mut rng, true).unwrap();
        assert_eq!(one.mean_within_orbit_cov, DMatrix::zeros(3, 3));
        assert!(linalg::max_abs(&(&one.cov_f - &one.cov_fbar)) < 1e-15);

        let full = finite_aug_decomposition(&id, &g, 3, &data, &mut rng, false).unwrap();
        let exact = OrbitAverager::exact(&g).unwrap().total_variance_decomposition(&id, &data).unwrap();
        assert!(linalg::max_abs(&(&full.cov_fbar - &exact.cov_fbar)) < 1e-12);
        assert!(linalg::max_abs(&(&full.mean_within_orbit_cov - &exact.mean_within_orbit_cov)) < 1e-12);

        let s = FiniteGroup::sign(3).unwrap();
        let two = finite_aug_decomposition(&id, &s, 2, &data, &mut rng, true).unwrap();
        assert!(two.residual < 1e-12);
    }

    #[test]
    fn monte_carlo_is_mean_preserving_and_reproducible() {
        let data = gaussian_data(25, 4, 7);
        let g = FiniteGroup::orthogonal(4).unwrap();
        let avg = OrbitAverager::monte_carlo(&g, 5, 99).unwrap();
        let f = |x: &DVector<f64>| v(&[x[0], x[1] * x[2]]);
        let fbar = avg.average_dataset(&f, &data).unwrap();
        let mut joint = DVector::zeros(2);
        for (i, x) in data.iter().enumerate() {
            for val in avg.orbit_values(&f, x, i).unwrap() {
                joint += val;
            }
        }
        joint /= (data.len() * 5) as f64;
        let mean_fbar = linalg::mean_vector(&fbar).unwrap();
        assert!((joint - mean_fbar).amax() < 1e-14);
        assert_eq!(fbar, avg.average_dataset(&f, &data).unwrap());
    }

    #[test]
    fn averaging_is_idempotent() {
        let g = FiniteGroup::cyclic_shift(4).unwrap();
        let avg = OrbitAverager::exact(&g).unwrap();
        let f = |x: &DVector<f64>| v(&[x[0] * x[0] + x[1]]);
        let fbar = |x: &DVector<f64>| avg.average(&f, x).unwrap();
        let x = v(&[1.0, -2.0, 0.5, 3.0]);
        let once = avg.average(&f, &x).unwrap();
        let twice = avg.average(&fbar, &x).unwrap();
        assert!((once - twice).amax() < 1e-14);
    }
}
