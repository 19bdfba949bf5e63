use nalgebra::DVector;
use rand::Rng;

use super::augment::{augment_estimator, DatasetAveraging, DatasetGroup};
use crate::error::{AugError, Result};
use crate::group::FiniteGroup;

/// U-statistic of order `r`: the kernel averaged over `r`-subsets of the data,
/// i.e. the kernel augmented by the subsampling semigroup.
pub fn u_statistic<R: Rng + ?Sized>(
    kernel: &(dyn Fn(&[DVector<f64>]) -> f64 + Sync),
    data: &[DVector<f64>],
    r: usize,
    mode: DatasetAveraging,
    rng: &mut R,
) -> Result<f64> {
    if r > data.len() {
        return Err(AugError::InvalidConfig(format!("order {r} exceeds sample size {}", data.len())));
    }
    let semigroup = FiniteGroup::subsample(data.len(), r)?;
    let wrapped = |d: &[DVector<f64>]| DVector::from_element(1, kernel(d));
    Ok(augment_estimator(&wrapped, data, DatasetGroup::Rows(&semigroup), mode, rng)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn pts(xs: &[f64]) -> Vec<DVector<f64>> {
        xs.iter().map(|&x| DVector::from_element(1, x)).collect()
    }

    fn half_sq_diff(t: &[DVector<f64>]) -> f64 {
        0.5 * (t[0][0] - t[1][0]).powi(2)
    }

    #[test]
    fn variance_kernel_on_small_set() {
        let mut rng = rng_from_seed(0);
        let u = u_statistic(&half_sq_diff, &pts(&[1.0, 2.0, 3.0]), 2, DatasetAveraging::Exact, &mut rng).unwrap();
        assert!((u - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_order_is_kernel_itself() {
        let data = pts(&[0.3, 1.1, -2.0, 4.0]);
        let k = |t: &[DVector<f64>]| t.iter().map(|x| x[0].powi(3)).sum::<f64>();
        let mut rng = rng_from_seed(0);
        let u = u_statistic(&k, &data, 4, DatasetAveraging::Exact, &mut rng).unwrap();
        assert_eq!(u, k(&data));
    }

    #[test]
    fn mean_kernel_gives_sample_mean() {
        let data = pts(&[0.3, 1.1, -2.0, 4.0, 7.5]);
        let mean = |t: &[DVector<f64>]| t.iter().map(|x| x[0]).sum::<f64>() / t.len() as f64;
        let mut rng = rng_from_seed(0);
        for r in 1..=5 {
            let u = u_statistic(&mean, &data, r, DatasetAveraging::Exact, &mut rng).unwrap();
            assert!((u - mean(&data)).abs() < 1e-12);
        }
    }

    #[test]
    fn order_above_size_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(u_statistic(&half_sq_diff, &pts(&[1.0]), 2, DatasetAveraging::Exact, &mut rng).is_err());
    }
}
