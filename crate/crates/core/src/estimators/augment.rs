use nalgebra::DVector;
use rand::Rng;

use crate::error::{AugError, Result};
use crate::group::{FiniteGroup, GroupElement, ENUMERATION_CUTOFF};

/// Dataset-valued statistic.
pub type DatasetFn<'a> = dyn Fn(&[DVector<f64>]) -> DVector<f64> + Sync + 'a;

/// How a group acts on a whole dataset.
#[derive(Debug, Clone, Copy)]
pub enum DatasetGroup<'g> {
    /// The same transform applied to every point.
    Shared(&'g FiniteGroup),
    /// An independent transform per point (the product group `G^n`).
    PerPoint(&'g FiniteGroup),
    /// A row-selecting semigroup (subsampling).
    Rows(&'g FiniteGroup),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetAveraging {
    Exact,
    Sampled(usize),
}

fn transform_dataset(g: &GroupElement, data: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    g.apply_all(data)
}

fn accumulate(acc: &mut Option<DVector<f64>>, v: DVector<f64>) -> Result<()> {
    match acc {
        None => *acc = Some(v),
        Some(a) if a.len() == v.len() => *a += v,
        Some(a) => return Err(AugError::DimensionMismatch { expected: a.len(), got: v.len() }),
    }
    Ok(())
}

/// `θ̂_G(x) = E_g θ̂(g x)` over transformed datasets, exactly or from `k`
/// sampled transforms.
pub fn augment_estimator<R: Rng + ?Sized>(
    base: &DatasetFn,
    data: &[DVector<f64>],
    group: DatasetGroup,
    mode: DatasetAveraging,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if data.is_empty() {
        return Err(AugError::EmptyInput("no data".into()));
    }
    let mut acc = None;
    let count;
    match (group, mode) {
        (_, DatasetAveraging::Sampled(0)) => {
            return Err(AugError::InvalidConfig("need at least one sampled transform".into()))
        }
        (DatasetGroup::Shared(g), DatasetAveraging::Exact) => {
            let elems = g.elements()?;
            for e in elems {
                accumulate(&mut acc, base(&transform_dataset(e, data)?))?;
            }
            count = elems.len();
        }
        (DatasetGroup::Shared(g), DatasetAveraging::Sampled(k)) => {
            for _ in 0..k {
                accumulate(&mut acc, base(&transform_dataset(&g.haar_sample(rng), data)?))?;
            }
            count = k;
        }
        (DatasetGroup::PerPoint(g), DatasetAveraging::Exact) => {
            let elems = g.elements()?;
            let m = elems.len();
            let total = (0..data.len())
                .try_fold(1usize, |acc, _| acc.checked_mul(m).filter(|&t| t <= ENUMERATION_CUTOFF))
                .ok_or_else(|| {
                    AugError::Capability(format!("product group of order {m}^{} is too large", data.len()))
                })?;
            // mixed-radix walk over all assignments of an element to each point
            let mut digits = vec![0usize; data.len()];
            for _ in 0..total {
                let moved: Vec<DVector<f64>> =
                    data.iter().zip(&digits).map(|(x, &d)| elems[d].apply(x)).collect::<Result<_>>()?;
                accumulate(&mut acc, base(&moved))?;
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d < m {
                        break;
                    }
                    *d = 0;
                }
            }
            count = total;
        }
        (DatasetGroup::PerPoint(g), DatasetAveraging::Sampled(k)) => {
            for _ in 0..k {
                let moved: Vec<DVector<f64>> =
                    data.iter().map(|x| g.haar_sample(rng).apply(x)).collect::<Result<_>>()?;
                accumulate(&mut acc, base(&moved))?;
            }
            count = k;
        }
        (DatasetGroup::Rows(g), DatasetAveraging::Exact) => {
            let elems = g.elements()?;
            for e in elems {
                accumulate(&mut acc, base(&e.select_rows(data)?))?;
            }
            count = elems.len();
        }
        (DatasetGroup::Rows(g), DatasetAveraging::Sampled(k)) => {
            for _ in 0..k {
                accumulate(&mut acc, base(&g.haar_sample(rng).select_rows(data)?))?;
            }
            count = k;
        }
    }
    Ok(acc.expect("at least one transform") / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use nalgebra::{Matrix2, Vector2};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn first_entry_under_sign_group_averages_to_zero() {
        let g = FiniteGroup::sign(2).unwrap();
        let base = |d: &[DVector<f64>]| v(&[d[0][0]]);
        let data = vec![v(&[1.3, 2.0]), v(&[0.1, -4.0])];
        let mut rng = rng_from_seed(0);
        let out = augment_estimator(&base, &data, DatasetGroup::Shared(&g), DatasetAveraging::Exact, &mut rng).unwrap();
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn invariant_base_unchanged() {
        let g = FiniteGroup::cyclic_shift(3).unwrap();
        let base = |d: &[DVector<f64>]| v(&[d.iter().map(|x| x.sum()).sum()]);
        let data = vec![v(&[1.0, 2.0, 3.0]), v(&[0.5, 0.0, -1.0])];
        let mut rng = rng_from_seed(0);
        for mode in [DatasetAveraging::Exact, DatasetAveraging::Sampled(7)] {
            let out = augment_estimator(&base, &data, DatasetGroup::PerPoint(&g), mode, &mut rng).unwrap();
            assert!((out[0] - base(&data)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn ols_under_per_point_flip_matches_enumeration() {
        // points are (x1, x2) with response folded in: regress x2 on x1 through the origin
        let data = vec![v(&[1.0, 2.0]), v(&[0.5, -1.0]), v(&[-2.0, 0.3]), v(&[1.5, 1.5])];
        let ols = |d: &[DVector<f64>]| {
            let sxy: f64 = d.iter().map(|p| p[0] * p[1]).sum();
            let sxx: f64 = d.iter().map(|p| p[0] * p[0]).sum();
            v(&[sxy / sxx])
        };
        let g = FiniteGroup::flip(2).unwrap();
        let mut rng = rng_from_seed(0);
        let got =
            augment_estimator(&ols, &data, DatasetGroup::PerPoint(&g), DatasetAveraging::Exact, &mut rng).unwrap();

        // independent oracle: 2^4 bit patterns with explicit swap matrices
        let swap = Matrix2::new(0.0, 1.0, 1.0, 0.0);
        let mut total = 0.0;
        for mask in 0..16u32 {
            let moved: Vec<DVector<f64>> = data
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let q = Vector2::new(p[0], p[1]);
                    let r = if mask >> i & 1 == 1 { swap * q } else { q };
                    v(&[r[0], r[1]])
                })
                .collect();
            total += ols(&moved)[0];
        }
        assert!((got[0] - total / 16.0).abs() < 1e-12);
    }

    #[test]
    fn product_group_size_checked() {
        let g = FiniteGroup::flip(1).unwrap();
        let data: Vec<_> = (0..20).map(|i| v(&[i as f64])).collect();
        let base = |d: &[DVector<f64>]| v(&[d[0][0]]);
        let mut rng = rng_from_seed(0);
        let r = augment_estimator(&base, &data, DatasetGroup::PerPoint(&g), DatasetAveraging::Exact, &mut rng);
        assert!(matches!(r, Err(AugError::Capability(_))));
    }
}
