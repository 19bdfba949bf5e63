//! Finite groups (and a few sampler-backed or semigroup relatives) acting on
//! `R^d`, with the uniform measure.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{AugError, Result};
use crate::linalg;

/// Groups with more elements than this are never enumerated.
pub const ENUMERATION_CUTOFF: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    CyclicShift,
    Flip,
    Sign,
    Permutation,
    SubsampleSemigroup { n: usize, r: usize },
    OrthogonalSampled,
    Trivial,
    Custom,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::CyclicShift => write!(f, "shift"),
            GroupKind::Flip => write!(f, "flip"),
            GroupKind::Sign => write!(f, "sign"),
            GroupKind::Permutation => write!(f, "perm"),
            GroupKind::SubsampleSemigroup { n, r } => write!(f, "subsample({n},{r})"),
            GroupKind::OrthogonalSampled => write!(f, "orthogonal"),
            GroupKind::Trivial => write!(f, "trivial"),
            GroupKind::Custom => write!(f, "custom"),
        }
    }
}

/// How a single element acts.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// `out[perm[j]] = signs[j] * x[j]`.
    SignedPermutation {
        perm: Vec<usize>,
        signs: Vec<f64>,
    },
    Dense(DMatrix<f64>),
    /// Keeps the listed rows (sorted) of an `n`-row dataset.
    Subset {
        n: usize,
        rows: Vec<usize>,
    },
    /// `x -> matrix * x + offset`; not linear unless the offset vanishes.
    Affine {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub index: usize,
    pub action: Action,
}

impl GroupElement {
    pub fn new(index: usize, action: Action) -> Self {
        Self { index, action }
    }

    pub fn dim(&self) -> usize {
        match &self.action {
            Action::SignedPermutation { perm, .. } => perm.len(),
            Action::Dense(m) => m.ncols(),
            Action::Subset { n, .. } => *n,
            Action::Affine { matrix, .. } => matrix.ncols(),
        }
    }

    /// Matrix of the linear action, `None` for subsets and affine maps.
    pub fn matrix(&self) -> Option<DMatrix<f64>> {
        match &self.action {
            Action::SignedPermutation { perm, signs } => {
                let d = perm.len();
                let mut m = DMatrix::zeros(d, d);
                for j in 0..d {
                    m[(perm[j], j)] = signs[j];
                }
                Some(m)
            }
            Action::Dense(m) => Some(m.clone()),
            Action::Subset { .. } | Action::Affine { .. } => None,
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.dim();
        if x.len() != d {
            return Err(AugError::DimensionMismatch { expected: d, got: x.len() });
        }
        Ok(match &self.action {
            Action::SignedPermutation { perm, signs } => {
                let mut out = DVector::zeros(d);
                for j in 0..d {
                    out[perm[j]] = signs[j] * x[j];
                }
                out
            }
            Action::Dense(m) => m * x,
            // vectors keep their ambient length; unselected coordinates are zeroed
            Action::Subset { rows, .. } => {
                let mut out = DVector::zeros(d);
                for &r in rows {
                    out[r] = x[r];
                }
                out
            }
            Action::Affine { matrix, offset } => matrix * x + offset,
        })
    }

    /// Apply to every point of a dataset (pointwise action).
    pub fn apply_all(&self, data: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        data.iter().map(|x| self.apply(x)).collect()
    }

    /// Row selection for subset elements: `{0,2}` maps rows `(a,b,c)` to `(a,c)`.
    pub fn select_rows<T: Clone>(&self, rows: &[T]) -> Result<Vec<T>> {
        match &self.action {
            Action::Subset { n, rows: keep } => {
                if rows.len() != *n {
                    return Err(AugError::DimensionMismatch { expected: *n, got: rows.len() });
                }
                Ok(keep.iter().map(|&i| rows[i].clone()).collect())
            }
            _ => Err(AugError::Capability("row selection needs a subset element".into())),
        }
    }

    pub fn is_identity(&self) -> bool {
        match &self.action {
            Action::SignedPermutation { perm, signs } => {
                perm.iter().enumerate().all(|(j, &p)| p == j) && signs.iter().all(|&s| s == 1.0)
            }
            Action::Dense(m) => linalg::max_abs(&(m - DMatrix::identity(m.nrows(), m.ncols()))) < 1e-14,
            Action::Subset { n, rows } => rows.len() == *n,
            Action::Affine { matrix, offset } => {
                offset.iter().all(|&v| v == 0.0)
                    && linalg::max_abs(&(matrix - DMatrix::identity(matrix.nrows(), matrix.ncols()))) < 1e-14
            }
        }
    }

    /// Composite `self ∘ other` (apply `other` first). Index is left at 0.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim() != other.dim() {
            return Err(AugError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let action = match (&self.action, &other.action) {
            (Action::SignedPermutation { perm: pg, signs: sg }, Action::SignedPermutation { perm: ph, signs: sh }) => {
                let d = pg.len();
                let mut perm = vec![0; d];
                let mut signs = vec![0.0; d];
                for j in 0..d {
                    perm[j] = pg[ph[j]];
                    signs[j] = sg[ph[j]] * sh[j];
                }
                Action::SignedPermutation { perm, signs }
            }
            (Action::Subset { n, rows: a }, Action::Subset { rows: b, .. }) => {
                let rows = a.iter().copied().filter(|i| b.contains(i)).collect();
                Action::Subset { n: *n, rows }
            }
            (Action::Affine { matrix: ma, offset: oa }, Action::Affine { matrix: mb, offset: ob }) => {
                Action::Affine { matrix: ma * mb, offset: ma * ob + oa }
            }
            _ => {
                let (a, b) = match (self.matrix(), other.matrix()) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(AugError::Capability("cannot compose these actions".into())),
                };
                Action::Dense(a * b)
            }
        };
        Ok(GroupElement::new(0, action))
    }

    fn key(&self) -> ElementKey {
        match &self.action {
            Action::SignedPermutation { perm, signs } => {
                ElementKey::Signed(perm.clone(), signs.iter().map(|&s| s as i8).collect())
            }
            Action::Subset { rows, .. } => ElementKey::Rows(rows.clone()),
            Action::Dense(m) => ElementKey::Rounded(round_entries(m.iter())),
            Action::Affine { matrix, offset } => ElementKey::Rounded(round_entries(matrix.iter().chain(offset.iter()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ElementKey {
    Signed(Vec<usize>, Vec<i8>),
    Rows(Vec<usize>),
    Rounded(Vec<i64>),
}

fn round_entries<'a>(vals: impl Iterator<Item = &'a f64>) -> Vec<i64> {
    vals.map(|v| (v * 1e9).round() as i64).collect()
}

#[derive(Debug, Clone)]
enum Sampler {
    Permutation,
    Orthogonal,
    Subset { n: usize, r: usize },
}

/// A finite group (or semigroup) with the uniform measure, or a compact group
/// that can only be sampled.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    kind: GroupKind,
    dim: usize,
    elements: Vec<GroupElement>,
    sampler: Option<Sampler>,
    closed_mean: Option<DMatrix<f64>>,
    is_group: bool,
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(AugError::InvalidDimension("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn signed(perm: Vec<usize>, sign: f64) -> Action {
    let d = perm.len();
    Action::SignedPermutation { perm, signs: vec![sign; d] }
}

fn binomial(n: usize, r: usize) -> Option<usize> {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

fn factorial_at_most(p: usize, cap: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for i in 2..=p {
        acc = acc.checked_mul(i)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// All permutations of `0..p` in lexicographic order (identity first).
fn lex_permutations(p: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..p).collect();
    let mut out = vec![cur.clone()];
    // next_permutation
    while let Some(i) = (1..p).rev().find(|&i| cur[i - 1] < cur[i]) {
        let j = (i..p).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

fn lex_combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..r).rev().find(|&i| cur[i] < n - r + i) else { break };
        cur[i] += 1;
        for k in i + 1..r {
            cur[k] = cur[k - 1] + 1;
        }
    }
    out
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` folded into `Q`.
pub fn sample_orthogonal_haar<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<GroupElement> {
    check_dim(d)?;
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(GroupElement::new(0, Action::Dense(q)))
}

impl FiniteGroup {
    fn enumerated(kind: GroupKind, dim: usize, actions: Vec<Action>, is_group: bool) -> Self {
        let elements = actions.into_iter().enumerate().map(|(i, a)| GroupElement::new(i, a)).collect();
        Self { kind, dim, elements, sampler: None, closed_mean: None, is_group }
    }

    /// Element `i` moves coordinate `j` to position `(j + i) mod d`.
    pub fn cyclic_shift(d: usize) -> Result<Self> {
        check_dim(d)?;
        let actions = (0..d).map(|i| signed((0..d).map(|j| (j + i) % d).collect(), 1.0)).collect();
        Ok(Self::enumerated(GroupKind::CyclicShift, d, actions, true))
    }

    /// `{identity, reversal}`.
    pub fn flip(d: usize) -> Result<Self> {
        check_dim(d)?;
        let actions = vec![signed((0..d).collect(), 1.0), signed((0..d).rev().collect(), 1.0)];
        Ok(Self::enumerated(GroupKind::Flip, d, actions, true))
    }

    /// `{+I, -I}` on `R^d`.
    pub fn sign(d: usize) -> Result<Self> {
        check_dim(d)?;
        let actions = vec![signed((0..d).collect(), 1.0), signed((0..d).collect(), -1.0)];
        Ok(Self::enumerated(GroupKind::Sign, d, actions, true))
    }

    pub fn trivial(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self::enumerated(GroupKind::Trivial, d, vec![signed((0..d).collect(), 1.0)], true))
    }

    /// Symmetric group on `p` coordinates. Enumerated when `p!` is at most
    /// [`ENUMERATION_CUTOFF`], sampler-backed otherwise.
    pub fn permutation(p: usize) -> Result<Self> {
        check_dim(p)?;
        let mean = DMatrix::from_element(p, p, 1.0 / p as f64);
        if factorial_at_most(p, ENUMERATION_CUTOFF).is_some() {
            let actions = lex_permutations(p).into_iter().map(|perm| signed(perm, 1.0)).collect();
            let mut g = Self::enumerated(GroupKind::Permutation, p, actions, true);
            g.closed_mean = Some(mean);
            Ok(g)
        } else {
            Ok(Self {
                kind: GroupKind::Permutation,
                dim: p,
                elements: Vec::new(),
                sampler: Some(Sampler::Permutation),
                closed_mean: Some(mean),
                is_group: true,
            })
        }
    }

    /// All `r`-subsets of `n` rows, acting on stacked datasets by row selection.
    pub fn subsample(n: usize, r: usize) -> Result<Self> {
        check_dim(n)?;
        if r == 0 || r > n {
            return Err(AugError::InvalidConfig(format!("subset size {r} must lie in 1..={n}")));
        }
        let kind = GroupKind::SubsampleSemigroup { n, r };
        match binomial(n, r) {
            Some(c) if c <= ENUMERATION_CUTOFF => {
                let actions = lex_combinations(n, r).into_iter().map(|rows| Action::Subset { n, rows }).collect();
                Ok(Self::enumerated(kind, n, actions, false))
            }
            _ => Ok(Self {
                kind,
                dim: n,
                elements: Vec::new(),
                sampler: Some(Sampler::Subset { n, r }),
                closed_mean: None,
                is_group: false,
            }),
        }
    }

    /// Haar measure on `O(d)`; sampling only, mean matrix zero.
    pub fn orthogonal(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            kind: GroupKind::OrthogonalSampled,
            dim: d,
            elements: Vec::new(),
            sampler: Some(Sampler::Orthogonal),
            closed_mean: Some(DMatrix::zeros(d, d)),
            is_group: true,
        })
    }

    /// A user-supplied finite set of transforms with the uniform measure.
    /// `is_group` declares whether it is closed under composition; it is
    /// checked when set.
    pub fn custom(dim: usize, actions: Vec<Action>, is_group: bool) -> Result<Self> {
        check_dim(dim)?;
        if actions.is_empty() {
            return Err(AugError::EmptyInput("no transforms".into()));
        }
        let g = Self::enumerated(GroupKind::Custom, dim, actions, is_group);
        for e in &g.elements {
            if e.dim() != dim {
                return Err(AugError::DimensionMismatch { expected: dim, got: e.dim() });
            }
        }
        if is_group && !g.is_closed()? {
            return Err(AugError::InvalidConfig("transforms are not closed under composition".into()));
        }
        Ok(g)
    }

    /// Uniform measure on the given matrices.
    pub fn from_matrices(dim: usize, mats: Vec<DMatrix<f64>>, is_group: bool) -> Result<Self> {
        Self::custom(dim, mats.into_iter().map(Action::Dense).collect(), is_group)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether closure/inverse properties hold (false for the subsampling
    /// semigroup and for non-group custom transform sets).
    pub fn is_group(&self) -> bool {
        self.is_group
    }

    pub fn is_enumerated(&self) -> bool {
        self.sampler.is_none()
    }

    /// Number of enumerated elements, `None` for sampler-backed groups.
    pub fn order(&self) -> Option<usize> {
        self.is_enumerated().then_some(self.elements.len())
    }

    pub fn elements(&self) -> Result<&[GroupElement]> {
        if self.is_enumerated() {
            Ok(&self.elements)
        } else {
            Err(AugError::Capability(format!(
                "{} group on {} coordinates is too large to enumerate",
                self.kind, self.dim
            )))
        }
    }

    pub fn element(&self, index: usize) -> Result<&GroupElement> {
        self.elements()?.get(index).ok_or_else(|| AugError::InvalidConfig(format!("element {index} out of range")))
    }

    /// `E_g[g]`, from enumeration or a closed form.
    pub fn mean_matrix(&self) -> Result<DMatrix<f64>> {
        if let Some(m) = &self.closed_mean {
            return Ok(m.clone());
        }
        let elems = self.elements()?;
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for e in elems {
            let m = e.matrix().ok_or_else(|| AugError::Capability(format!("{} action is not linear", self.kind)))?;
            acc += m;
        }
        Ok(acc / elems.len() as f64)
    }

    /// Uniform draw from the group.
    pub fn haar_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match &self.sampler {
            None => self.elements[rng.random_range(0..self.elements.len())].clone(),
            Some(Sampler::Permutation) => {
                let mut perm: Vec<usize> = (0..self.dim).collect();
                perm.shuffle(rng);
                GroupElement::new(0, signed(perm, 1.0))
            }
            Some(Sampler::Orthogonal) => sample_orthogonal_haar(self.dim, rng).expect("dim checked at construction"),
            Some(Sampler::Subset { n, r }) => {
                let mut rows = rand::seq::index::sample(rng, *n, *r).into_vec();
                rows.sort_unstable();
                GroupElement::new(0, Action::Subset { n: *n, rows })
            }
        }
    }

    /// Matrices whose common fixed space is the invariant subspace.
    pub fn generators(&self) -> Result<Vec<DMatrix<f64>>> {
        let d = self.dim;
        match (&self.sampler, self.kind) {
            (Some(Sampler::Permutation), _) => {
                // adjacent transpositions generate S_p
                Ok((0..d - 1)
                    .map(|i| {
                        let mut perm: Vec<usize> = (0..d).collect();
                        perm.swap(i, i + 1);
                        GroupElement::new(0, signed(perm, 1.0)).matrix().unwrap()
                    })
                    .collect())
            }
            (Some(Sampler::Orthogonal), _) => Ok(vec![-DMatrix::<f64>::identity(d, d)]),
            (Some(Sampler::Subset { .. }), _) => {
                Err(AugError::Capability("subsampling has no linear generators".into()))
            }
            (None, _) => self
                .elements
                .iter()
                .map(|e| e.matrix().ok_or_else(|| AugError::Capability(format!("{} action is not linear", self.kind))))
                .collect(),
        }
    }

    /// Orthonormal basis (columns) of `{v : g^T v = v for all g}`, via the null
    /// space of the stacked `g^T - I`.
    pub fn invariant_subspace_basis(&self) -> Result<DMatrix<f64>> {
        let gens = self.generators()?;
        let d = self.dim;
        let mut stacked = DMatrix::zeros(d * gens.len(), d);
        let eye = DMatrix::<f64>::identity(d, d);
        for (k, g) in gens.iter().enumerate() {
            stacked.view_mut((k * d, 0), (d, d)).copy_from(&(g.transpose() - &eye));
        }
        Ok(linalg::null_space(&stacked, 1e-10))
    }

    fn index_map(&self) -> HashMap<ElementKey, usize> {
        self.elements.iter().enumerate().map(|(i, e)| (e.key(), i)).collect()
    }

    /// Index of `g_i ∘ g_j`, or `None` if the composite is not in the set.
    pub fn compose(&self, i: usize, j: usize) -> Result<Option<usize>> {
        let c = self.element(i)?.compose(self.element(j)?)?;
        Ok(self.index_map().get(&c.key()).copied())
    }

    /// Left-translation closure: for every `g`, `{g ∘ h}` is a permutation of
    /// the element list.
    pub fn is_closed(&self) -> Result<bool> {
        let elems = self.elements()?;
        let map = self.index_map();
        for g in elems {
            let mut seen = vec![false; elems.len()];
            for h in elems {
                match map.get(&g.compose(h)?.key()) {
                    Some(&k) if !seen[k] => seen[k] = true,
                    _ => return Ok(false),
                }
            }
        }
        Ok(true)
    }

    /// The same group acting on `(x, y)` with `y` (of length `extra`) fixed.
    pub fn acting_on_features(&self, extra: usize) -> Result<Self> {
        if extra == 0 {
            return Ok(self.clone());
        }
        let d = self.dim + extra;
        let extend = |m: DMatrix<f64>| {
            let mut out = DMatrix::identity(d, d);
            out.view_mut((0, 0), (self.dim, self.dim)).copy_from(&m);
            out
        };
        let mut actions = Vec::with_capacity(self.elements()?.len());
        for e in self.elements()? {
            let a = match &e.action {
                Action::SignedPermutation { perm, signs } => {
                    let mut perm = perm.clone();
                    let mut signs = signs.clone();
                    perm.extend(self.dim..d);
                    signs.extend(std::iter::repeat_n(1.0, extra));
                    Action::SignedPermutation { perm, signs }
                }
                Action::Dense(m) => Action::Dense(extend(m.clone())),
                Action::Affine { matrix, offset } => {
                    let mut o = DVector::zeros(d);
                    o.rows_mut(0, self.dim).copy_from(offset);
                    Action::Affine { matrix: extend(matrix.clone()), offset: o }
                }
                Action::Subset { .. } => return Err(AugError::Capability("subset elements cannot be extended".into())),
            };
            actions.push(a);
        }
        let mut g = Self::enumerated(self.kind, d, actions, self.is_group);
        g.closed_mean = self.closed_mean.as_ref().map(|m| extend(m.clone()));
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn cyclic_shift_moves_coordinates_forward() {
        let g = FiniteGroup::cyclic_shift(3).unwrap();
        assert_eq!(g.element(1).unwrap().apply(&v(&[1.0, 2.0, 3.0])).unwrap(), v(&[3.0, 1.0, 2.0]));
        assert_eq!(g.element(0).unwrap().apply(&v(&[4.0, 5.0, 6.0])).unwrap(), v(&[4.0, 5.0, 6.0]));
    }

    #[test]
    fn cyclic_composition_matches_matrix_product() {
        let g = FiniteGroup::cyclic_shift(3).unwrap();
        // brute force: multiply matrices and look the product up
        let m1 = g.element(1).unwrap().matrix().unwrap();
        let m2 = g.element(2).unwrap().matrix().unwrap();
        let prod = &m1 * &m2;
        let hit = g.elements().unwrap().iter().position(|e| e.matrix().unwrap() == prod).unwrap();
        assert_eq!(hit, 0);
        assert_eq!(g.compose(1, 2).unwrap(), Some(0));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(FiniteGroup::cyclic_shift(0), Err(AugError::InvalidDimension(_))));
        assert!(FiniteGroup::flip(0).is_err());
    }

    #[test]
    fn flip_reverses_and_has_expected_mean() {
        let g = FiniteGroup::flip(3).unwrap();
        assert_eq!(g.element(1).unwrap().apply(&v(&[1.0, 2.0, 3.0])).unwrap(), v(&[3.0, 2.0, 1.0]));
        let m = FiniteGroup::flip(2).unwrap().mean_matrix().unwrap();
        assert_eq!(m, DMatrix::from_element(2, 2, 0.5));
        assert_eq!(g.compose(1, 1).unwrap(), Some(0));
    }

    #[test]
    fn sign_group_basics() {
        let g = FiniteGroup::sign(1).unwrap();
        assert_eq!(g.order(), Some(2));
        assert_eq!(g.element(1).unwrap().apply(&v(&[1.7])).unwrap(), v(&[-1.7]));
        assert_eq!(FiniteGroup::sign(3).unwrap().mean_matrix().unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn permutation_mean_by_enumeration() {
        let g = FiniteGroup::permutation(3).unwrap();
        assert_eq!(g.order(), Some(6));
        let mut acc = DMatrix::zeros(3, 3);
        for e in g.elements().unwrap() {
            acc += e.matrix().unwrap();
        }
        acc /= 6.0;
        assert!(linalg::max_abs(&(acc.add_scalar(-1.0 / 3.0))) < 1e-15);
        assert!(g.element(0).unwrap().is_identity());
    }

    #[test]
    fn permutation_two_equals_flip_two() {
        let p = FiniteGroup::permutation(2).unwrap();
        let f = FiniteGroup::flip(2).unwrap();
        for (a, b) in p.elements().unwrap().iter().zip(f.elements().unwrap()) {
            assert_eq!(a.matrix(), b.matrix());
        }
    }

    #[test]
    fn large_permutation_is_sampler_backed() {
        let g = FiniteGroup::permutation(10).unwrap();
        assert!(!g.is_enumerated());
        assert!(matches!(g.elements(), Err(AugError::Capability(_))));
        let m = g.mean_matrix().unwrap();
        assert!((m[(3, 7)] - 0.1).abs() < 1e-15);
        let basis = g.invariant_subspace_basis().unwrap();
        assert_eq!(basis.ncols(), 1);
    }

    #[test]
    fn subsample_elements_and_selection() {
        let g = FiniteGroup::subsample(3, 2).unwrap();
        assert_eq!(g.order(), Some(3));
        assert!(!g.is_group());
        let rows: Vec<_> = g
            .elements()
            .unwrap()
            .iter()
            .map(|e| match &e.action {
                Action::Subset { rows, .. } => rows.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(rows, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(g.element(1).unwrap().select_rows(&["a", "b", "c"]).unwrap(), vec!["a", "c"]);
        assert_eq!(FiniteGroup::subsample(3, 3).unwrap().order(), Some(1));
        assert!(FiniteGroup::subsample(3, 4).is_err());
    }

    #[test]
    fn haar_orthogonal_is_orthogonal() {
        let mut rng = rng_from_seed(5);
        for d in 1..6 {
            let q = sample_orthogonal_haar(d, &mut rng).unwrap().matrix().unwrap();
            let err = linalg::max_abs(&(q.transpose() * &q - DMatrix::identity(d, d)));
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn haar_orthogonal_one_dim_is_fair_sign() {
        let mut rng = rng_from_seed(9);
        let n = 20_000;
        let pos =
            (0..n).filter(|_| sample_orthogonal_haar(1, &mut rng).unwrap().matrix().unwrap()[(0, 0)] > 0.0).count();
        let p = pos as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn builtin_groups_are_closed() {
        for g in [
            FiniteGroup::cyclic_shift(5).unwrap(),
            FiniteGroup::flip(4).unwrap(),
            FiniteGroup::sign(2).unwrap(),
            FiniteGroup::permutation(4).unwrap(),
        ] {
            assert!(g.is_closed().unwrap(), "{}", g.kind());
        }
    }

    #[test]
    fn custom_non_closed_set_rejected() {
        let shift = Action::Affine { matrix: DMatrix::identity(1, 1), offset: v(&[1.0]) };
        assert!(FiniteGroup::custom(1, vec![shift.clone()], true).is_err());
        assert!(FiniteGroup::custom(1, vec![shift], false).is_ok());
    }

    #[test]
    fn extension_fixes_label_coordinates() {
        let g = FiniteGroup::flip(2).unwrap().acting_on_features(1).unwrap();
        assert_eq!(g.element(1).unwrap().apply(&v(&[1.0, 2.0, 9.0])).unwrap(), v(&[2.0, 1.0, 9.0]));
        assert!(g.is_closed().unwrap());
    }
}
