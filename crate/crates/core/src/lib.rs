//! Numerical toolkit for studying data augmentation as averaging over a group
//! (or semigroup) of transforms.
//!
//! The crate is organised around the objects that appear when an estimator is
//! averaged over an orbit:
//!
//! * [`group`] builds finite groups acting linearly on `R^d`, plus sampled
//!   orthogonal groups and the subsampling semigroup.
//! * [`orbit`] implements the orbit-averaging operator and the exact
//!   variance decompositions it induces on empirical measures.
//! * [`estimators`] holds ERM, augmented ERM, constrained/augmented/marginal
//!   likelihood estimators, U-statistics and the linear-regression trio.
//! * [`sgd`] is minibatch SGD with a fresh random transform per example.
//! * [`asymptotics`] computes sandwich covariances, plug-in inference and the
//!   fourth-moment tensors of two-layer networks under circular shifts.
//! * [`approx`] covers approximate invariance: Wasserstein-1 distances, bias
//!   bands and empirical Rademacher complexities.
//! * [`experiments`] runs the reproducible desk-scale experiments that back
//!   the `auglab` command line tool.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod group;
pub mod linalg;
pub mod orbit;
pub mod rng;
pub mod sgd;

pub use nalgebra;

pub use error::{AugError, Result};
pub use group::{FiniteGroup, GroupElement, GroupKind};
pub use orbit::{AveragingMode, OrbitAverager, VarianceDecomposition};
