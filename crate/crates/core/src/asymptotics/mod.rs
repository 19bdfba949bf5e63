//! Asymptotic covariances of plain and augmented M-estimators, plug-in
//! inference, projection identities and the fourth-moment tensors of
//! two-layer networks with quadratic activation.

mod bounds;
mod criterion;
mod sandwich;
mod tangent;
mod tensor;

pub use bounds::{strong_convexity_bound_check, BoundCheck};
pub use criterion::{amle_cmle_criterion, CriterionResult};
pub use sandwich::{estimate_sandwich, plugin_inference, CovarianceReport, PluginInference, PluginVariant};
pub use tangent::{tangent_projection, tangential_decomposition_check, TangentialCheck};
pub use tensor::{
    augmented_fisher_tensor_2lnn, circulant, circulant_fourth_moment_mc, classification_gain,
    dft_fourth_moment_closed_form, fisher_tensor_2lnn, ClassificationGain, Tensor4, TensorEstimate, WickConvention,
    TENSOR_CUTOFF,
};
