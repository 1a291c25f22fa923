//! Learned collision detection with statistical guarantees.
//!
//! The crate trains a hard-margin SVM over a grid of Gaussian features to
//! replace an exact collision checker on the unit hypercube C-space, and
//! attaches a PAC-style certificate to the result:
//!
//! - [`scene`]: exact collision oracles (disc, union of boxes, planar
//!   two-link arm) with clearance queries and uniform sampling.
//! - [`featuremap`]: the cell grid, the Gaussian feature map and the
//!   reference separator used to check the feature-space margin.
//! - [`svm`]: a hard-margin SVM trainer (SMO with second-order pair
//!   selection) on explicit feature vectors.
//! - [`stats`]: sample-complexity bound, tolerable interior error, normal
//!   quantile and binomial confidence bound.
//! - [`lcd`]: the `(δ, m)` training procedure, the adaptive doubling loop,
//!   and the versioned model file.
//! - [`experiments`]: Monte-Carlo sweeps, `δ_max` estimation, held-out
//!   evaluation and margin verification.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod featuremap;
pub mod hexfloat;
pub mod lcd;
pub mod rng;
pub mod scene;
pub mod stats;
pub mod svm;



pub use featuremap::{FeatureMapError, FeatureMapParams};
pub use lcd::{LbcdOutcome, LcdError, Mode, TrainedLcd};
pub use svm::{LinearModel, SvmConfig, SvmError, TrainingSet};
pub use scene::{Configuration, Label, SceneError, SceneOracle};

