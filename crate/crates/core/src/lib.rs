//! Quick Shift clustering driven by hashing-based kernel density estimates.
//!
//! The pipeline builds a p-stable LSH index at radius `h`, estimates the
//! Gaussian KDE at every point, caches the densest member of every bucket and
//! links each point to the densest cached neighbour within `c * h` when that
//! neighbour is denser. Density estimators and neighbour searches are
//! strategies looked up by name in a [`Registry`].

pub mod error;
pub mod geometry;
pub mod kde;
pub mod lsh;
pub mod metrics;
pub mod quickshift;
pub mod registry;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{derive_seed, squared_euclidean, Dataset, Point, SeedSpec};
pub use kde::{
    estimate_all, exact_kde, gaussian_kernel, DensityEstimate, DensityEstimator, EstimatorKind, HbeEstimator,
    HbeParams, KernelSpec,
};
pub use lsh::{collision_probability, LshIndex, LshParams};
pub use metrics::{adjusted_mutual_info, adjusted_rand_index, hausdorff_distance, ContingencyTable};
pub use quickshift::{
    check_separation, exact_quickshift, exact_quickshift_timed, extract_labels, extract_modes, lsh_quickshift,
    verify_forest, ClusterLabels, ModeSet, NeighborSearch, QuickShift, QuickShiftConfig, QuickShiftForest,
    QuickShiftRun, StageTimings,
};
pub use registry::{EstimatorFactory, NeighborFactory, Registry};
