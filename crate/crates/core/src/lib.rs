//! Certified sampling discretization of the `L2` norm on finite-dimensional
//! function spaces.
//!
//! Given an orthonormal system `u_1, ..., u_N`, the crate selects a small set
//! of points (with equal weights, or with general nonnegative weights) such
//! that the discrete quadratic mean is comparable to `|f|_2^2` for every
//! `f` in the span, and certifies the two constants by a dense Hermitian
//! eigensolve. See the guide in `book/` for a walk-through.
//!
//! The building blocks, bottom-up:
//!
//! - [`frame`]: frame operators and spectral bounds.
//! - [`partition`]: verified two-way splits of a frame.
//! - [`halving`]: repeated halving down to `O(theta N)` vectors.
//! - [`weighted`]: norm equalization by duplication and weighted selection.
//! - [`discretize`]: sampled systems, Nikol'skii constants and the full
//!   discretization pipelines.
//! - [`systems`] and [`io`]: built-in test systems and file formats.

pub mod discretize;
pub mod error;
pub mod frame;
pub mod halving;
pub mod io;
pub mod partition;
pub mod scalar;
pub mod serde_dec;
pub mod systems;
pub mod weighted;

pub use error::{Error, Result};
pub use frame::{frame_bounds, frame_operator, subset_bounds, verify_tight, FrameBounds, FrameSystem, HermitianMatrix};
pub use halving::{al1_schedule, check_cardinality_sandwich, halving_select, halving_select_frame, Al1Schedule, HalvingCertificate};
pub use partition::{ap1_targets, spectral_partition, OracleConfig, PartitionRequest, PartitionResult, Strategy};
pub use scalar::{Field, C64};
pub use weighted::{duplicate_normalize, weighted_select, DuplicationMap, WeightedCertificate};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/halving.md")]
    mod halving {}
    #[doc = include_str!("../../../book/src/weighted.md")]
    mod weighted {}
    #[doc = include_str!("../../../book/src/discretization.md")]
    mod discretization {}
    #[doc = include_str!("../../../book/src/continuous.md")]
    mod continuous {}
    #[doc = include_str!("../../../book/src/complex.md")]
    mod complex {}
    #[doc = include_str!("../../../book/src/files.md")]
    mod files {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
