//! Multiscale transform for sequences of probability measures in Wasserstein
//! space.
//!
//! Sequences of one-dimensional Gaussians or of finitely supported measures on
//! ℝ^d are decomposed into a coarse sequence and detail layers. Details are
//! optimal transport displacements from geodesic midpoint predictions, so a
//! sequence sampled along a constant-speed geodesic has no details at all.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`.

// `!(x >= 0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrete_ot;
pub mod error;
pub mod experiments;
pub mod gaussian_ot;
pub mod io;
pub mod measures;
pub mod multiscale;
pub mod scalar;
pub mod transport_ops;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, GaussianMeasure, Measure, MeasureKind, MeasureSequence};
pub use multiscale::{analyze, synthesize, Pyramid};
pub use scalar::Real;
pub use transport_ops::{Detail, DetailLayer};

pub type Gaussian64 = GaussianMeasure<f64>;
pub type Discrete64 = DiscreteMeasure<f64>;
pub type Measure64 = Measure<f64>;
pub type Sequence64 = MeasureSequence<f64>;
pub type Pyramid64 = Pyramid<f64>;
pub type Detail64 = Detail<f64>;

pub type Gaussian32 = GaussianMeasure<f32>;
pub type Discrete32 = DiscreteMeasure<f32>;
pub type Measure32 = Measure<f32>;
pub type Sequence32 = MeasureSequence<f32>;
pub type Pyramid32 = Pyramid<f32>;
pub type Detail32 = Detail<f32>;
