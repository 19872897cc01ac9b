//! Two-photon (ghost) imaging simulator.
//!
//! The conditional arm-2 detection density `P(x₂|x₁)` is computed two ways:
//! retrodictively ([`retrodict`]), by evolving the arm-1 detection mode
//! backward to the crystal and conditioning the pair there, and predictively
//! ([`predict`]), by evolving the whole pair forward and applying Bayes'
//! theorem to the joint table. [`hilbert`] holds the finite-dimensional
//! version of the same equivalence.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common case.

// `!(x <= limit)` is used on purpose throughout so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod elements;
pub mod error;
pub mod grid;
pub mod hilbert;
pub mod predict;
pub mod retrodict;
pub mod scalar;
pub mod source;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid64 = grid::TransverseGrid<f64>;
pub type Field64 = grid::Field<f64>;
pub type Element64 = elements::Element<f64>;
pub type Detector64 = elements::DetectorProfile<f64>;
pub type Biphoton64 = source::BiphotonField<f64>;
pub type Setup64 = retrodict::ImagingSetup<f64>;
pub type Conditional64 = retrodict::ConditionalDistribution<f64>;
pub type Joint64 = predict::JointDistribution<f64>;

pub type Grid32 = grid::TransverseGrid<f32>;
pub type Field32 = grid::Field<f32>;
pub type Element32 = elements::Element<f32>;
pub type Detector32 = elements::DetectorProfile<f32>;
pub type Biphoton32 = source::BiphotonField<f32>;
pub type Setup32 = retrodict::ImagingSetup<f32>;
pub type Conditional32 = retrodict::ConditionalDistribution<f32>;
