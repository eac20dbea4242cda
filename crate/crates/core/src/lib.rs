//! Compress-forward compression-rate regions for discrete memoryless relay networks.
//!
//! The crate builds the product-form joint distribution of a relay network, evaluates
//! the per-layering region and the outer region of relay compression rates, and searches
//! for a layering that achieves a given rate vector by repeatedly shifting the largest
//! violating relay subset one layer deeper.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases below are
//! what the command-line tool and the test suites use.

pub mod error;
pub mod geometry;
pub mod layering;
pub mod nodeset;
pub mod probability;
pub mod region;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use layering::Layering;
pub use nodeset::NodeSet;
pub use probability::{ChannelSpec, JointPmf, VarSet, Variable};
pub use region::{ConstraintReport, RateVector};
pub use scalar::Scalar;

/// Default strictness margin for region membership, in bits.
pub const DEFAULT_EPSILON: f64 = 1e-9;

pub type JointPmf64 = JointPmf<f64>;
pub type JointPmf32 = JointPmf<f32>;
pub type RateVector64 = RateVector<f64>;
pub type ConstraintReport64 = ConstraintReport<f64>;
pub type Atlas64 = geometry::Atlas<f64>;
