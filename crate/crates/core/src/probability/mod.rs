//! Channel specifications, the product-form joint distribution, and entropy queries.

mod demo;
mod joint;
mod spec;
mod table;

pub use demo::demo_channel;
pub use joint::{JointPmf, Role, VarSet, Variable, DEFAULT_STATE_CAP};
pub use spec::{
    validate_spec, ChannelSpec, DestinationSpec, RelaySpec, SourceSpec, SpecViolation,
    SPEC_NORMALIZATION_TOL,
};
pub use table::Table;

#[cfg(test)]
pub(crate) use spec::fixtures;
