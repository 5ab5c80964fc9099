//! Normal forms and the reductions of connections to linear data.
//!
//! - [`trigonalize`]: simultaneous strict upper triangular form of commuting
//!   nilpotent matrices.
//! - [`sylvester`]: `H0 X - X H0 + c X = R` for nilpotent `H0`, `c != 0`.
//! - [`gauge`]: gauge transforms and the pivot normal form.
//! - [`katz`]: projection onto sections flat in the smooth directions, and
//!   descent to the crossing ring.
//! - [`crossing`]: descent along a crossing pair through the balanced subring.
//! - [`reduce`]: the composite reduction to linear data and its inverse.

pub mod crossing;
pub mod gauge;
pub mod katz;
pub mod reduce;
pub mod sylvester;
pub mod trigonalize;

pub use crossing::{descend_crossing, expand_crossing, CrossingDescent};
pub use gauge::{gauge_normal_form, GaugeTransform, NormalForm};
pub use katz::{descend_smooth, expand_smooth, katz_project, SmoothDescent};
pub use reduce::{
    expand_from_linear_data, expand_model, reduce_model, reduce_to_linear_data, Reduction, ReducedModel,
};
pub use sylvester::sylvester_solve;
pub use trigonalize::nilpotent_trigonalize;
