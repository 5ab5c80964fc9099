//! Exact computations with integrable logarithmic connections on the
//! truncated normal-crossing ring `Q[[x1..xn]]/(x1...xr)`.
//!
//! Layers, bottom up:
//! - [`series`]: the truncated ring, its monomials and derivations.
//! - [`qmat`] and [`smat`]: rational matrices and matrices of series.
//! - [`connection`]: connections, residues, tensor calculus and functors.
//! - [`normal_form`]: trigonalization, gauge recursions and the reductions to
//!   linear data.
//! - [`homological`]: morphisms, kernels, cohomology, extensions and lifting.

pub mod connection;
pub mod error;
pub mod homological;
pub mod normal_form;
pub mod qmat;
pub mod rational;
pub mod series;
pub mod smat;
pub mod sparse;

pub use connection::{Connection, Family, LinearData, ResidueSet};
pub use error::{Error, Result};
pub use normal_form::GaugeTransform;
pub use qmat::QMat;
pub use rational::Q;
pub use series::{Derivation, MultiIndex, RingSpec, Series};
pub use smat::SMat;
