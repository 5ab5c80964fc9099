//! Horizontal morphisms, kernels and cokernels, cohomology, extensions,
//! the log point, the `u`-bicomplex and rank-1 lifting.

pub mod abelian;
pub mod bicomplex;
pub mod complex;
pub mod ext;
pub mod ga;
pub mod lift;
pub mod morphism;
pub mod pushforward;

pub use abelian::{kernel_cokernel, KernelCokernel};
pub use bicomplex::{u_bicomplex_cohomology, BicomplexReport};
pub use complex::{de_rham_cohomology, horizontal_sections, linear_data_cohomology, CohomologyReport, Sections};
pub use ext::{ext1, ext1_linear_data, ext1_log_point, Ext1};
pub use ga::{ga_rep, homomorphism_law_holds, nilpotent_log, unipotent_log, PolyMat};
pub use lift::{check_lift_uniqueness, lift_rank1, Lift, LiftVerdict};
pub use morphism::{check_horizontal, HorizontalMorphism, HorizontalityReport};
pub use pushforward::pushforward_log_point;
