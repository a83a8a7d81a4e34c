//! Random tree samplers, small-tree enumerations and scaling constants.

pub mod enumerate;
pub mod gw;
pub mod offspring;
pub mod ptree;

pub use enumerate::{enumerate_labeled, enumerate_plane};
pub use gw::{sample_gw_conditioned, sample_gw_conditioned_with_budget};
pub use offspring::{scaling_constants, scaling_with_ell, LawKind, OffspringLaw, ScalingConstants};
pub use ptree::{sample_ptree, sample_ptree_with_budget, PVector};
