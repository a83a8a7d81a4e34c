//! Simulation and analysis toolkit for pruning processes on random trees.
//!
//! The crate is organised bottom-up:
//!
//! * [`trees`] holds the rooted plane tree representation, bi-measure trees,
//!   ancestry queries and spanned subtrees.
//! * [`coding`] computes the Łukasiewicz, reverse-Łukasiewicz, height and
//!   contour sequences together with the exact ancestral identities they obey.
//! * [`samplers`] draws conditioned Galton-Watson trees and birthday p-trees
//!   and enumerates small trees with their exact probabilities.
//! * [`pruning`] runs the Poisson pruning dynamics as a jump chain and
//!   provides the fixed-time percolation marginal.
//! * [`mmspace`] covers finite metric measure spaces: distance-matrix
//!   sampling, Prokhorov distances, glued metrics, lower mass functions and
//!   energy distances.
//! * [`diagnostics`] strings everything together into seeded self-convergence
//!   experiments.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coding;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod mmspace;
pub mod pruning;
pub mod rng;
pub mod samplers;
pub mod trees;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
