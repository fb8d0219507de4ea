//! A numerical laboratory for the minimal-surface inverse problem in Fermi coordinates.
//!
//! The pipeline runs from forward Newton solves and Dirichlet-to-Neumann maps, through higher-order
//! linearizations and their integral identities, to complex geometric optics solutions and the
//! stationary-phase recovery of the second fundamental form and conformal factor.

pub mod cgo;
pub mod cli;
pub mod error;
pub mod fit;
pub mod forward;
pub mod geometry;
pub mod identities;
pub mod linearize;
pub mod recovery;
pub mod sparse;

pub use error::{Error, Result};
