//! First, second and third linearizations of the minimal-surface equation at the zero solution,
//! their DN derivatives, and finite-difference cross-checks through the nonlinear solver.

mod dn;
mod fd;
mod system;

pub use dn::ConormalJet;
pub use fd::{default_epsilon, fd_dn_derivative, fd_linearize};
pub use system::{Linearizations, LinearizedSystem, Linearizer};

#[cfg(test)]
mod tests;
