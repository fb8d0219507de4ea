//! Complex geometric optics: Cauchy-transform inverses, conjugated operators, Neumann-series
//! remainders and the oscillatory-integral calculus built on them.

mod amplitude;
mod asymptotics;
mod calculus;
mod cauchy;
mod diff;
mod patch;
mod phase;
mod solution;
mod sweep;

pub use amplitude::CgoAmplitude;
pub use asymptotics::{quartic_gradient_integral, second_order_integral};
pub use calculus::{expansion_iterates, expansion_remainder, transpose_derivative, TestFunction};
pub use cauchy::{
    d_inverse, dbar_inverse, margin_mass, CauchyTransform, MARGIN_FRACTION, SUPPORT_TOL,
};
pub use diff::{laplacian, partial_x, partial_y, partial_z, partial_zbar};
pub use patch::{Patch, GUARD_FACTOR};
pub use phase::{CgoPhase, CriticalPoint, SolutionPhase};
pub use solution::{
    build_cgo, build_cgo_tilde, residual_check, CgoContext, CgoSolution, ResidualReport,
    DEFAULT_TERMS, MAX_CONTRACTION,
};
pub use sweep::{
    default_sweep, quartic_weight, residual_at, run_second_order_sweep, run_sweep,
    second_order_tensor, vanishing_quartic_weight, CalculusCase, CgoConfig, DroppedPoint,
    SecondOrderPoint, SlopeRow, SweepOutcome, SweepPoint, PLATEAU_DRIFT, SLOPE_TOLERANCE,
};

use crate::geometry::{Domain, Profile, RealField};

/// Smooth compactly supported potential used by the CGO experiments: a bump of height `amplitude`
/// and radius `0.25`, slightly off the critical point.
pub fn bump_potential(domain: &Domain, amplitude: f64) -> RealField {
    let profile = Profile::Bump {
        center: [0.03, -0.02],
        radius: 0.25,
        amplitude,
    };
    RealField::from_fn(*domain, |x, y| profile.value(x, y))
}
