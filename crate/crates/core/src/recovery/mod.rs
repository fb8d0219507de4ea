//! Stationary-phase recovery of the second fundamental form, the `h2` discrepancy and the conformal
//! factor from twin metric families seen only through their DN derivatives.

mod estimate;
pub mod scenarios;
mod trace;
mod twin;

pub use estimate::{
    end_to_end, orientation_limits, recover_conformal_factor, recover_h2, recover_k, Calibration,
    ConformalEstimate, H2Estimate, KEstimate, OrientationLimit, ProbeRecord, RecoveryReport,
};
pub use trace::{hessian_pair, trace_algebra_check, TraceAlgebraReport};
pub use twin::{
    second_order_report, third_order_report, OracleMode, SweepValue, Tensor, Truth, TwinExperiment,
    BOUNDARY_AGREEMENT_TOL, MAX_PHASE_STEP, SAFE_ZONE,
};

#[cfg(test)]
mod tests;
