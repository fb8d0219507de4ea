//! Newton solves of the minimal-surface equation, the DN map, and the area functional.

mod dn;
mod energy;
mod solve;
mod stability;

pub use dn::{
    area, area_first_variation, conormal, dn_from_areas, dn_map, dn_of_solution, trace_sample,
    AreaDerivative, BoundarySample, DNSample, FirstVariation, FIRST_VARIATION_STEP,
};
pub use energy::{lagrangian, AreaFunctional, LagrangianJet, NodeState};
pub use solve::{
    solve_minimal_surface, BoundaryData, ForwardSolution, ForwardSolver, NewtonOptions,
};
pub use stability::StabilityOperator;
