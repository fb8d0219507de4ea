//! Domains, grid fields, metric families and the discrete differential operators built on them.

mod coefficients;
mod domain;
mod metric;
mod ops;

pub use coefficients::{
    eval_coefficients, point_coefficients, LinearizationCoefficients, PointCoefficients,
    TensorField, MINIMALITY_TOL,
};
pub use domain::{
    BoundaryField, ComplexField, Domain, GridFunction, RealField, Scalar, Side, MIN_RESOLUTION,
};
pub use metric::{Family, Mat2, MetricFamily, MetricJet, Profile, Provenance, Tabulated};
pub use ops::{
    density_and_coefficient, grad_inner, integrate, laplace_beltrami, nodal_gradient, quad_form,
    Measure, Mesh, Tri, Vec2,
};
