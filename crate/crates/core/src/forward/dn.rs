use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    nodal_gradient, Domain, GridFunction, Mat2, MetricFamily, RealField, Scalar, Side,
};

use super::solve::{BoundaryData, ForwardSolver};

/// Values on each side of the boundary, corners included on both adjacent sides.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySample<T> {
    pub domain: Domain,
    /// Indexed by `Side::ALL` order, increasing coordinate along each side.
    pub sides: [Vec<T>; 4],
}

/// Conormal derivative samples of a (linearized) solution.
pub type DNSample = BoundarySample<f64>;

impl<T: Scalar> BoundarySample<T> {
    pub fn from_nodes(domain: Domain, mut f: impl FnMut(Side, usize) -> T) -> Self {
        let sides = Side::ALL.map(|s| domain.side_nodes(s).into_iter().map(|n| f(s, n)).collect());
        Self { domain, sides }
    }

    pub fn side(&self, side: Side) -> &[T] {
        &self.sides[side as usize]
    }

    pub fn zip_map<U: Scalar, V: Scalar>(
        &self,
        other: &BoundarySample<U>,
        f: impl Fn(T, U) -> V,
    ) -> BoundarySample<V> {
        let sides = std::array::from_fn(|k| {
            self.sides[k]
                .iter()
                .zip(&other.sides[k])
                .map(|(a, b)| f(*a, *b))
                .collect()
        });
        BoundarySample {
            domain: self.domain,
            sides,
        }
    }

    /// Sup over non-corner nodes.
    pub fn sup_norm_without_corners(&self) -> f64 {
        self.sides
            .iter()
            .flat_map(|s| s[1..s.len() - 1].iter())
            .map(|v| v.modulus())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sides
            .iter()
            .flatten()
            .map(|v| v.modulus())
            .fold(0.0, f64::max)
    }

    /// `oint F dS_g` with the induced line element of the metric at `s = 0`, trapezoid per side.
    pub fn integrate(&self, family: &dyn MetricFamily) -> T {
        let mut acc = T::zero();
        for side in Side::ALL {
            let nodes = self.domain.side_nodes(side);
            let h = self.domain.side_spacing(side);
            let t = side.tangent();
            let last = nodes.len() - 1;
            for (k, (&n, v)) in nodes.iter().zip(self.side(side)).enumerate() {
                let (x, y) = self.domain.coords(n);
                let g = family.metric(x, y, 0.0);
                let line = (g[(0, 0)] * t[0] * t[0]
                    + 2.0 * g[(0, 1)] * t[0] * t[1]
                    + g[(1, 1)] * t[1] * t[1])
                    .sqrt();
                let w = if k == 0 || k == last { 0.5 * h } else { h };
                acc += *v * (w * line);
            }
        }
        acc
    }
}

/// Conormal derivative `(k grad u) . n / sqrt(k(n, n))` with `k` the inverse metric.
#[inline]
pub fn conormal<T: Scalar>(k: &Mat2, grad: [T; 2], n: [f64; 2]) -> T {
    let kn = [
        k[(0, 0)] * n[0] + k[(0, 1)] * n[1],
        k[(1, 0)] * n[0] + k[(1, 1)] * n[1],
    ];
    let knn = kn[0] * n[0] + kn[1] * n[1];
    (grad[0] * kn[0] + grad[1] * kn[1]) * (1.0 / knn.sqrt())
}

/// `partial_nu u` with `nu` the unit exterior normal of `g(x, u(x))`, from one-sided differences.
pub fn dn_of_solution(u: &RealField, family: &dyn MetricFamily) -> DNSample {
    let domain = *u.domain();
    let grad = nodal_gradient(u);
    BoundarySample::from_nodes(domain, |side, n| {
        let (x, y) = domain.coords(n);
        let k = family
            .metric(x, y, u.values()[n])
            .try_inverse()
            .expect("metric is SPD");
        conormal(&k, grad[n], side.normal())
    })
}

/// The Dirichlet-to-Neumann map of the minimal-surface equation.
pub fn dn_map(f: &BoundaryData, solver: &ForwardSolver<'_>) -> Result<DNSample> {
    let sol = solver.solve(f)?;
    Ok(dn_of_solution(&sol.u, solver.family))
}

/// Discrete graph area `int |g_u|^{1/2} (1 + |grad u|^2_{g_u})^{1/2} dx`.
pub fn area(u: &RealField, family: &dyn MetricFamily) -> Result<f64> {
    let mesh = crate::geometry::Mesh::new(u.domain());
    super::energy::AreaFunctional::new(family, &mesh).value(u.values())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    /// Discrete boundary flux paired with `w`.
    pub boundary: f64,
    /// `(A(u_{f + t w}) - A(u_{f - t w})) / 2t` from re-solves.
    pub finite_difference: f64,
}

/// Step of the finite-difference cross-check.
pub const FIRST_VARIATION_STEP: f64 = 1e-4;

/// First variation of the area at the solution for `f` in the direction `w` (only `w` on the boundary matters).
pub fn area_first_variation(
    f: &BoundaryData,
    w: &RealField,
    solver: &ForwardSolver<'_>,
) -> Result<FirstVariation> {
    let sol = solver.solve(f)?;
    let energy = solver.area_functional();
    let grad = energy.gradient(sol.u.values())?;
    let domain = solver.domain();
    let boundary = domain
        .boundary_nodes()
        .iter()
        .map(|&n| grad[n] * w.values()[n])
        .sum();
    let wb = BoundaryData::new(crate::geometry::BoundaryField::trace(w));
    let t = FIRST_VARIATION_STEP;
    let up = solver.solve(&f.combine(&wb, 1.0, t))?;
    let um = solver.solve(&f.combine(&wb, 1.0, -t))?;
    let finite_difference =
        (energy.value(up.u.values())? - energy.value(um.u.values())?) / (2.0 * t);
    Ok(FirstVariation {
        boundary,
        finite_difference,
    })
}

/// How `dn_from_areas` differentiates the area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AreaDerivative {
    /// Exact derivative of the discrete area with respect to each boundary value.
    Discrete,
    /// Centered differences of re-solved areas with the given step.
    FiniteDifference { step: f64 },
}

/// Reconstructs the DN map from first variations of the area under nodal boundary probes.
///
/// Each probe `e_b` yields the boundary-node flux `dA/df_b`, which equals `N(f) dS_g` over the dual
/// boundary cell, where `N(f) = partial_nu u / (1 + |grad u|^2)^{1/2}`. Dividing by the dual length and
/// multiplying back the slope factor of the solved `u` gives `partial_nu u`. Corner nodes carry the flux of
/// two sides and are reported with the sum of both normals; compare away from corners.
pub fn dn_from_areas(
    f: &BoundaryData,
    solver: &ForwardSolver<'_>,
    mode: AreaDerivative,
) -> Result<DNSample> {
    let sol = solver.solve(f)?;
    let domain = *solver.domain();
    let energy = solver.area_functional();
    let flux: Vec<f64> = match mode {
        AreaDerivative::Discrete => energy.gradient(sol.u.values())?,
        AreaDerivative::FiniteDifference { step } => {
            let mut out = vec![0.0; domain.len()];
            let ring = domain.boundary_nodes();
            for (k, &n) in ring.iter().enumerate() {
                let mut probe = vec![0.0; ring.len()];
                probe[k] = 1.0;
                let p = BoundaryData::new(crate::geometry::BoundaryField::from_vec(domain, probe)?);
                let ap = energy.value(solver.solve(&f.combine(&p, 1.0, step))?.u.values())?;
                let am = energy.value(solver.solve(&f.combine(&p, 1.0, -step))?.u.values())?;
                out[n] = (ap - am) / (2.0 * step);
            }
            out
        }
    };
    let grad = nodal_gradient(&sol.u);
    Ok(BoundarySample::from_nodes(domain, |side, n| {
        let (i, j) = domain.ij(n);
        let along = match side {
            Side::Bottom | Side::Top => (i, domain.nx),
            Side::Left | Side::Right => (j, domain.ny),
        };
        let h = domain.side_spacing(side);
        let dual = if along.0 == 0 || along.0 + 1 == along.1 {
            0.5 * h
        } else {
            h
        };
        let (x, y) = domain.coords(n);
        let g = solver.family.metric(x, y, sol.u.values()[n]);
        let k = g.try_inverse().expect("metric is SPD");
        let nrm = side.normal();
        let knn = nrm[0] * (k[(0, 0)] * nrm[0] + k[(0, 1)] * nrm[1])
            + nrm[1] * (k[(1, 0)] * nrm[0] + k[(1, 1)] * nrm[1]);
        let line = g.determinant().sqrt() * knn.sqrt();
        let slope = (1.0 + crate::geometry::quad_form(&k, grad[n], grad[n])).sqrt();
        flux[n] / (dual * line) * slope
    }))
}

/// Sample of a grid field's trace as a boundary sample (convenience for comparisons).
pub fn trace_sample<T: Scalar>(f: &GridFunction<T>) -> BoundarySample<T> {
    BoundarySample::from_nodes(*f.domain(), |_, n| f.values()[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::NewtonOptions;
    use crate::geometry::{Family, Profile};

    #[test]
    fn affine_graph_has_constant_conormal_per_side() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let (a1, a2) = (0.04, -0.03);
        let f = BoundaryData::from_fn(d, |x, y| a1 * x + a2 * y);
        let solver = ForwardSolver::new(&Family::Flat, &d, NewtonOptions::default()).unwrap();
        let dn = dn_map(&f, &solver).unwrap();
        let expect = [-a2, a1, a2, -a1];
        for (k, side) in Side::ALL.iter().enumerate() {
            assert!(
                dn.side(*side).iter().all(|v| (v - expect[k]).abs() < 1e-12),
                "{side:?}"
            );
        }
        let zero = dn_map(&BoundaryData::zeros(d), &solver).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn flat_area_examples() {
        let d = Domain::square(0.0, 1.0, 17).unwrap();
        assert!((area(&GridFunction::zeros(d), &Family::Flat).unwrap() - 1.0).abs() < 1e-14);
        let tilted = GridFunction::from_fn(d, |x, _| x);
        assert!((area(&tilted, &Family::Flat).unwrap() - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn first_variation_flat_affine_closed_form() {
        // For u = a.x and w = x the boundary integral is int div(x a / sqrt(1+|a|^2)) = a1 / sqrt(1+|a|^2).
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let a = [0.05, 0.02];
        let f = BoundaryData::from_fn(d, |x, y| a[0] * x + a[1] * y);
        let w = GridFunction::from_fn(d, |x, _| x);
        let solver = ForwardSolver::new(&Family::Flat, &d, NewtonOptions::default()).unwrap();
        let fv = area_first_variation(&f, &w, &solver).unwrap();
        let exact = a[0] / (1.0 + a[0] * a[0] + a[1] * a[1]).sqrt();
        assert!((fv.boundary - exact).abs() < 1e-12);
        assert!((fv.finite_difference - exact).abs() < 1e-8);
    }

    #[test]
    fn first_variation_vanishes_for_interior_directions() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let fam = Family::gamma(Profile::bump([0.5, 0.5], 0.4, 0.6));
        let f = BoundaryData::from_fn(d, |x, y| 0.01 * (x * 3.0).cos() * y);
        let w = GridFunction::from_fn(d, |x, y| Profile::bump([0.5, 0.5], 0.3, 1.0).value(x, y));
        let solver = ForwardSolver::new(&fam, &d, NewtonOptions::default()).unwrap();
        let fv = area_first_variation(&f, &w, &solver).unwrap();
        assert_eq!(fv.boundary, 0.0);
        assert!(fv.finite_difference.abs() < 1e-8);
    }

    #[test]
    fn areas_reproduce_flat_affine_boundary_map() {
        let d = Domain::square(0.0, 1.0, 17).unwrap();
        let a = [0.05, 0.02];
        let f = BoundaryData::from_fn(d, |x, y| a[0] * x + a[1] * y);
        let solver = ForwardSolver::new(&Family::Flat, &d, NewtonOptions::default()).unwrap();
        let dn = dn_map(&f, &solver).unwrap();
        for mode in [
            AreaDerivative::Discrete,
            AreaDerivative::FiniteDifference { step: 1e-5 },
        ] {
            let rec = dn_from_areas(&f, &solver, mode).unwrap();
            let diff = rec.zip_map(&dn, |p, q| p - q);
            assert!(diff.sup_norm_without_corners() < 1e-8, "{mode:?}");
        }
    }
}
