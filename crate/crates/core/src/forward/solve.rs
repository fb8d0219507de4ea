use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    eval_coefficients, BoundaryField, Domain, GridFunction, MetricFamily, RealField, Side,
};
use crate::sparse::InteriorIndex;

use super::energy::AreaFunctional;
use super::stability::StabilityOperator;

/// Dirichlet data on the boundary ring.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    field: BoundaryField<f64>,
}

impl BoundaryData {
    pub fn new(field: BoundaryField<f64>) -> Self {
        Self { field }
    }

    pub fn from_fn(domain: Domain, f: impl FnMut(f64, f64) -> f64) -> Self {
        Self {
            field: BoundaryField::from_fn(domain, f),
        }
    }

    pub fn zeros(domain: Domain) -> Self {
        Self {
            field: BoundaryField::zeros(domain),
        }
    }

    pub fn field(&self) -> &BoundaryField<f64> {
        &self.field
    }

    pub fn domain(&self) -> &Domain {
        self.field.domain()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            field: self.field.scaled(a),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        Self {
            field: self.field.combine(&other.field, a, b),
        }
    }

    /// Discrete C^2 surrogate: the largest of sup |f| and the sup of first and second tangential
    /// differences along each side.
    pub fn norm(&self) -> f64 {
        let d = *self.domain();
        let mut worst = self.field.sup_norm();
        for side in Side::ALL {
            let v = self.field.side(side);
            let h = d.side_spacing(side);
            for k in 1..v.len() - 1 {
                worst = worst.max(((v[k + 1] - v[k - 1]) / (2.0 * h)).abs());
                worst = worst.max(((v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h * h)).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Stop when `max_i |dA/du_i| / (m_i d_i)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub delta_admissible: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            delta_admissible: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForwardSolution {
    pub u: RealField,
    /// Newton updates performed after the linearized initial guess.
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual: f64,
    /// `sup|u| / ||f||`, the measured small-data constant.
    pub stability_constant: f64,
}

/// A Newton solver for the discrete minimal-surface equation on one domain and metric family.
#[derive(Debug)]
pub struct ForwardSolver<'a> {
    pub family: &'a dyn MetricFamily,
    pub stability: StabilityOperator,
    pub opts: NewtonOptions,
}

impl<'a> ForwardSolver<'a> {
    pub fn new(family: &'a dyn MetricFamily, domain: &Domain, opts: NewtonOptions) -> Result<Self> {
        let coeffs = eval_coefficients(family, domain)?;
        let stability = StabilityOperator::new(coeffs)?;
        Ok(Self {
            family,
            stability,
            opts,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.stability.mesh.domain
    }

    pub fn index(&self) -> &InteriorIndex {
        &self.stability.index
    }

    pub fn area_functional(&self) -> AreaFunctional<'_> {
        AreaFunctional::new(self.family, &self.stability.mesh)
    }

    fn scaled_residual(&self, grad: &[f64]) -> f64 {
        let mesh = &self.stability.mesh;
        let d = self.stability.coeffs.d.values();
        self.index()
            .nodes()
            .iter()
            .map(|&n| (grad[n] / (mesh.mass[n] * d[n])).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, f: &BoundaryData) -> Result<ForwardSolution> {
        let norm = f.norm();
        if norm > self.opts.delta_admissible {
            return Err(Error::InadmissibleData {
                norm,
                bound: self.opts.delta_admissible,
            });
        }
        let ext = f.field().to_grid();
        let mut u = self.stability.solve_dirichlet(ext.values(), None);
        let energy = self.area_functional();
        let index = self.index();
        let mut history = Vec::new();
        let mut iterations = 0;
        loop {
            let (grad, hess) = energy.gradient_and_hessian(&u, index)?;
            let res = self.scaled_residual(&grad);
            history.push(res);
            if res < self.opts.tol {
                break;
            }
            if iterations >= self.opts.max_iter || !res.is_finite() {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: res,
                });
            }
            let fact = hess.factor().map_err(|_| Error::NewtonDiverged {
                iterations,
                residual: res,
            })?;
            let rhs: Vec<f64> = index.nodes().iter().map(|&n| -grad[n]).collect();
            let step = fact.solve(&rhs);
            let mut t = 1.0;
            loop {
                let mut trial = u.clone();
                for (&n, s) in index.nodes().iter().zip(&step) {
                    trial[n] += t * s;
                }
                let trial_res = energy
                    .gradient(&trial)
                    .map(|g| self.scaled_residual(&g))
                    .unwrap_or(f64::INFINITY);
                if trial_res <= (1.0 - 1e-4 * t) * res {
                    u = trial;
                    break;
                }
                t *= 0.5;
                if t < 1e-6 {
                    return Err(Error::NewtonDiverged {
                        iterations,
                        residual: res,
                    });
                }
            }
            iterations += 1;
        }
        let u = GridFunction::from_vec(*self.domain(), u)?;
        let residual = *history.last().expect("at least one residual");
        let stability_constant = if norm > 0.0 { u.sup_norm() / norm } else { 0.0 };
        Ok(ForwardSolution {
            u,
            iterations,
            residual_history: history,
            residual,
            stability_constant,
        })
    }
}

/// One-shot solve of the minimal-surface Dirichlet problem.
pub fn solve_minimal_surface(
    f: &BoundaryData,
    family: &dyn MetricFamily,
    opts: &NewtonOptions,
) -> Result<ForwardSolution> {
    ForwardSolver::new(family, f.domain(), opts.clone())?.solve(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Family, Profile};

    #[test]
    fn zero_data_needs_no_newton_step() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let fam = Family::gamma(Profile::bump([0.5, 0.5], 0.4, 0.5));
        let sol = solve_minimal_surface(&BoundaryData::zeros(d), &fam, &NewtonOptions::default())
            .unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.residual < 1e-12);
        assert_eq!(sol.u.sup_norm(), 0.0);
    }

    #[test]
    fn affine_data_is_reproduced_in_flat_space() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let plane = |x: f64, y: f64| 0.03 * x - 0.02 * y + 0.01;
        let sol = solve_minimal_surface(
            &BoundaryData::from_fn(d, plane),
            &Family::Flat,
            &NewtonOptions::default(),
        )
        .unwrap();
        let exact = GridFunction::from_fn(d, plane);
        assert!((&sol.u - &exact).sup_norm() < 1e-13);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn large_data_is_rejected() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let f = BoundaryData::from_fn(d, |x, _| 5.0 * x);
        let err = solve_minimal_surface(&f, &Family::Flat, &NewtonOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InadmissibleData { .. }));
    }

    #[test]
    fn newton_converges_quadratically() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let fam = Family::trace_free(
            Profile::bump([0.5, 0.5], 0.45, 0.4),
            Profile::constant(0.0),
            true,
        );
        let f = BoundaryData::from_fn(d, |x, y| 0.02 * (2.0 * x).sin() + 0.03 * x * y);
        let sol = solve_minimal_surface(&f, &fam, &NewtonOptions::default()).unwrap();
        let h = &sol.residual_history;
        assert!(sol.iterations <= 6, "{h:?}");
        for w in h.windows(2) {
            if w[0] < 1e-3 && w[1] > 1e-13 {
                assert!(w[1] / (w[0] * w[0]) < 1e3, "{h:?}");
            }
        }
    }

    #[test]
    fn small_data_constant_is_uniform_in_scale() {
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let fam = Family::gamma(Profile::bump([0.5, 0.5], 0.45, 0.8));
        let f = BoundaryData::from_fn(d, |x, y| 0.08 * (x - 0.3 * y));
        let consts: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&s| {
                solve_minimal_surface(&f.scaled(s), &fam, &NewtonOptions::default())
                    .unwrap()
                    .stability_constant
            })
            .collect();
        let (lo, hi) = consts
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(hi / lo < 1.05, "{consts:?}");
    }

    #[test]
    fn resonant_potential_raises_obstruction() {
        // h1/2 = -2 pi^2 makes Delta + q singular on the unit square.
        let d = Domain::square(0.0, 1.0, 33).unwrap();
        let gamma = -std::f64::consts::PI.powi(2);
        let fam = Family::gamma(Profile::constant(gamma));
        let err = ForwardSolver::new(&fam, &d, NewtonOptions::default()).unwrap_err();
        assert!(
            matches!(err, Error::EigenvalueObstruction { .. }),
            "{err:?}"
        );
    }
}
