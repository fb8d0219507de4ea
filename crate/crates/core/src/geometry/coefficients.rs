use crate::error::{Error, Result};

use super::domain::{Domain, GridFunction};
use super::metric::{Mat2, MetricFamily, MetricJet};

/// Tolerance on `Tr(g^-1 d_s g)` at `s = 0`.
pub const MINIMALITY_TOL: f64 = 1e-10;

pub type TensorField = GridFunction<Mat2>;

/// `u`-derivatives at `u = 0` of `d_u = |g_u|^{1/2}`, `h_u = Tr(g_u^-1 d_s g_u)` and `k_u = g_u^-1`,
/// where `g_u(x) = g(x, u)`.
#[derive(Clone, Debug)]
pub struct LinearizationCoefficients {
    pub domain: Domain,
    pub d: GridFunction<f64>,
    pub h1: GridFunction<f64>,
    pub h2: GridFunction<f64>,
    pub h3: GridFunction<f64>,
    pub k0: TensorField,
    pub k1: TensorField,
    pub k2: TensorField,
    pub d2: GridFunction<f64>,
    pub d3: GridFunction<f64>,
    pub d4: GridFunction<f64>,
    /// Potential of the first linearization, `h1 / 2`.
    pub q: GridFunction<f64>,
    /// `d_s g` at `s = 0`. This is twice the customary second fundamental form.
    pub eta: TensorField,
}

/// Pointwise Taylor data of `k_u` and `h_u` at `u = 0`.
#[derive(Clone, Copy, Debug)]
pub struct PointCoefficients {
    pub k: [Mat2; 4],
    /// `h[n] = (d/du)^n h_u`.
    pub h: [f64; 4],
    pub d: f64,
}

fn sym(m: Mat2) -> Mat2 {
    (m + m.transpose()) * 0.5
}

/// Exact matrix calculus for the Taylor coefficients of `g^-1`, `Tr(g^-1 g')` and `sqrt(det g)`.
pub fn point_coefficients(jet: &MetricJet) -> Option<PointCoefficients> {
    let [g0, g1, g2, g3, g4] = jet.d;
    let k0 = g0.try_inverse()?;
    let k1 = -(k0 * g1 * k0);
    let k2 = -(k1 * g1 * k0 + k0 * g2 * k0 + k0 * g1 * k1);
    let k3 = -(k2 * g1 * k0
        + k1 * g2 * k0 * 2.0
        + k1 * g1 * k1 * 2.0
        + k0 * g3 * k0
        + k0 * g2 * k1 * 2.0
        + k0 * g1 * k2);
    let h0 = (k0 * g1).trace();
    let h1 = (k1 * g1 + k0 * g2).trace();
    let h2 = (k2 * g1 + k1 * g2 * 2.0 + k0 * g3).trace();
    let h3 = (k3 * g1 + k2 * g2 * 3.0 + k1 * g3 * 3.0 + k0 * g4).trace();
    let det = g0.determinant();
    if det <= 0.0 || g0[(0, 0)] <= 0.0 {
        return None;
    }
    Some(PointCoefficients {
        k: [sym(k0), sym(k1), sym(k2), sym(k3)],
        h: [h0, h1, h2, h3],
        d: det.sqrt(),
    })
}

impl PointCoefficients {
    /// `(d/du)^n d_u` for `n = 0..=4`, from `d' = d h / 2` by Leibniz.
    pub fn d_derivatives(&self) -> [f64; 5] {
        let h = self.h;
        let d0 = self.d;
        let d1 = 0.5 * d0 * h[0];
        let d2 = 0.5 * (d1 * h[0] + d0 * h[1]);
        let d3 = 0.5 * (d2 * h[0] + 2.0 * d1 * h[1] + d0 * h[2]);
        let d4 = 0.5 * (d3 * h[0] + 3.0 * d2 * h[1] + 3.0 * d1 * h[2] + d0 * h[3]);
        [d0, d1, d2, d3, d4]
    }
}

/// Evaluates every coefficient field of the linearized equations on the grid.
pub fn eval_coefficients(
    family: &dyn MetricFamily,
    domain: &Domain,
) -> Result<LinearizationCoefficients> {
    let n = domain.len();
    let mut pts = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    let mut worst: f64 = 0.0;
    for node in 0..n {
        let (x, y) = domain.coords(node);
        let jet = family.jet(x, y, 0.0);
        let pc = point_coefficients(&jet).ok_or(Error::NotSpd { x, y, s: 0.0 })?;
        let g = jet.d[0];
        if g.symmetric_eigenvalues().min() <= 0.0 {
            return Err(Error::NotSpd { x, y, s: 0.0 });
        }
        worst = worst.max(pc.h[0].abs());
        pts.push(pc);
        eta.push(jet.d[1]);
    }
    if worst > MINIMALITY_TOL {
        return Err(Error::NonMinimal { sup: worst });
    }
    let scalar = |f: &dyn Fn(&PointCoefficients) -> f64| {
        GridFunction::from_vec(*domain, pts.iter().map(f).collect()).expect("grid shape")
    };
    let tensor = |l: usize| {
        GridFunction::from_vec(*domain, pts.iter().map(|p| p.k[l]).collect()).expect("grid shape")
    };
    Ok(LinearizationCoefficients {
        domain: *domain,
        d: scalar(&|p| p.d),
        h1: scalar(&|p| p.h[1]),
        h2: scalar(&|p| p.h[2]),
        h3: scalar(&|p| p.h[3]),
        k0: tensor(0),
        k1: tensor(1),
        k2: tensor(2),
        d2: scalar(&|p| p.d_derivatives()[2]),
        d3: scalar(&|p| p.d_derivatives()[3]),
        d4: scalar(&|p| p.d_derivatives()[4]),
        q: scalar(&|p| 0.5 * p.h[1]),
        eta: GridFunction::from_vec(*domain, eta).expect("grid shape"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::{Family, Profile};

    fn unit() -> Domain {
        Domain::square(0.0, 1.0, 17).unwrap()
    }

    #[test]
    fn flat_family_has_zero_coefficients() {
        let c = eval_coefficients(&Family::Flat, &unit()).unwrap();
        assert!(c.h1.sup_norm() == 0.0 && c.h2.sup_norm() == 0.0 && c.d2.sup_norm() == 0.0);
        assert!(c.k1.values().iter().all(|m| m.abs().max() == 0.0));
        assert!(c.d.values().iter().all(|&d| d == 1.0));
    }

    // Hand expansion: g = (1 + g s^2) I gives g^-1 = (1 - g s^2 + ...) I, so k2 = -2g I,
    // and Tr(g^-1 d_s g) = 4 g s / (1 + g s^2) = 4 g s - 4 g^2 s^3 + ..., so h1 = 4g, h2 = 0, h3 = -24 g^2.
    #[test]
    fn gamma_family_matches_hand_expansion() {
        let gamma = 0.7;
        let c = eval_coefficients(&Family::gamma(Profile::constant(gamma)), &unit()).unwrap();
        let i = 40;
        assert!((c.h1.values()[i] - 4.0 * gamma).abs() < 1e-14);
        assert!(c.h2.values()[i].abs() < 1e-14);
        assert!((c.h3.values()[i] + 24.0 * gamma * gamma).abs() < 1e-12);
        assert!(c.k1.values()[i].abs().max() < 1e-15);
        assert!(
            (c.k2.values()[i] + Mat2::identity() * (2.0 * gamma))
                .abs()
                .max()
                < 1e-14
        );
        assert!((c.d2.values()[i] - 2.0 * gamma).abs() < 1e-14);
    }

    // Hand expansion: g = I + sB with B trace free, B^2 = (b^2+e^2) I. Then g^-1 = I - sB + s^2 B^2 - ...,
    // Tr(g^-1 B) = -s Tr(B^2) + O(s^2)... giving h1 = -2(b^2+e^2), k1 = -B, k2 = 2 B^2.
    #[test]
    fn trace_free_family_matches_hand_expansion() {
        let (b, e) = (0.3, -0.4);
        let c = eval_coefficients(
            &Family::trace_free(Profile::constant(b), Profile::constant(e), false),
            &unit(),
        )
        .unwrap();
        let bm = Mat2::new(b, e, e, -b);
        assert!((c.h1.values()[7] + 2.0 * (b * b + e * e)).abs() < 1e-14);
        assert!((c.k1.values()[7] + bm).abs().max() < 1e-15);
        assert!((c.k2.values()[7] - bm * bm * 2.0).abs().max() < 1e-14);
        let balanced = eval_coefficients(
            &Family::trace_free(Profile::constant(b), Profile::constant(e), true),
            &unit(),
        )
        .unwrap();
        assert!(balanced.h1.values()[7].abs() < 1e-14);
    }

    #[test]
    fn cubic_family_has_only_h2() {
        let c = eval_coefficients(&Family::cubic(Profile::constant(0.5)), &unit()).unwrap();
        assert!(c.h1.values()[3].abs() < 1e-15);
        assert!((c.h2.values()[3] - 6.0).abs() < 1e-14);
    }

    #[test]
    fn non_minimal_family_is_rejected() {
        let fam = Family::Isotropic {
            coeffs: [
                Profile::constant(1.0),
                Profile::constant(0.1),
                Profile::constant(0.0),
                Profile::constant(0.0),
            ],
        };
        assert!(matches!(
            eval_coefficients(&fam, &unit()),
            Err(Error::NonMinimal { .. })
        ));
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let fam = Family::conformal(Profile::constant(-1.0));
        assert!(matches!(
            eval_coefficients(&fam, &unit()),
            Err(Error::NotSpd { .. })
        ));
    }

    #[test]
    fn h_coefficients_match_finite_differences_in_s() {
        let families = [
            Family::Scaled {
                factor: Profile::constant(1.3),
                base: Box::new(Family::trace_free(
                    Profile::constant(0.2),
                    Profile::constant(0.1),
                    true,
                )),
            },
            Family::Isotropic {
                coeffs: [
                    Profile::constant(1.0),
                    Profile::constant(0.0),
                    Profile::constant(0.4),
                    Profile::constant(-0.3),
                ],
            },
        ];
        for fam in &families {
            let pc = point_coefficients(&fam.jet(0.2, 0.3, 0.0)).unwrap();
            let h = |s: f64| {
                let j = fam.jet(0.2, 0.3, s);
                (j.d[0].try_inverse().unwrap() * j.d[1]).trace()
            };
            let fd = |e: f64, order: usize| match order {
                1 => (h(e) - h(-e)) / (2.0 * e),
                2 => (h(e) - 2.0 * h(0.0) + h(-e)) / (e * e),
                _ => (h(2.0 * e) - 2.0 * h(e) + 2.0 * h(-e) - h(-2.0 * e)) / (2.0 * e.powi(3)),
            };
            for order in 1..=3 {
                let e = 1e-3;
                let rich = (4.0 * fd(e, order) - fd(2.0 * e, order)) / 3.0;
                let exact = pc.h[order];
                assert!(
                    (rich - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "order {order}: {rich} vs {exact}"
                );
            }
        }
    }
}
