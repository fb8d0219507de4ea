use std::fmt::Debug;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

pub type Mat2 = Matrix2<f64>;

/// The metric `g(x, s)` and its first four `s`-derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    /// `d[n] = (d/ds)^n g`.
    pub d: [Mat2; 5],
}

impl MetricJet {
    pub fn g(&self) -> Mat2 {
        self.d[0]
    }
}

/// How a family supplies its `s`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Analytic,
    Tabulated,
}

/// A one-parameter family of Riemannian metrics on the planar domain, `s` being the Fermi coordinate.
pub trait MetricFamily: Send + Sync + Debug {
    fn jet(&self, x: f64, y: f64, s: f64) -> MetricJet;

    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }

    fn metric(&self, x: f64, y: f64, s: f64) -> Mat2 {
        self.jet(x, y, s).d[0]
    }

    fn ds(&self, x: f64, y: f64, s: f64) -> Mat2 {
        self.jet(x, y, s).d[1]
    }

    fn ds2(&self, x: f64, y: f64, s: f64) -> Mat2 {
        self.jet(x, y, s).d[2]
    }

    fn ds3(&self, x: f64, y: f64, s: f64) -> Mat2 {
        self.jet(x, y, s).d[3]
    }
}

/// Scalar coefficient profiles used to build families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(1 - 1/(1 - r^2/radius^2))` inside the disk, zero outside; equals `amplitude` at the center.
    Bump {
        center: [f64; 2],
        radius: f64,
        amplitude: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian {
        center: [f64; 2],
        width: f64,
        amplitude: f64,
    },
    /// `amplitude * exp(-(|x - center| / width)^6)`: flat to fifth order at the center.
    FlatTop {
        center: [f64; 2],
        width: f64,
        amplitude: f64,
    },
    Sum {
        terms: Vec<Profile>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn bump(center: [f64; 2], radius: f64, amplitude: f64) -> Self {
        Profile::Bump {
            center,
            radius,
            amplitude,
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Bump {
                center,
                radius,
                amplitude,
            } => {
                let t = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (radius * radius);
                if t >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - t)).exp()
                }
            }
            Profile::Gaussian {
                center,
                width,
                amplitude,
            } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Profile::FlatTop {
                center,
                width,
                amplitude,
            } => {
                let t = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (width * width);
                amplitude * (-t.powi(3)).exp()
            }
            Profile::Sum { terms } => terms.iter().map(|p| p.value(x, y)).sum(),
        }
    }

    /// Euclidean Laplacian by a fourth-order five-point-per-axis difference.
    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        let e = 1e-3;
        let f = |a: f64, b: f64| self.value(a, b);
        let axis = |fm2: f64, fm1: f64, f0: f64, fp1: f64, fp2: f64| {
            (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * e * e)
        };
        let f0 = f(x, y);
        axis(
            f(x - 2.0 * e, y),
            f(x - e, y),
            f0,
            f(x + e, y),
            f(x + 2.0 * e, y),
        ) + axis(
            f(x, y - 2.0 * e),
            f(x, y - e),
            f0,
            f(x, y + e),
            f(x, y + 2.0 * e),
        )
    }
}

/// The closed-form families used throughout the lab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `g = I` for every `s`.
    Flat,
    /// `g = (c0 + c1 s + c2 s^2 + c3 s^3) I`.
    Isotropic { coeffs: [Profile; 4] },
    /// `g = I + s B + s^2 C` with `B = [[b, e], [e, -b]]`; `C = (b^2 + e^2)/2 I` when balanced, else 0.
    TraceFree {
        b: Profile,
        e: Profile,
        balanced: bool,
    },
    /// `g = c(x) * base(x, s)`.
    Scaled { factor: Profile, base: Box<Family> },
    /// `g = base(x, s) + (s^2 quadratic + s^3 cubic) I`.
    Layered {
        base: Box<Family>,
        quadratic: Profile,
        cubic: Profile,
    },
}

impl Family {
    /// `g = (1 + s^2 gamma) I`.
    pub fn gamma(gamma: Profile) -> Self {
        Family::Isotropic {
            coeffs: [
                Profile::constant(1.0),
                Profile::constant(0.0),
                gamma,
                Profile::constant(0.0),
            ],
        }
    }

    /// `g = (1 + s^3 beta) I`.
    pub fn cubic(beta: Profile) -> Self {
        Family::Isotropic {
            coeffs: [
                Profile::constant(1.0),
                Profile::constant(0.0),
                Profile::constant(0.0),
                beta,
            ],
        }
    }

    /// `g = c(x) I`, independent of `s`.
    pub fn conformal(factor: Profile) -> Self {
        Family::Scaled {
            factor,
            base: Box::new(Family::Flat),
        }
    }

    pub fn trace_free(b: Profile, e: Profile, balanced: bool) -> Self {
        Family::TraceFree { b, e, balanced }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Flat => "flat",
            Family::Isotropic { .. } => "isotropic",
            Family::TraceFree { .. } => "trace_free",
            Family::Scaled { .. } => "scaled",
            Family::Layered { .. } => "layered",
        }
    }
}

impl MetricFamily for Family {
    fn jet(&self, x: f64, y: f64, s: f64) -> MetricJet {
        let id = Mat2::identity();
        let zero = Mat2::zeros();
        match self {
            Family::Flat => MetricJet {
                d: [id, zero, zero, zero, zero],
            },
            Family::Isotropic { coeffs } => {
                let c: Vec<f64> = coeffs.iter().map(|p| p.value(x, y)).collect();
                let p0 = c[0] + s * (c[1] + s * (c[2] + s * c[3]));
                let p1 = c[1] + s * (2.0 * c[2] + 3.0 * s * c[3]);
                let p2 = 2.0 * c[2] + 6.0 * s * c[3];
                let p3 = 6.0 * c[3];
                MetricJet {
                    d: [id * p0, id * p1, id * p2, id * p3, zero],
                }
            }
            Family::TraceFree { b, e, balanced } => {
                let (bv, ev) = (b.value(x, y), e.value(x, y));
                let bm = Mat2::new(bv, ev, ev, -bv);
                let cm = if *balanced {
                    id * (0.5 * (bv * bv + ev * ev))
                } else {
                    zero
                };
                MetricJet {
                    d: [
                        id + bm * s + cm * (s * s),
                        bm + cm * (2.0 * s),
                        cm * 2.0,
                        zero,
                        zero,
                    ],
                }
            }
            Family::Scaled { factor, base } => {
                let c = factor.value(x, y);
                let j = base.jet(x, y, s);
                MetricJet {
                    d: j.d.map(|m| m * c),
                }
            }
            Family::Layered {
                base,
                quadratic,
                cubic,
            } => {
                let (a, b) = (quadratic.value(x, y), cubic.value(x, y));
                let mut j = base.jet(x, y, s);
                let extra = [
                    s * s * (a + s * b),
                    s * (2.0 * a + 3.0 * s * b),
                    2.0 * a + 6.0 * s * b,
                    6.0 * b,
                    0.0,
                ];
                for (m, e) in j.d.iter_mut().zip(extra) {
                    *m += id * e;
                }
                j
            }
        }
    }
}

/// A family known only through `g(x, s)`; derivatives in `s` come from central differences with step `step`.
pub struct Tabulated<F> {
    metric: F,
    step: f64,
}

impl<F> Tabulated<F> {
    /// Default step 1e-2: fourth-order stencils for the first two derivatives, second-order for the rest.
    pub fn new(metric: F) -> Self {
        Self { metric, step: 1e-2 }
    }

    pub fn with_step(metric: F, step: f64) -> Self {
        Self { metric, step }
    }
}

impl<F> Debug for Tabulated<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tabulated")
            .field("step", &self.step)
            .finish()
    }
}

impl<F> MetricFamily for Tabulated<F>
where
    F: Fn(f64, f64, f64) -> Mat2 + Send + Sync,
{
    fn jet(&self, x: f64, y: f64, s: f64) -> MetricJet {
        let e = self.step;
        let g = |k: f64| (self.metric)(x, y, s + k * e);
        let (m2, m1, z, p1, p2) = (g(-2.0), g(-1.0), g(0.0), g(1.0), g(2.0));
        let d1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * e);
        let d2 = (-m2 - p2 + (m1 + p1) * 16.0 - z * 30.0) / (12.0 * e * e);
        let d3 = (p2 - m2 - (p1 - m1) * 2.0) / (2.0 * e.powi(3));
        let d4 = (p2 + m2 - (p1 + m1) * 4.0 + z * 6.0) / e.powi(4);
        MetricJet {
            d: [z, d1, d2, d3, d4],
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Tabulated
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compactly_supported_and_peaks_at_center() {
        let p = Profile::bump([0.5, 0.5], 0.3, 2.0);
        assert!((p.value(0.5, 0.5) - 2.0).abs() < 1e-15);
        assert_eq!(p.value(0.81, 0.5), 0.0);
        assert!(p.value(0.7, 0.5) > 0.0);
    }

    #[test]
    fn tabulated_matches_analytic_jet() {
        let fam = Family::trace_free(Profile::constant(0.3), Profile::constant(-0.2), true);
        let tab = Tabulated::new(|x, y, s| fam.metric(x, y, s));
        let (a, b) = (fam.jet(0.1, 0.2, 0.05), tab.jet(0.1, 0.2, 0.05));
        for n in 0..5 {
            assert!((a.d[n] - b.d[n]).abs().max() < 1e-6, "derivative {n}");
        }
    }

    #[test]
    fn profile_laplacian_of_quadratic_gaussian_center() {
        let p = Profile::Gaussian {
            center: [0.0, 0.0],
            width: 0.5,
            amplitude: 1.0,
        };
        // Laplacian of exp(-r^2/(2w^2)) at 0 is -2/w^2.
        assert!((p.laplacian(0.0, 0.0) + 8.0).abs() < 1e-5);
    }
}
