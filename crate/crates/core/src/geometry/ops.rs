use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::coefficients::TensorField;
use super::domain::{Domain, GridFunction, Scalar};
use super::metric::{Mat2, MetricFamily};

pub type Vec2 = Vector2<f64>;

/// A corner triangle of a grid cell. The gradient of a piecewise-linear function on it is
/// `sum_k grad[k] * f[nodes[k]]`.
#[derive(Clone, Copy, Debug)]
pub struct Tri {
    pub nodes: [usize; 3],
    pub grad: [Vec2; 3],
}

/// Each cell carries its four corner triangles, i.e. both diagonal triangulations at half weight.
/// Vertex quadrature on these triangles is exact for the flat five-point Laplacian and produces
/// trapezoid weights as lumped masses.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub domain: Domain,
    pub tris: Vec<Tri>,
    /// Quadrature weight of one triangle vertex, `area / 3` at half weight.
    pub vertex_weight: f64,
    /// Lumped mass per node (equals the trapezoid weight).
    pub mass: Vec<f64>,
}

impl Mesh {
    pub fn new(domain: &Domain) -> Self {
        let (dx, dy) = (domain.dx(), domain.dy());
        let (ix, iy) = (1.0 / dx, 1.0 / dy);
        let mut tris = Vec::with_capacity(4 * (domain.nx - 1) * (domain.ny - 1));
        for j in 0..domain.ny - 1 {
            for i in 0..domain.nx - 1 {
                let a = domain.index(i, j);
                let b = domain.index(i + 1, j);
                let c = domain.index(i + 1, j + 1);
                let e = domain.index(i, j + 1);
                let v = Vec2::new;
                tris.push(Tri {
                    nodes: [a, b, e],
                    grad: [v(-ix, -iy), v(ix, 0.0), v(0.0, iy)],
                });
                tris.push(Tri {
                    nodes: [b, a, c],
                    grad: [v(ix, -iy), v(-ix, 0.0), v(0.0, iy)],
                });
                tris.push(Tri {
                    nodes: [c, e, b],
                    grad: [v(ix, iy), v(-ix, 0.0), v(0.0, -iy)],
                });
                tris.push(Tri {
                    nodes: [e, c, a],
                    grad: [v(-ix, iy), v(ix, 0.0), v(0.0, -iy)],
                });
            }
        }
        let vertex_weight = dx * dy / 12.0;
        let mut mass = vec![0.0; domain.len()];
        for t in &tris {
            for &n in &t.nodes {
                mass[n] += vertex_weight;
            }
        }
        Self {
            domain: *domain,
            tris,
            vertex_weight,
            mass,
        }
    }

    /// Constant gradient of `f` on a triangle, as `(d_x f, d_y f)`.
    #[inline]
    pub fn gradient<T: Scalar>(&self, t: &Tri, f: &[T]) -> [T; 2] {
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            let v = f[t.nodes[k]];
            g[0] += v * t.grad[k].x;
            g[1] += v * t.grad[k].y;
        }
        g
    }

    /// Weak divergence `y_i = sum_T w * (C_T grad f) . grad phi_i` where `C_T` is the per-triangle
    /// coefficient already summed over its three vertices.
    pub fn weak_form<T: Scalar>(
        &self,
        f: &[T],
        mut coef: impl FnMut(usize, &Tri) -> Mat2,
    ) -> Vec<T> {
        let mut out = vec![T::zero(); self.domain.len()];
        for (idx, t) in self.tris.iter().enumerate() {
            let c = coef(idx, t);
            let p = self.gradient(t, f);
            let cp = [
                p[0] * c[(0, 0)] + p[1] * c[(0, 1)],
                p[0] * c[(1, 0)] + p[1] * c[(1, 1)],
            ];
            for k in 0..3 {
                out[t.nodes[k]] += (cp[0] * t.grad[k].x + cp[1] * t.grad[k].y) * self.vertex_weight;
            }
        }
        out
    }

    /// Stiffness action with a per-node coefficient, `sum_v C_v` on every triangle.
    pub fn stiffness<T: Scalar>(&self, f: &[T], coef: &[Mat2]) -> Vec<T> {
        self.weak_form(f, |_, t| {
            coef[t.nodes[0]] + coef[t.nodes[1]] + coef[t.nodes[2]]
        })
    }

    /// Flux pairing `y_i = sum_T w * F_T . grad phi_i` for a per-triangle vector `F_T`
    /// (already summed over the triangle's vertices).
    pub fn flux_form<T: Scalar>(&self, mut flux: impl FnMut(&Tri) -> [T; 2]) -> Vec<T> {
        let mut out = vec![T::zero(); self.domain.len()];
        for t in &self.tris {
            let f = flux(t);
            for k in 0..3 {
                out[t.nodes[k]] += (f[0] * t.grad[k].x + f[1] * t.grad[k].y) * self.vertex_weight;
            }
        }
        out
    }

    /// Lumped vertex quadrature `z_i = sum_{T ni i} w * value(T, i)`.
    pub fn lumped<T: Scalar>(&self, mut value: impl FnMut(&Tri, usize) -> T) -> Vec<T> {
        let mut out = vec![T::zero(); self.domain.len()];
        for t in &self.tris {
            for k in 0..3 {
                out[t.nodes[k]] += value(t, k) * self.vertex_weight;
            }
        }
        out
    }
}

/// Bilinear form `a^T M b` for a symmetric 2x2 matrix and generic scalar vectors.
#[inline]
pub fn quad_form<T: Scalar>(m: &Mat2, a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] * m[(0, 0)] + (a[0] * b[1] + a[1] * b[0]) * m[(0, 1)] + a[1] * b[1] * m[(1, 1)]
}

/// Second-order nodal gradient: centered in the interior, three-point one-sided on the boundary.
pub fn nodal_gradient<T: Scalar>(f: &GridFunction<T>) -> Vec<[T; 2]> {
    let d = *f.domain();
    let v = f.values();
    let (dx, dy) = (d.dx(), d.dy());
    let diff = |get: &dyn Fn(usize) -> T, k: usize, n: usize, h: f64| -> T {
        if k == 0 {
            (get(0) * -3.0 + get(1) * 4.0 - get(2)) * (0.5 / h)
        } else if k + 1 == n {
            (get(k) * 3.0 - get(k - 1) * 4.0 + get(k - 2)) * (0.5 / h)
        } else {
            (get(k + 1) - get(k - 1)) * (0.5 / h)
        }
    };
    (0..d.len())
        .map(|node| {
            let (i, j) = d.ij(node);
            let gx = diff(&|ii| v[d.index(ii, j)], i, d.nx, dx);
            let gy = diff(&|jj| v[d.index(i, jj)], j, d.ny, dy);
            [gx, gy]
        })
        .collect()
}

/// The positive Laplace-Beltrami operator `-|g|^{-1/2} d_a(|g|^{1/2} g^{ab} d_b u)` at `s = 0`.
///
/// Interior values come from the variational stencil divided by the lumped Riemannian mass;
/// boundary nodes are set to zero.
pub fn laplace_beltrami<T: Scalar>(
    u: &GridFunction<T>,
    family: &dyn MetricFamily,
) -> GridFunction<T> {
    let d = *u.domain();
    let mesh = Mesh::new(&d);
    let (dens, coef) = density_and_coefficient(family, &d);
    let y = mesh.stiffness(u.values(), &coef);
    let vals = (0..d.len())
        .map(|n| {
            if d.is_boundary(n) {
                T::zero()
            } else {
                y[n] * (1.0 / (mesh.mass[n] * dens[n]))
            }
        })
        .collect();
    GridFunction::from_vec(d, vals).expect("grid shape")
}

/// `d = |g|^{1/2}` and `d g^{-1}` at `s = 0` on every node.
pub fn density_and_coefficient(
    family: &dyn MetricFamily,
    domain: &Domain,
) -> (Vec<f64>, Vec<Mat2>) {
    (0..domain.len())
        .map(|n| {
            let (x, y) = domain.coords(n);
            let g = family.metric(x, y, 0.0);
            let det = g.determinant();
            let k = g.try_inverse().unwrap_or_else(Mat2::zeros);
            let d = det.max(0.0).sqrt();
            (d, k * d)
        })
        .unzip()
}

/// Node-wise `T^{ab} d_a u d_b v` with coordinate gradients.
pub fn grad_inner<T: Scalar>(
    u: &GridFunction<T>,
    v: &GridFunction<T>,
    tensor: &TensorField,
) -> GridFunction<T> {
    let gu = nodal_gradient(u);
    let gv = nodal_gradient(v);
    let vals = (0..u.domain().len())
        .map(|n| quad_form(&tensor.values()[n], gu[n], gv[n]))
        .collect();
    GridFunction::from_vec(*u.domain(), vals).expect("grid shape")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// `dV = |g|^{1/2} dx` at `s = 0`.
    Riemannian,
    Euclidean,
}

/// Tensor-product trapezoid quadrature.
pub fn integrate<T: Scalar>(f: &GridFunction<T>, family: &dyn MetricFamily, measure: Measure) -> T {
    let d = *f.domain();
    let w = d.node_weights();
    let mut acc = T::zero();
    for (n, (v, w)) in f.values().iter().zip(&w).enumerate() {
        let weight = match measure {
            Measure::Euclidean => *w,
            Measure::Riemannian => {
                let (x, y) = d.coords(n);
                w * family.metric(x, y, 0.0).determinant().sqrt()
            }
        };
        acc += *v * weight;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::{Family, Profile};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize) -> Domain {
        Domain::square(0.0, 1.0, n).unwrap()
    }

    fn interior_max<T: Scalar>(f: &GridFunction<T>, g: impl Fn(f64, f64) -> f64) -> f64 {
        let d = f.domain();
        d.interior_nodes()
            .into_iter()
            .map(|n| {
                let (x, y) = d.coords(n);
                (f.values()[n].to_complex() - Complex64::new(g(x, y), 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn flat_laplacian_uses_positive_sign() {
        let u = GridFunction::from_fn(unit(33), |x, y| x * x + y * y);
        let lu = laplace_beltrami(&u, &Family::Flat);
        assert!(interior_max(&lu, |_, _| -4.0) < 1e-9);
        let h = GridFunction::from_fn(unit(33), |x, y| x * x - y * y);
        assert!(interior_max(&laplace_beltrami(&h, &Family::Flat), |_, _| 0.0) < 1e-9);
    }

    #[test]
    fn constant_conformal_scaling() {
        let lambda: f64 = 0.3;
        let fam = Family::conformal(Profile::constant((2.0 * lambda).exp()));
        let u = GridFunction::from_fn(unit(33), |x, y| (x * 2.0).sin() * y.exp());
        let a = laplace_beltrami(&u, &fam);
        let b = laplace_beltrami(&u, &Family::Flat);
        let diff = a.zip_map(&b, |p, q| p - (-2.0 * lambda).exp() * q);
        assert!(diff.sup_norm() < 1e-10);
    }

    #[test]
    fn laplacian_is_second_order() {
        let fam = Family::Scaled {
            factor: Profile::Sum {
                terms: vec![Profile::constant(1.0), Profile::bump([0.5, 0.5], 0.4, 0.3)],
            },
            base: Box::new(Family::Flat),
        };
        // With g = c I, Delta_g u = -c^{-1} Delta_flat u.
        let exact = |x: f64, y: f64| {
            let c = 1.0 + Profile::bump([0.5, 0.5], 0.4, 0.3).value(x, y);
            2.0 * std::f64::consts::PI.powi(2)
                * (std::f64::consts::PI * x).sin()
                * (std::f64::consts::PI * y).sin()
                / c
        };
        let errs: Vec<f64> = [33, 65]
            .iter()
            .map(|&n| {
                let u = GridFunction::from_fn(unit(n), |x, y| {
                    (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
                });
                interior_max(&laplace_beltrami(&u, &fam), exact)
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn laplacian_is_symmetric_in_riemannian_pairing() {
        let fam = Family::Scaled {
            factor: Profile::Sum {
                terms: vec![Profile::constant(1.0), Profile::bump([0.4, 0.6], 0.3, 0.5)],
            },
            base: Box::new(Family::Flat),
        };
        let d = unit(41);
        let bump =
            |cx: f64, cy: f64| move |x: f64, y: f64| Profile::bump([cx, cy], 0.3, 1.0).value(x, y);
        let u = GridFunction::from_fn(d, bump(0.45, 0.5));
        let v = GridFunction::from_fn(d, bump(0.55, 0.45));
        let pair = |a: &GridFunction<f64>, b: &GridFunction<f64>| {
            let prod = a.zip_map(b, |p, q| p * q);
            integrate(&prod, &fam, Measure::Riemannian)
        };
        let lhs = pair(&laplace_beltrami(&u, &fam), &v);
        let rhs = pair(&u, &laplace_beltrami(&v, &fam));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn grad_inner_trivial_cases() {
        let d = unit(17);
        let x = GridFunction::from_fn(d, |x, _| x);
        let id = GridFunction::from_fn(d, |_, _| Mat2::identity());
        assert!(interior_max(&grad_inner(&x, &x, &id), |_, _| 1.0) < 1e-13);
        let quarter = GridFunction::from_fn(d, |_, _| Mat2::identity() * 0.25);
        let all = grad_inner(&x, &x, &quarter);
        assert!(all.values().iter().all(|v| (v - 0.25).abs() < 1e-13));
    }

    #[test]
    fn grad_inner_matches_pointwise_oracle_on_random_quadratics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Domain::new((-0.5, 1.0), (0.0, 2.0), 37, 29).unwrap();
        let mut coef = || -> [f64; 6] { std::array::from_fn(|_| rng.random_range(-1.0..1.0)) };
        let (a, b, t) = (coef(), coef(), coef());
        let poly = |c: [f64; 6]| {
            move |x: f64, y: f64| {
                c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
            }
        };
        let grad = |c: [f64; 6], x: f64, y: f64| {
            [
                c[1] + 2.0 * c[3] * x + c[4] * y,
                c[2] + c[4] * x + 2.0 * c[5] * y,
            ]
        };
        let tensor =
            |x: f64, y: f64| Mat2::new(1.0 + t[0] * x, t[1] * y, t[1] * y, 1.5 + t[2] * x * y);
        let u = GridFunction::from_fn(d, poly(a));
        let v = GridFunction::from_fn(d, poly(b));
        let tf = GridFunction::from_fn(d, tensor);
        let out = grad_inner(&u, &v, &tf);
        for &(i, j) in &[(0, 0), (5, 7), (36, 28), (18, 0), (20, 14)] {
            let n = d.index(i, j);
            let (x, y) = d.coords(n);
            let oracle = quad_form(&tensor(x, y), grad(a, x, y), grad(b, x, y));
            assert!((out.values()[n] - oracle).abs() < 1e-10, "node ({i},{j})");
        }
        let swapped = grad_inner(&v, &u, &tf);
        assert_eq!(out, swapped);
    }

    #[test]
    fn integrate_examples() {
        let d = unit(65);
        let one = GridFunction::from_fn(d, |_, _| 1.0);
        assert!((integrate(&one, &Family::Flat, Measure::Riemannian) - 1.0).abs() < 1e-12);
        let four = Family::conformal(Profile::constant(4.0));
        assert!((integrate(&one, &four, Measure::Riemannian) - 4.0).abs() < 1e-12);
        assert!((integrate(&one, &four, Measure::Euclidean) - 1.0).abs() < 1e-12);
        let pi = std::f64::consts::PI;
        let s = GridFunction::from_fn(d, |x, y| (pi * x).sin() * (pi * y).sin());
        let err = (integrate(&s, &Family::Flat, Measure::Euclidean) - 4.0 / (pi * pi)).abs();
        assert!(err < 2e-4, "{err}");
    }
}
