//! Both sides of the integral identities for the second and third linearizations.
//!
//! With `v^m` the first linearization for `f_m`, pairing the DN derivatives with `f_m` gives
//!
//! ```text
//! int f_m d^2 Lambda dS = sum_3 int v k1(grad v, grad v) dV + 1/2 int h2 v^j v^k v^m dV
//!                         - 1/2 int f_m k1(nu, nu) f_(j d_nu v^k) dS
//! ```
//!
//! and for the third linearization the leading `-g(grad v, grad v) g(grad v, grad v)` terms plus the groups
//! `H` (pure `v` terms), `R` (terms containing `w^{ab}`), `B` (boundary terms carrying `s`-derivatives of the
//! metric) and the boundary slope term. Interior integrals use centered nodal gradients and trapezoid
//! weights, independent of the variational stencil used to solve.

use std::fmt;

use serde::Serialize;

use crate::geometry::{nodal_gradient, quad_form, GridFunction, Mat2, Scalar, Side};
use crate::linearize::{Linearizations, Linearizer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermGroup {
    /// Terms kept by the recovery argument.
    Leading,
    /// Terms built from first linearizations and `s`-derivatives of the metric.
    H,
    /// Terms containing second linearizations.
    R,
    /// Boundary terms carrying `s`-derivatives of the metric.
    B,
    /// Boundary term from the slope factor of the area density.
    Slope,
}

impl fmt::Display for TermGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TermGroup::Leading => "leading",
            TermGroup::H => "H",
            TermGroup::R => "R",
            TermGroup::B => "B",
            TermGroup::Slope => "slope",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityTerm<T> {
    pub name: &'static str,
    pub group: TermGroup,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport<T> {
    pub order: usize,
    /// Linearization indices followed by the pairing index `m`.
    pub indices: Vec<usize>,
    pub lhs: T,
    pub terms: Vec<IdentityTerm<T>>,
    pub residual: T,
}

impl<T: Scalar> IdentityReport<T> {
    fn new(order: usize, indices: Vec<usize>, lhs: T, terms: Vec<IdentityTerm<T>>) -> Self {
        let rhs = terms.iter().fold(T::zero(), |acc, t| acc + t.value);
        Self {
            order,
            indices,
            lhs,
            terms,
            residual: lhs - rhs,
        }
    }

    pub fn rhs(&self) -> T {
        self.lhs - self.residual
    }

    pub fn term(&self, name: &str) -> Option<T> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn group(&self, group: TermGroup) -> T {
        self.terms
            .iter()
            .filter(|t| t.group == group)
            .fold(T::zero(), |acc, t| acc + t.value)
    }

    /// `max(|lhs|, max |term|)`.
    pub fn scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.value.modulus())
            .fold(self.lhs.modulus(), f64::max)
    }

    pub fn relative_residual(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.residual.modulus() / s
        }
    }
}

/// One boundary quadrature node: grid node, side, weight of `dS_g` and metric data of the conormal.
struct BoundaryNode {
    node: usize,
    side: usize,
    offset: usize,
    weight: f64,
    /// `k0 n / k0(n, n)^{1/2}`.
    conormal: [f64; 2],
    /// `k1(nu, nu)`.
    k1_nu: f64,
    /// `sigma'' / sigma` for the line density `sigma = d k(n, n)^{1/2}`.
    sigma2: f64,
}

struct Quadrature {
    volume: Vec<f64>,
    boundary: Vec<BoundaryNode>,
}

impl Quadrature {
    fn new(lin: &Linearizer) -> Self {
        let domain = *lin.domain();
        let c = lin.coeffs();
        let volume = domain
            .node_weights()
            .iter()
            .zip(c.d.values())
            .map(|(w, d)| w * d)
            .collect();
        let mut boundary = Vec::new();
        for (s, side) in Side::ALL.into_iter().enumerate() {
            let nodes = domain.side_nodes(side);
            let h = domain.side_spacing(side);
            let n = nalgebra::Vector2::from(side.normal());
            let last = nodes.len() - 1;
            for (offset, &node) in nodes.iter().enumerate() {
                let nn = |m: &Mat2| n.dot(&(m * n));
                let (b0, b1, b2) = (
                    nn(&c.k0.values()[node]),
                    nn(&c.k1.values()[node]),
                    nn(&c.k2.values()[node]),
                );
                let kn = c.k0.values()[node] * n / b0.sqrt();
                let trap = if offset == 0 || offset == last {
                    0.5 * h
                } else {
                    h
                };
                boundary.push(BoundaryNode {
                    node,
                    side: s,
                    offset,
                    weight: trap * c.d.values()[node] * b0.sqrt(),
                    conormal: [kn.x, kn.y],
                    k1_nu: b1 / b0,
                    sigma2: 0.5 * c.h1.values()[node] + 0.5 * b2 / b0 - 0.25 * (b1 / b0).powi(2),
                });
            }
        }
        Self { volume, boundary }
    }

    fn interior<T: Scalar>(&self, f: impl Fn(usize) -> T) -> T {
        self.volume
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (n, w)| acc + f(n) * *w)
    }

    fn boundary<T: Scalar>(&self, f: impl Fn(&BoundaryNode) -> T) -> T {
        self.boundary
            .iter()
            .fold(T::zero(), |acc, b| acc + f(b) * b.weight)
    }
}

/// A linearized field with its nodal gradient.
struct Field<'a, T> {
    v: &'a [T],
    g: Vec<[T; 2]>,
}

impl<'a, T: Scalar> Field<'a, T> {
    fn new(f: &'a GridFunction<T>) -> Self {
        Self {
            v: f.values(),
            g: nodal_gradient(f),
        }
    }

    fn dn(&self, b: &BoundaryNode) -> T {
        let g = self.g[b.node];
        g[0] * b.conormal[0] + g[1] * b.conormal[1]
    }
}

fn term<T>(name: &'static str, group: TermGroup, value: T) -> IdentityTerm<T> {
    IdentityTerm { name, group, value }
}

/// Identity for `partial^2 Lambda / partial eps_j partial eps_k` paired with `f_m`.
pub fn second_identity<T: Scalar>(
    lin: &Linearizer,
    all: &Linearizations<T>,
    jk: [usize; 2],
    m: usize,
) -> IdentityReport<T> {
    let q = Quadrature::new(lin);
    let c = lin.coeffs();
    let (k1, h2) = (c.k1.values(), c.h2.values());
    let [j, k] = jk;
    let (vj, vk, vm) = (
        Field::new(all.v(j)),
        Field::new(all.v(k)),
        Field::new(all.v(m)),
    );
    let dn2 = lin.dn_derivative(all, &[j, k]);
    let lhs = q.boundary(|b| vm.v[b.node] * dn2.sides[b.side][b.offset]);
    let k1_term = |a: &Field<T>, x: &Field<T>, y: &Field<T>| {
        q.interior(|n| a.v[n] * quad_form(&k1[n], x.g[n], y.g[n]))
    };
    let terms = vec![
        term("k1_m_jk", TermGroup::Leading, k1_term(&vm, &vj, &vk)),
        term("k1_j_km", TermGroup::Leading, k1_term(&vj, &vk, &vm)),
        term("k1_k_jm", TermGroup::Leading, k1_term(&vk, &vj, &vm)),
        term(
            "h2",
            TermGroup::H,
            q.interior(|n| vj.v[n] * vk.v[n] * vm.v[n] * (0.5 * h2[n])),
        ),
        term(
            "boundary_k1_normal",
            TermGroup::B,
            q.boundary(|b| {
                let n = b.node;
                vm.v[n] * (vj.v[n] * vk.dn(b) + vk.v[n] * vj.dn(b)) * (-0.5 * b.k1_nu)
            }),
        ),
    ];
    IdentityReport::new(2, vec![j, k, m], lhs, terms)
}

/// Identity for `partial^3 Lambda / partial eps_j partial eps_k partial eps_l` paired with `f_m`.
pub fn third_identity<T: Scalar>(
    lin: &Linearizer,
    all: &Linearizations<T>,
    jkl: [usize; 3],
    m: usize,
) -> IdentityReport<T> {
    let q = Quadrature::new(lin);
    let c = lin.coeffs();
    let (k0, k1, k2) = (c.k0.values(), c.k1.values(), c.k2.values());
    let (h1, h2, h3) = (c.h1.values(), c.h2.values(), c.h3.values());
    let [j, k, l] = jkl;
    let v = [
        Field::new(all.v(j)),
        Field::new(all.v(k)),
        Field::new(all.v(l)),
        Field::new(all.v(m)),
    ];
    // w[c] pairs the two of (j, k, l) other than c.
    let w = [
        Field::new(all.w2(k, l)),
        Field::new(all.w2(j, l)),
        Field::new(all.w2(j, k)),
    ];
    let others = |c: usize| match c {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let dn3 = lin.dn_derivative(all, &[j, k, l]);
    let dn2 = [
        lin.dn_derivative(all, &[k, l]),
        lin.dn_derivative(all, &[j, l]),
        lin.dn_derivative(all, &[j, k]),
    ];
    let lhs = q.boundary(|b| v[3].v[b.node] * dn3.sides[b.side][b.offset]);

    let gg = |a: usize, b: usize, x: usize, y: usize| {
        q.interior(|n| {
            -quad_form(&k0[n], v[a].g[n], v[b].g[n]) * quad_form(&k0[n], v[x].g[n], v[y].g[n])
        })
    };
    // The six ways to split {j, k, l, m} into a value pair and a gradient pair.
    const SPLITS: [(usize, usize, usize, usize); 6] = [
        (0, 1, 2, 3),
        (0, 2, 1, 3),
        (0, 3, 1, 2),
        (1, 2, 0, 3),
        (1, 3, 0, 2),
        (2, 3, 0, 1),
    ];
    let split_sum = |tensor: &dyn Fn(usize) -> Mat2| {
        q.interior(|n| {
            SPLITS.iter().fold(T::zero(), |acc, &(a, b, x, y)| {
                acc + v[a].v[n] * v[b].v[n] * quad_form(&tensor(n), v[x].g[n], v[y].g[n])
            })
        })
    };
    let vvvv = |n: usize| v[0].v[n] * v[1].v[n] * v[2].v[n] * v[3].v[n];
    let vm = &v[3];
    let r_sum = |f: &dyn Fn(usize, usize) -> T| {
        q.interior(|n| (0..3).fold(T::zero(), |acc, c| acc + f(c, n)))
    };
    let terms = vec![
        term("gg_jk_lm", TermGroup::Leading, gg(0, 1, 2, 3)),
        term("gg_jl_km", TermGroup::Leading, gg(0, 2, 1, 3)),
        term("gg_kl_jm", TermGroup::Leading, gg(1, 2, 0, 3)),
        term("H_k2", TermGroup::H, split_sum(&|n| k2[n])),
        term(
            "H_h1_grad",
            TermGroup::H,
            split_sum(&|n| k0[n] * (0.5 * h1[n])),
        ),
        term(
            "H_h3",
            TermGroup::H,
            q.interior(|n| vvvv(n) * (0.5 * h3[n])),
        ),
        term(
            "H_h1_sq",
            TermGroup::H,
            q.interior(|n| vvvv(n) * (0.75 * h1[n] * h1[n])),
        ),
        term(
            "R_h2",
            TermGroup::R,
            r_sum(&|c, n| w[c].v[n] * v[c].v[n] * vm.v[n] * (0.5 * h2[n])),
        ),
        term(
            "R_k1_w",
            TermGroup::R,
            r_sum(&|c, n| w[c].v[n] * quad_form(&k1[n], v[c].g[n], vm.g[n])),
        ),
        term(
            "R_k1_grad_w",
            TermGroup::R,
            r_sum(&|c, n| {
                v[c].v[n] * quad_form(&k1[n], w[c].g[n], vm.g[n])
                    + vm.v[n] * quad_form(&k1[n], w[c].g[n], v[c].g[n])
            }),
        ),
        term(
            "B_dn2",
            TermGroup::B,
            q.boundary(|b| {
                let n = b.node;
                (0..3).fold(T::zero(), |acc, c| {
                    acc + v[c].v[n] * dn2[c].sides[b.side][b.offset]
                }) * vm.v[n]
                    * (-0.5 * b.k1_nu)
            }),
        ),
        term(
            "B_measure",
            TermGroup::B,
            q.boundary(|b| {
                let n = b.node;
                (0..3).fold(T::zero(), |acc, c| {
                    let (x, y) = others(c);
                    acc + v[x].v[n] * v[y].v[n] * v[c].dn(b)
                }) * vm.v[n]
                    * (-b.sigma2)
            }),
        ),
        term(
            "boundary_slope",
            TermGroup::Slope,
            q.boundary(|b| {
                let n = b.node;
                (0..3).fold(T::zero(), |acc, c| {
                    let (x, y) = others(c);
                    acc + v[c].dn(b) * quad_form(&k0[n], v[x].g[n], v[y].g[n])
                }) * vm.v[n]
            }),
        ),
    ];
    IdentityReport::new(3, vec![j, k, l, m], lhs, terms)
}

#[cfg(test)]
mod tests;
