//! The discrete area functional, its gradient and Hessian.
//!
//! The graph area `A(u) = sum_T w sum_{v in T} L(x_v, u_v, grad_T u)` with
//! `L(x, s, p) = |g(x, s)|^{1/2} (1 + g(x, s)^{-1}(p, p))^{1/2}` is assembled over the corner triangles
//! of [`Mesh`]. The minimal-surface equation is its Euler-Lagrange equation, so the Newton Jacobian is
//! the symmetric Hessian.

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Mesh, MetricFamily, Vec2};
use crate::sparse::{InteriorIndex, StencilMatrix};

/// Metric data at a node evaluated at height `s = u`.
#[derive(Clone, Copy, Debug)]
pub struct NodeState {
    pub d: f64,
    pub d_s: f64,
    pub d_ss: f64,
    pub k: Mat2,
    pub k_s: Mat2,
    pub k_ss: Mat2,
}

impl NodeState {
    pub fn new(family: &dyn MetricFamily, x: f64, y: f64, s: f64) -> Result<Self> {
        let jet = family.jet(x, y, s);
        let [g0, g1, g2, ..] = jet.d;
        let det = g0.determinant();
        if !(det > 0.0 && g0[(0, 0)] > 0.0) {
            return Err(Error::NotSpd { x, y, s });
        }
        let k = g0.try_inverse().ok_or(Error::NotSpd { x, y, s })?;
        let k_s = -(k * g1 * k);
        let k_ss = -(k_s * g1 * k + k * g2 * k + k * g1 * k_s);
        let h = (k * g1).trace();
        let h_s = (k_s * g1 + k * g2).trace();
        let d = det.sqrt();
        let d_s = 0.5 * d * h;
        let d_ss = 0.5 * (d_s * h + d * h_s);
        Ok(Self {
            d,
            d_s,
            d_ss,
            k,
            k_s,
            k_ss,
        })
    }
}

/// `L` and its partial derivatives at one triangle vertex.
#[derive(Clone, Copy, Debug)]
pub struct LagrangianJet {
    pub l: f64,
    pub l_u: f64,
    pub l_p: Vec2,
    pub l_uu: f64,
    pub l_up: Vec2,
    pub l_pp: Mat2,
}

pub fn lagrangian(ns: &NodeState, p: Vec2) -> LagrangianJet {
    let kp = ns.k * p;
    let w = 1.0 + p.dot(&kp);
    let sw = w.sqrt();
    let w32 = w * sw;
    let w_u = p.dot(&(ns.k_s * p));
    let w_uu = p.dot(&(ns.k_ss * p));
    let d = ns.d;
    LagrangianJet {
        l: d * sw,
        l_u: ns.d_s * sw + d * w_u / (2.0 * sw),
        l_p: kp * (d / sw),
        l_uu: ns.d_ss * sw + ns.d_s * w_u / sw + d * w_uu / (2.0 * sw)
            - d * w_u * w_u / (4.0 * w32),
        l_up: kp * (ns.d_s / sw) + ns.k_s * p * (d / sw) - kp * (d * w_u / (2.0 * w32)),
        l_pp: (ns.k / sw - kp * kp.transpose() / w32) * d,
    }
}

/// Discrete area functional bound to a metric family and mesh.
pub struct AreaFunctional<'a> {
    pub family: &'a dyn MetricFamily,
    pub mesh: &'a Mesh,
}

impl<'a> AreaFunctional<'a> {
    pub fn new(family: &'a dyn MetricFamily, mesh: &'a Mesh) -> Self {
        Self { family, mesh }
    }

    pub fn states(&self, u: &[f64]) -> Result<Vec<NodeState>> {
        let d = &self.mesh.domain;
        (0..d.len())
            .map(|n| {
                let (x, y) = d.coords(n);
                NodeState::new(self.family, x, y, u[n])
            })
            .collect()
    }

    fn tri_gradient(&self, t: &crate::geometry::Tri, u: &[f64]) -> Vec2 {
        let g = self.mesh.gradient(t, u);
        Vec2::new(g[0], g[1])
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let st = self.states(u)?;
        let mut total = 0.0;
        for t in &self.mesh.tris {
            let p = self.tri_gradient(t, u);
            for &n in &t.nodes {
                let kp = st[n].k * p;
                total += st[n].d * (1.0 + p.dot(&kp)).sqrt();
            }
        }
        Ok(total * self.mesh.vertex_weight)
    }

    /// `dA/du_i` at every node, boundary nodes included.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let st = self.states(u)?;
        let w = self.mesh.vertex_weight;
        let mut out = vec![0.0; u.len()];
        for t in &self.mesh.tris {
            let p = self.tri_gradient(t, u);
            let jets = t.nodes.map(|n| lagrangian(&st[n], p));
            let lp: Vec2 = jets.iter().map(|j| j.l_p).sum();
            for k in 0..3 {
                out[t.nodes[k]] += w * (jets[k].l_u + lp.dot(&t.grad[k]));
            }
        }
        Ok(out)
    }

    /// Gradient at every node together with the interior Hessian block.
    pub fn gradient_and_hessian(
        &self,
        u: &[f64],
        index: &InteriorIndex,
    ) -> Result<(Vec<f64>, StencilMatrix)> {
        let st = self.states(u)?;
        let w = self.mesh.vertex_weight;
        let mut grad = vec![0.0; u.len()];
        let mut hess = StencilMatrix::new(index.clone());
        for t in &self.mesh.tris {
            let p = self.tri_gradient(t, u);
            let jets = t.nodes.map(|n| lagrangian(&st[n], p));
            let lp: Vec2 = jets.iter().map(|j| j.l_p).sum();
            let lpp: Mat2 = jets.iter().map(|j| j.l_pp).sum();
            for a in 0..3 {
                grad[t.nodes[a]] += w * (jets[a].l_u + lp.dot(&t.grad[a]));
                for b in 0..3 {
                    let mut v = jets[a].l_up.dot(&t.grad[b]) + jets[b].l_up.dot(&t.grad[a]);
                    v += t.grad[a].dot(&(lpp * t.grad[b]));
                    if a == b {
                        v += jets[a].l_uu;
                    }
                    hess.add(t.nodes[a], t.nodes[b], w * v);
                }
            }
        }
        Ok((grad, hess))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Family, Profile};

    fn family() -> Family {
        Family::Scaled {
            factor: Profile::Sum {
                terms: vec![Profile::constant(1.0), Profile::bump([0.5, 0.5], 0.4, 0.2)],
            },
            base: Box::new(Family::trace_free(
                Profile::bump([0.5, 0.5], 0.45, 0.3),
                Profile::constant(0.1),
                true,
            )),
        }
    }

    fn sample(d: &Domain) -> Vec<f64> {
        (0..d.len())
            .map(|n| {
                let (x, y) = d.coords(n);
                0.2 * (3.0 * x).sin() * (2.0 * y + 0.3).cos() + 0.1 * x * y
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences_of_the_area() {
        let d = Domain::square(0.0, 1.0, 17).unwrap();
        let mesh = Mesh::new(&d);
        let fam = family();
        let a = AreaFunctional::new(&fam, &mesh);
        let u = sample(&d);
        let g = a.gradient(&u).unwrap();
        for &n in &[0usize, 20, 144, 288] {
            let e = 1e-5;
            let mut up = u.clone();
            up[n] += e;
            let mut um = u.clone();
            um[n] -= e;
            let fd = (a.value(&up).unwrap() - a.value(&um).unwrap()) / (2.0 * e);
            assert!((fd - g[n]).abs() < 1e-8, "node {n}: {fd} vs {}", g[n]);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_the_gradient() {
        let d = Domain::square(0.0, 1.0, 17).unwrap();
        let mesh = Mesh::new(&d);
        let fam = family();
        let a = AreaFunctional::new(&fam, &mesh);
        let idx = InteriorIndex::new(&d);
        let u = sample(&d);
        let (_, h) = a.gradient_and_hessian(&u, &idx).unwrap();
        let dir: Vec<f64> = (0..idx.len())
            .map(|k| ((k * 7 % 13) as f64 - 6.0) / 6.0)
            .collect();
        let hd = h.apply(&dir);
        let e = 1e-6;
        let shifted = |s: f64| {
            let mut v = u.clone();
            for (k, &n) in idx.nodes().iter().enumerate() {
                v[n] += s * dir[k];
            }
            idx.gather(&a.gradient(&v).unwrap())
        };
        let (gp, gm) = (shifted(e), shifted(-e));
        for k in (0..idx.len()).step_by(17) {
            let fd = (gp[k] - gm[k]) / (2.0 * e);
            assert!(
                (fd - hd[k]).abs() < 1e-7 * (1.0 + fd.abs()),
                "row {k}: {fd} vs {}",
                hd[k]
            );
        }
    }

    #[test]
    fn tilted_plane_area_is_exact() {
        let d = Domain::square(0.0, 1.0, 17).unwrap();
        let mesh = Mesh::new(&d);
        let u: Vec<f64> = (0..d.len()).map(|n| d.coords(n).0).collect();
        let area = AreaFunctional::new(&Family::Flat, &mesh).value(&u).unwrap();
        assert!((area - 2f64.sqrt()).abs() < 1e-13);
    }
}
