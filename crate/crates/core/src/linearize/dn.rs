use crate::forward::BoundarySample;
use crate::geometry::{nodal_gradient, Mat2, Scalar, Side};

use super::system::{Linearizations, Linearizer};

/// `u`-derivatives at `u = 0` of the unit conormal covector `N(u) = k_u n / k_u(n, n)^{1/2}`.
#[derive(Clone, Copy, Debug)]
pub struct ConormalJet {
    pub n0: [f64; 2],
    pub n1: [f64; 2],
    pub n2: [f64; 2],
}

impl ConormalJet {
    pub fn new(k: [&Mat2; 3], normal: [f64; 2]) -> Self {
        let nv = nalgebra::Vector2::new(normal[0], normal[1]);
        let [a0, a1, a2] = k.map(|m| m * nv);
        let [b0, b1, b2] = [a0.dot(&nv), a1.dot(&nv), a2.dot(&nv)];
        let r = b0.sqrt();
        let n0 = a0 / r;
        let n1 = a1 / r - a0 * (0.5 * b1 / (b0 * r));
        let n2 = a2 / r - a1 * (b1 / (b0 * r)) - a0 * (0.5 * b2 / (b0 * r))
            + a0 * (0.75 * b1 * b1 / (b0 * b0 * r));
        Self {
            n0: [n0.x, n0.y],
            n1: [n1.x, n1.y],
            n2: [n2.x, n2.y],
        }
    }
}

#[inline]
fn dot<T: Scalar>(n: [f64; 2], g: [T; 2]) -> T {
    g[0] * n[0] + g[1] * n[1]
}

impl Linearizer {
    fn conormal_jets(&self) -> BoundarySample<ConormalJet> {
        let c = self.coeffs();
        let domain = *self.domain();
        let sides = Side::ALL.map(|side| {
            domain
                .side_nodes(side)
                .into_iter()
                .map(|n| {
                    ConormalJet::new(
                        [&c.k0.values()[n], &c.k1.values()[n], &c.k2.values()[n]],
                        side.normal(),
                    )
                })
                .collect()
        });
        BoundarySample { domain, sides }
    }

    /// `partial^n Lambda / partial eps_{indices}` at `eps = 0`, with `n = indices.len()` in `1..=3`.
    ///
    /// Uses the same one-sided conormal differences as the nonlinear DN map, so it agrees with
    /// finite differences of `dn_map` up to the `epsilon` truncation.
    pub fn dn_derivative<T: Scalar>(
        &self,
        lin: &Linearizations<T>,
        indices: &[usize],
    ) -> BoundarySample<T> {
        let domain = *self.domain();
        let jets = self.conormal_jets();
        let sample = |f: &dyn Fn(&ConormalJet, usize) -> T| {
            let sides = std::array::from_fn(|s| {
                let side = Side::ALL[s];
                domain
                    .side_nodes(side)
                    .into_iter()
                    .zip(&jets.sides[s])
                    .map(|(n, j)| f(j, n))
                    .collect()
            });
            BoundarySample { domain, sides }
        };
        match *indices {
            [j] => {
                let gv = nodal_gradient(lin.v(j));
                sample(&|jet, n| dot(jet.n0, gv[n]))
            }
            [j, k] => {
                let (vj, vk) = (lin.v(j).values(), lin.v(k).values());
                let (gj, gk, gw) = (
                    nodal_gradient(lin.v(j)),
                    nodal_gradient(lin.v(k)),
                    nodal_gradient(lin.w2(j, k)),
                );
                sample(&|jet, n| {
                    dot(jet.n0, gw[n]) + vj[n] * dot(jet.n1, gk[n]) + vk[n] * dot(jet.n1, gj[n])
                })
            }
            [j, k, l] => {
                let idx = [j, k, l];
                let v: Vec<&[T]> = idx.iter().map(|&a| lin.v(a).values()).collect();
                let gv: Vec<_> = idx.iter().map(|&a| nodal_gradient(lin.v(a))).collect();
                // w[c] pairs the two indices other than c.
                let w = [lin.w2(k, l), lin.w2(j, l), lin.w2(j, k)];
                let wv: Vec<&[T]> = w.iter().map(|g| g.values()).collect();
                let gw: Vec<_> = w.iter().map(|g| nodal_gradient(g)).collect();
                let g3 = nodal_gradient(lin.w3(j, k, l));
                sample(&|jet, n| {
                    let mut acc = dot(jet.n0, g3[n]);
                    for c in 0..3 {
                        let (a, b) = match c {
                            0 => (1, 2),
                            1 => (0, 2),
                            _ => (0, 1),
                        };
                        acc += v[c][n] * dot(jet.n1, gw[c][n]);
                        acc += v[a][n] * v[b][n] * dot(jet.n2, gv[c][n])
                            + wv[c][n] * dot(jet.n1, gv[c][n]);
                    }
                    acc
                })
            }
            _ => panic!("DN derivatives are implemented for orders 1 to 3"),
        }
    }
}
