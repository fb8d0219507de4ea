use std::collections::BTreeMap;

use crate::error::Result;
use crate::forward::StabilityOperator;
use crate::geometry::{
    eval_coefficients, quad_form, BoundaryField, Domain, GridFunction, LinearizationCoefficients,
    Mat2, MetricFamily, Scalar, Tri,
};

/// One solved linearized equation.
#[derive(Clone, Debug)]
pub struct LinearizedSystem<T> {
    pub order: usize,
    pub indices: Vec<usize>,
    /// Strong-form source `F` of `(Delta_g + h1/2) w = F`, zero on the boundary.
    pub rhs: GridFunction<T>,
    pub solution: GridFunction<T>,
    /// `max |(Delta_g + h1/2) w - F|` over interior nodes.
    pub residual: f64,
}

#[inline]
fn mat_vec<T: Scalar>(m: &Mat2, p: [T; 2]) -> [T; 2] {
    [
        p[0] * m[(0, 0)] + p[1] * m[(0, 1)],
        p[0] * m[(1, 0)] + p[1] * m[(1, 1)],
    ]
}

#[inline]
fn axpy<T: Scalar>(acc: &mut [T; 2], a: T, p: [T; 2]) {
    acc[0] += a * p[0];
    acc[1] += a * p[1];
}

/// Solves the first three linearizations of the minimal-surface equation at `u = 0`.
///
/// The sources are the exact third and fourth derivatives of the discrete area functional, so the
/// solutions coincide with the `epsilon`-derivatives of the discrete nonlinear solution map.
pub struct Linearizer {
    pub stability: StabilityOperator,
    /// `d k1` per node.
    m1: Vec<Mat2>,
    /// `d2 k0 + d k2` per node.
    m2: Vec<Mat2>,
}

impl std::fmt::Debug for Linearizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Linearizer")
            .field("stability", &self.stability)
            .finish()
    }
}

impl Linearizer {
    pub fn new(family: &dyn MetricFamily, domain: &Domain) -> Result<Self> {
        Ok(Self::from_stability(StabilityOperator::new(
            eval_coefficients(family, domain)?,
        )?))
    }

    pub fn from_stability(stability: StabilityOperator) -> Self {
        let c = &stability.coeffs;
        let d = c.d.values();
        let m1 = c.k1.values().iter().zip(d).map(|(k, d)| k * *d).collect();
        let m2 = (0..d.len())
            .map(|n| c.k0.values()[n] * c.d2.values()[n] + c.k2.values()[n] * d[n])
            .collect();
        Self { stability, m1, m2 }
    }

    pub fn coeffs(&self) -> &LinearizationCoefficients {
        &self.stability.coeffs
    }

    pub fn domain(&self) -> &Domain {
        &self.stability.mesh.domain
    }

    fn grid<T: Scalar>(&self, values: Vec<T>) -> GridFunction<T> {
        GridFunction::from_vec(*self.domain(), values).expect("grid shape")
    }

    /// Weak rows of `D^3 E[a, b, phi_i]` at every node.
    pub fn second_source<T: Scalar>(&self, a: &[T], b: &[T]) -> Vec<T> {
        let mesh = &self.stability.mesh;
        let d3 = self.coeffs().d3.values();
        let grads = |t: &Tri| (mesh.gradient(t, a), mesh.gradient(t, b));
        let mut out = mesh.lumped(|t, k| {
            let n = t.nodes[k];
            let (ga, gb) = grads(t);
            a[n] * b[n] * d3[n] + quad_form(&self.m1[n], ga, gb)
        });
        let flux = mesh.flux_form(|t| {
            let (ga, gb) = grads(t);
            let mut f = [T::zero(); 2];
            for &n in &t.nodes {
                axpy(&mut f, a[n], mat_vec(&self.m1[n], gb));
                axpy(&mut f, b[n], mat_vec(&self.m1[n], ga));
            }
            f
        });
        out.iter_mut().zip(flux).for_each(|(o, f)| *o += f);
        out
    }

    /// Weak rows of `D^4 E[v_0, v_1, v_2, phi_i] + sum D^3 E[w_{ab}, v_c, phi_i]`, where `w[c]` is the
    /// second linearization of the two indices other than `c`.
    pub fn third_source<T: Scalar>(&self, v: [&[T]; 3], w: [&[T]; 3]) -> Vec<T> {
        let mesh = &self.stability.mesh;
        let c = self.coeffs();
        let (d, d4, k0) = (c.d.values(), c.d4.values(), c.k0.values());
        const PAIRS: [(usize, usize, usize); 3] = [(1, 2, 0), (0, 2, 1), (0, 1, 2)];
        let grads = |t: &Tri| [0, 1, 2].map(|i| mesh.gradient(t, v[i]));
        let mut out = mesh.lumped(|t, k| {
            let n = t.nodes[k];
            let g = grads(t);
            let mut acc = v[0][n] * v[1][n] * v[2][n] * d4[n];
            for (a, b, x) in PAIRS {
                acc += v[x][n] * quad_form(&self.m2[n], g[a], g[b]);
            }
            acc
        });
        let flux = mesh.flux_form(|t| {
            let g = grads(t);
            let mut f = [T::zero(); 2];
            for &n in &t.nodes {
                for (a, b, z) in PAIRS {
                    axpy(&mut f, v[a][n] * v[b][n], mat_vec(&self.m2[n], g[z]));
                    axpy(
                        &mut f,
                        -quad_form(&k0[n], g[a], g[b]) * d[n],
                        mat_vec(&k0[n], g[z]),
                    );
                }
            }
            f
        });
        for (o, f) in out.iter_mut().zip(flux) {
            *o += f;
        }
        for x in 0..3 {
            for (o, s) in out.iter_mut().zip(self.second_source(w[x], v[x])) {
                *o += s;
            }
        }
        out
    }

    /// Pointwise `(S f)_i / (m_i d_i)` for a weak row vector, zero on the boundary.
    fn strong<T: Scalar>(&self, weak: &[T]) -> Vec<T> {
        let mesh = &self.stability.mesh;
        let d = self.coeffs().d.values();
        (0..weak.len())
            .map(|n| {
                if mesh.domain.is_boundary(n) {
                    T::zero()
                } else {
                    weak[n] * (1.0 / (mesh.mass[n] * d[n]))
                }
            })
            .collect()
    }

    fn solve_with_source<T: Scalar>(
        &self,
        boundary: &[T],
        source: Option<&[T]>,
        indices: Vec<usize>,
    ) -> LinearizedSystem<T> {
        let neg: Option<Vec<T>> = source.map(|s| s.iter().map(|v| -*v).collect());
        let u = self.stability.solve_dirichlet(boundary, neg.as_deref());
        let lhs = self.stability.strong_form(&u);
        let rhs = neg.map_or_else(|| vec![T::zero(); u.len()], |s| self.strong(&s));
        let residual = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (*a - *b).modulus())
            .fold(0.0, f64::max);
        LinearizedSystem {
            order: indices.len(),
            indices,
            rhs: self.grid(rhs),
            solution: self.grid(u),
            residual,
        }
    }

    /// `(Delta_g + h1/2) v = 0` with `v = f` on the boundary.
    pub fn solve_first<T: Scalar>(&self, f: &BoundaryField<T>) -> GridFunction<T> {
        self.first_system(f, 0).solution
    }

    pub fn first_system<T: Scalar>(
        &self,
        f: &BoundaryField<T>,
        index: usize,
    ) -> LinearizedSystem<T> {
        self.solve_with_source(f.to_grid().values(), None, vec![index])
    }

    /// Second linearization from the first linearizations `vj`, `vk`; zero on the boundary.
    pub fn solve_second<T: Scalar>(
        &self,
        vj: &GridFunction<T>,
        vk: &GridFunction<T>,
    ) -> LinearizedSystem<T> {
        let source = self.second_source(vj.values(), vk.values());
        let zero = vec![T::zero(); source.len()];
        self.solve_with_source(&zero, Some(&source), Vec::new())
    }

    /// Third linearization; `w[c]` is the second linearization of the two indices other than `c`.
    pub fn solve_third<T: Scalar>(
        &self,
        v: [&GridFunction<T>; 3],
        w: [&GridFunction<T>; 3],
    ) -> LinearizedSystem<T> {
        let source = self.third_source(v.map(|g| g.values()), w.map(|g| g.values()));
        let zero = vec![T::zero(); source.len()];
        self.solve_with_source(&zero, Some(&source), Vec::new())
    }

    /// `P^j w = -div_g(v^j k1 grad w)` in strong form at interior nodes, zero on the boundary.
    pub fn apply_pj<T: Scalar>(
        &self,
        vj: &GridFunction<T>,
        w: &GridFunction<T>,
    ) -> GridFunction<T> {
        let mesh = &self.stability.mesh;
        let (v, wv) = (vj.values(), w.values());
        let weak = mesh.flux_form(|t| {
            let gw = mesh.gradient(t, wv);
            let mut f = [T::zero(); 2];
            for &n in &t.nodes {
                axpy(&mut f, v[n], mat_vec(&self.m1[n], gw));
            }
            f
        });
        self.grid(self.strong(&weak))
    }

    /// Every linearization up to `order` (at most 3) for the boundary data `fs`.
    pub fn linearize_all<T: Scalar>(
        &self,
        fs: &[BoundaryField<T>],
        order: usize,
    ) -> Linearizations<T> {
        let first: Vec<LinearizedSystem<T>> = fs
            .iter()
            .enumerate()
            .map(|(j, f)| self.first_system(f, j))
            .collect();
        let mut out = Linearizations {
            first,
            second: BTreeMap::new(),
            third: BTreeMap::new(),
        };
        let n = fs.len();
        if order >= 2 {
            for j in 0..n {
                for k in j..n {
                    let mut sys = self.solve_second(out.v(j), out.v(k));
                    sys.indices = vec![j, k];
                    out.second.insert([j, k], sys);
                }
            }
        }
        if order >= 3 {
            for j in 0..n {
                for k in j..n {
                    for l in k..n {
                        let w = [out.w2(k, l), out.w2(j, l), out.w2(j, k)];
                        let mut sys = self.solve_third([out.v(j), out.v(k), out.v(l)], w);
                        sys.indices = vec![j, k, l];
                        out.third.insert([j, k, l], sys);
                    }
                }
            }
        }
        out
    }
}

/// The hierarchy `v^j`, `w^{jk}`, `w^{jkl}` keyed by sorted index tuples.
#[derive(Clone, Debug)]
pub struct Linearizations<T> {
    pub first: Vec<LinearizedSystem<T>>,
    pub second: BTreeMap<[usize; 2], LinearizedSystem<T>>,
    pub third: BTreeMap<[usize; 3], LinearizedSystem<T>>,
}

impl<T: Scalar> Linearizations<T> {
    pub fn v(&self, j: usize) -> &GridFunction<T> {
        &self.first[j].solution
    }

    pub fn w2(&self, j: usize, k: usize) -> &GridFunction<T> {
        &self.second[&[j.min(k), j.max(k)]].solution
    }

    pub fn w3(&self, j: usize, k: usize, l: usize) -> &GridFunction<T> {
        let mut key = [j, k, l];
        key.sort_unstable();
        &self.third[&key].solution
    }

    /// Largest residual over every solved system.
    pub fn max_residual(&self) -> f64 {
        self.first
            .iter()
            .chain(self.second.values())
            .chain(self.third.values())
            .map(|s| s.residual)
            .fold(0.0, f64::max)
    }
}
