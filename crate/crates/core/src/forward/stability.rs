use crate::error::{Error, Result};
use crate::geometry::{LinearizationCoefficients, Mat2, Mesh, Scalar};
use crate::sparse::{smallest_eigenvalue, Factorization, InteriorIndex, StencilMatrix};

/// Inverse-iteration steps used for the singularity check.
const EIGEN_ITERATIONS: usize = 8;

/// The discrete stability operator `Delta_g + h1/2`, i.e. the Hessian of the discrete area at `u = 0`,
/// factored once for repeated Dirichlet solves.
pub struct StabilityOperator {
    pub coeffs: LinearizationCoefficients,
    pub mesh: Mesh,
    pub index: InteriorIndex,
    /// `d * k0` per node.
    pub stiffness_coef: Vec<Mat2>,
    matrix: StencilMatrix,
    factorization: Factorization,
    /// Smallest-magnitude eigenvalue of the operator relative to the Riemannian lumped mass.
    pub smallest_eigenvalue: f64,
}

impl std::fmt::Debug for StabilityOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StabilityOperator")
            .field("smallest_eigenvalue", &self.smallest_eigenvalue)
            .finish()
    }
}

impl StabilityOperator {
    /// Assembles, factors and checks for the eigenvalue obstruction.
    ///
    /// The operator is declared singular when its smallest eigenvalue is below
    /// `2 (1 + sup|q|) max(dx, dy)^2`, the size of the discretization shift of a continuum zero mode.
    pub fn new(coeffs: LinearizationCoefficients) -> Result<Self> {
        let domain = coeffs.domain;
        let mesh = Mesh::new(&domain);
        let index = InteriorIndex::new(&domain);
        let d = coeffs.d.values();
        let stiffness_coef: Vec<Mat2> = coeffs
            .k0
            .values()
            .iter()
            .zip(d)
            .map(|(k, d)| k * *d)
            .collect();
        let mut matrix = StencilMatrix::new(index.clone());
        let w = mesh.vertex_weight;
        for t in &mesh.tris {
            let c = stiffness_coef[t.nodes[0]]
                + stiffness_coef[t.nodes[1]]
                + stiffness_coef[t.nodes[2]];
            for a in 0..3 {
                for b in 0..3 {
                    matrix.add(t.nodes[a], t.nodes[b], w * t.grad[a].dot(&(c * t.grad[b])));
                }
            }
        }
        for &n in index.nodes() {
            matrix.add(n, n, mesh.mass[n] * coeffs.d2.values()[n]);
        }
        let factorization = matrix
            .factor()
            .map_err(|_| Error::EigenvalueObstruction { eigenvalue: 0.0 })?;
        let weights: Vec<f64> = index.nodes().iter().map(|&n| mesh.mass[n] * d[n]).collect();
        let lambda = smallest_eigenvalue(&matrix, &factorization, &weights, EIGEN_ITERATIONS);
        let spacing = domain.dx().max(domain.dy());
        let threshold = 2.0 * (1.0 + coeffs.q.sup_norm()) * spacing * spacing;
        if !lambda.is_finite() || lambda.abs() < threshold {
            return Err(Error::EigenvalueObstruction { eigenvalue: lambda });
        }
        Ok(Self {
            coeffs,
            mesh,
            index,
            stiffness_coef,
            matrix,
            factorization,
            smallest_eigenvalue: lambda,
        })
    }

    pub fn matrix(&self) -> &StencilMatrix {
        &self.matrix
    }

    /// Weak-form action on a full grid vector (boundary rows included).
    pub fn apply_full<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let mut y = self.mesh.stiffness(f, &self.stiffness_coef);
        for (n, yn) in y.iter_mut().enumerate() {
            *yn += f[n] * (self.mesh.mass[n] * self.coeffs.d2.values()[n]);
        }
        y
    }

    /// Solves `S u = source` at interior nodes with `u = boundary` on the boundary.
    ///
    /// `boundary` is a full grid vector whose interior entries are ignored; `source` is a weak-form
    /// right-hand side (already multiplied by test-function weights), read at interior nodes.
    pub fn solve_dirichlet<T: Scalar>(&self, boundary: &[T], source: Option<&[T]>) -> Vec<T> {
        let domain = &self.mesh.domain;
        let mut ext: Vec<T> = boundary.to_vec();
        for &n in self.index.nodes() {
            ext[n] = T::zero();
        }
        let lifted = self.apply_full(&ext);
        let rhs: Vec<T> = self
            .index
            .nodes()
            .iter()
            .map(|&n| source.map_or(T::zero(), |s| s[n]) - lifted[n])
            .collect();
        let sol = self.factorization.solve_scalar(&rhs);
        debug_assert_eq!(ext.len(), domain.len());
        self.index.scatter(&sol, &mut ext);
        ext
    }

    /// Pointwise strong form `(S f)_i / (m_i d_i)`, i.e. `(Delta_g + q) f` at interior nodes.
    pub fn strong_form<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let y = self.apply_full(f);
        let d = self.coeffs.d.values();
        y.iter()
            .enumerate()
            .map(|(n, v)| {
                if self.mesh.domain.is_boundary(n) {
                    T::zero()
                } else {
                    *v * (1.0 / (self.mesh.mass[n] * d[n]))
                }
            })
            .collect()
    }
}
