//! Nine-point sparse systems on the interior nodes and their direct factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Scalar};

const NONE: usize = usize::MAX;

/// Numbering of the interior nodes as unknowns.
#[derive(Clone, Debug)]
pub struct InteriorIndex {
    pub domain: Domain,
    unknown: Vec<usize>,
    nodes: Vec<usize>,
}

impl InteriorIndex {
    pub fn new(domain: &Domain) -> Self {
        let nodes = domain.interior_nodes();
        let mut unknown = vec![NONE; domain.len()];
        for (k, &n) in nodes.iter().enumerate() {
            unknown[n] = k;
        }
        Self {
            domain: *domain,
            unknown,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    #[inline]
    pub fn unknown(&self, node: usize) -> Option<usize> {
        let k = self.unknown[node];
        (k != NONE).then_some(k)
    }

    pub fn gather<T: Copy>(&self, full: &[T]) -> Vec<T> {
        self.nodes.iter().map(|&n| full[n]).collect()
    }

    pub fn scatter<T: Copy>(&self, interior: &[T], full: &mut [T]) {
        for (&n, &v) in self.nodes.iter().zip(interior) {
            full[n] = v;
        }
    }
}

/// Interior-interior block of a nine-point operator, stored per row as a 3x3 neighbor stencil.
#[derive(Clone, Debug)]
pub struct StencilMatrix {
    index: InteriorIndex,
    vals: Vec<f64>,
}

impl StencilMatrix {
    pub fn new(index: InteriorIndex) -> Self {
        let n = index.len();
        Self {
            index,
            vals: vec![0.0; 9 * n],
        }
    }

    pub fn index(&self) -> &InteriorIndex {
        &self.index
    }

    #[inline]
    fn slot(&self, row_node: usize, col_node: usize) -> usize {
        let d = &self.index.domain;
        let (ri, rj) = d.ij(row_node);
        let (ci, cj) = d.ij(col_node);
        let di = (ci as isize - ri as isize + 1) as usize;
        let dj = (cj as isize - rj as isize + 1) as usize;
        debug_assert!(di < 3 && dj < 3, "entry outside the nine-point stencil");
        di * 3 + dj
    }

    /// Adds `value` at `(row, col)` given as grid nodes; ignored unless both are interior.
    #[inline]
    pub fn add(&mut self, row_node: usize, col_node: usize, value: f64) {
        if let (Some(r), Some(_)) = (self.index.unknown(row_node), self.index.unknown(col_node)) {
            let s = self.slot(row_node, col_node);
            self.vals[9 * r + s] += value;
        }
    }

    fn neighbors(&self, row_node: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.index.domain;
        let (i, j) = d.ij(row_node);
        (0..9).filter_map(move |s| {
            let (di, dj) = (s / 3, s % 3);
            let (ci, cj) = ((i + di).checked_sub(1)?, (j + dj).checked_sub(1)?);
            if ci >= d.nx || cj >= d.ny {
                return None;
            }
            let col = d.index(ci, cj);
            self.index.unknown(col).map(|c| (s, c))
        })
    }

    /// `y = A x` on interior unknowns.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.index
            .nodes()
            .iter()
            .enumerate()
            .map(|(r, &node)| {
                self.neighbors(node)
                    .map(|(s, c)| self.vals[9 * r + s] * x[c])
                    .sum()
            })
            .collect()
    }

    pub fn factor(&self) -> Result<Factorization> {
        let n = self.index.len();
        let mut triplets = Vec::with_capacity(9 * n);
        for (r, &node) in self.index.nodes().iter().enumerate() {
            for (s, c) in self.neighbors(node) {
                let v = self.vals[9 * r + s];
                if v != 0.0 {
                    triplets.push(Triplet::new(r, c, v));
                }
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Factorization { lu, n })
    }
}

/// Sparse LU of an interior system.
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

impl Factorization {
    /// Solves for several real right-hand sides at once.
    pub fn solve_columns(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if cols.is_empty() {
            return Vec::new();
        }
        let rhs = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        let x = self.lu.solve(&rhs);
        (0..cols.len())
            .map(|j| (0..self.n).map(|i| x[(i, j)]).collect())
            .collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve_columns(&[rhs.to_vec()])
            .pop()
            .expect("one column")
    }

    /// Solves a real or complex right-hand side by splitting into real components.
    pub fn solve_scalar<T: Scalar>(&self, rhs: &[T]) -> Vec<T> {
        let cols: Vec<Vec<f64>> = (0..T::PARTS)
            .map(|k| rhs.iter().map(|v| v.part(k)).collect())
            .collect();
        let sol = self.solve_columns(&cols);
        (0..self.n)
            .map(|i| {
                let parts: Vec<f64> = sol.iter().map(|c| c[i]).collect();
                T::from_parts(&parts)
            })
            .collect()
    }
}

/// Smallest-magnitude generalized eigenvalue of `A x = lambda W x` by inverse iteration,
/// `W` diagonal and positive.
pub fn smallest_eigenvalue(
    mat: &StencilMatrix,
    fact: &Factorization,
    weights: &[f64],
    iterations: usize,
) -> f64 {
    let n = weights.len();
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.25 * ((i as f64) * 0.618).sin())
        .collect();
    let w_norm = |x: &[f64]| {
        x.iter()
            .zip(weights)
            .map(|(a, w)| a * a * w)
            .sum::<f64>()
            .sqrt()
    };
    let mut lambda = f64::NAN;
    for _ in 0..iterations {
        let nrm = w_norm(&x);
        x.iter_mut().for_each(|v| *v /= nrm);
        let ax = mat.apply(&x);
        lambda = x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>();
        let wx: Vec<f64> = x.iter().zip(weights).map(|(a, w)| a * w).collect();
        x = fact.solve(&wx);
    }
    lambda
}
