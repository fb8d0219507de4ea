use std::fmt::Debug;
use std::ops::{AddAssign, Mul, Neg, SubAssign};

use num_complex::Complex64;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of grid points per axis.
pub const MIN_RESOLUTION: usize = 17;

/// Axis-aligned rectangle sampled on a uniform grid.
///
/// Node `(i, j)` sits at `(x0 + i*dx, y0 + j*dy)` and is stored at `j*nx + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

/// One side of the rectangle, traversed in the direction of increasing coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Outward Euclidean unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    /// Unit tangent along the traversal direction.
    pub fn tangent(self) -> [f64; 2] {
        match self {
            Side::Bottom | Side::Top => [1.0, 0.0],
            Side::Right | Side::Left => [0.0, 1.0],
        }
    }
}

impl Domain {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < MIN_RESOLUTION || ny < MIN_RESOLUTION {
            return Err(Error::ConfigInvalid(format!(
                "resolution {nx}x{ny} is below the minimum {MIN_RESOLUTION}"
            )));
        }
        if !(x.1 > x.0 && y.1 > y.0) || ![x.0, x.1, y.0, y.1].iter().all(|v| v.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "degenerate extent {x:?} x {y:?}"
            )));
        }
        Ok(Self {
            x0: x.0,
            x1: x.1,
            y0: y.0,
            y1: y.1,
            nx,
            ny,
        })
    }

    /// Square `[lo, hi]^2` with `n` points per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new((lo, hi), (lo, hi), n, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy()
    }

    #[inline]
    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.ij(node);
        (self.x(i), self.y(j))
    }

    #[inline]
    pub fn is_boundary(&self, node: usize) -> bool {
        let (i, j) = self.ij(node);
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| !self.is_boundary(n)).collect()
    }

    /// Boundary nodes in counterclockwise order starting at the lower-left corner, each once.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx + ny) - 4);
        out.extend((0..nx).map(|i| self.index(i, 0)));
        out.extend((1..ny).map(|j| self.index(nx - 1, j)));
        out.extend((0..nx - 1).rev().map(|i| self.index(i, ny - 1)));
        out.extend((1..ny - 1).rev().map(|j| self.index(0, j)));
        out
    }

    /// Nodes of one side including both corners, ordered by increasing coordinate.
    pub fn side_nodes(&self, side: Side) -> Vec<usize> {
        let (nx, ny) = (self.nx, self.ny);
        match side {
            Side::Bottom => (0..nx).map(|i| self.index(i, 0)).collect(),
            Side::Top => (0..nx).map(|i| self.index(i, ny - 1)).collect(),
            Side::Left => (0..ny).map(|j| self.index(0, j)).collect(),
            Side::Right => (0..ny).map(|j| self.index(nx - 1, j)).collect(),
        }
    }

    /// Grid spacing along a side.
    pub fn side_spacing(&self, side: Side) -> f64 {
        match side {
            Side::Bottom | Side::Top => self.dx(),
            Side::Left | Side::Right => self.dy(),
        }
    }

    /// Tensor-product trapezoid weights.
    pub fn node_weights(&self) -> Vec<f64> {
        let (dx, dy) = (self.dx(), self.dy());
        (0..self.len())
            .map(|n| {
                let (i, j) = self.ij(n);
                let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
                let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
                wx * wy * dx * dy
            })
            .collect()
    }

    /// The same extent refined or coarsened to `n` points per axis.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Result<Self> {
        Self::new((self.x0, self.x1), (self.y0, self.y1), nx, ny)
    }
}

/// Scalar types a grid field may carry.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Num
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Mul<f64, Output = Self>
    + 'static
{
    /// Number of real components (1 or 2).
    const PARTS: usize;
    fn from_f64(value: f64) -> Self;
    fn part(self, k: usize) -> f64;
    fn from_parts(parts: &[f64]) -> Self;
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
    fn conj(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    const PARTS: usize = 1;
    fn from_f64(value: f64) -> Self {
        value
    }
    fn part(self, _k: usize) -> f64 {
        self
    }
    fn from_parts(parts: &[f64]) -> Self {
        parts[0]
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn conj(self) -> Self {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    const PARTS: usize = 2;
    fn from_f64(value: f64) -> Self {
        Complex64::new(value, 0.0)
    }
    fn part(self, k: usize) -> f64 {
        if k == 0 {
            self.re
        } else {
            self.im
        }
    }
    fn from_parts(parts: &[f64]) -> Self {
        Complex64::new(parts[0], parts[1])
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
}

/// A field sampled at every node of a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    domain: Domain,
    values: Vec<T>,
}

pub type RealField = GridFunction<f64>;
pub type ComplexField = GridFunction<Complex64>;

impl<T> GridFunction<T> {
    pub fn from_vec(domain: Domain, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                domain.nx,
                domain.ny
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn from_fn(domain: Domain, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let values = (0..domain.len())
            .map(|n| {
                let (x, y) = domain.coords(n);
                f(x, y)
            })
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.values[self.domain.index(i, j)]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> GridFunction<U> {
        GridFunction {
            domain: self.domain,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, V>(
        &self,
        other: &GridFunction<U>,
        mut f: impl FnMut(&T, &U) -> V,
    ) -> GridFunction<V> {
        assert_eq!(
            self.domain, other.domain,
            "grid fields live on different domains"
        );
        GridFunction {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }
}

impl<T: Scalar> GridFunction<T> {
    pub fn zeros(domain: Domain) -> Self {
        Self {
            domain,
            values: vec![T::zero(); domain.len()],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Trapezoid L^p norm over the grid in the Euclidean measure.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let w = self.domain.node_weights();
        let s: f64 = self
            .values
            .iter()
            .zip(&w)
            .map(|(v, w)| w * v.modulus().powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| *v * a)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| v.to_complex())
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }
}

impl<T: Scalar> std::ops::Add for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn add(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| *a + *b)
    }
}

impl<T: Scalar> std::ops::Sub for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn sub(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| *a - *b)
    }
}

/// Values on the boundary ring of a domain, ordered as [`Domain::boundary_nodes`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField<T> {
    domain: Domain,
    values: Vec<T>,
}

impl<T: Scalar> BoundaryField<T> {
    pub fn from_fn(domain: Domain, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let values = domain
            .boundary_nodes()
            .into_iter()
            .map(|n| {
                let (x, y) = domain.coords(n);
                f(x, y)
            })
            .collect();
        Self { domain, values }
    }

    pub fn from_vec(domain: Domain, values: Vec<T>) -> Result<Self> {
        let expected = 2 * (domain.nx + domain.ny) - 4;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} boundary values, expected {expected}",
                values.len()
            )));
        }
        Ok(Self { domain, values })
    }

    /// Restriction of a grid field to the boundary ring.
    pub fn trace(field: &GridFunction<T>) -> Self {
        let domain = *field.domain();
        let values = domain
            .boundary_nodes()
            .into_iter()
            .map(|n| field.values()[n])
            .collect();
        Self { domain, values }
    }

    pub fn zeros(domain: Domain) -> Self {
        Self::from_fn(domain, |_, _| T::zero())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Scatter into a full grid field that is zero in the interior.
    pub fn to_grid(&self) -> GridFunction<T> {
        let mut g = GridFunction::zeros(self.domain);
        for (n, v) in self.domain.boundary_nodes().into_iter().zip(&self.values) {
            g.values_mut()[n] = *v;
        }
        g
    }

    /// Values along one side (corners included), increasing coordinate.
    pub fn side(&self, side: Side) -> Vec<T> {
        let full = self.to_grid();
        self.domain
            .side_nodes(side)
            .into_iter()
            .map(|n| full.values()[n])
            .collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|v| *v * a).collect(),
        }
    }

    pub fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        assert_eq!(self.domain, other.domain);
        Self {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| *x * a + *y * b)
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }
}
