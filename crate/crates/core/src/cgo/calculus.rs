use std::collections::BTreeMap;
use std::ops::Add;

use num_complex::Complex64;

use super::phase::CgoPhase;
use super::solution::CgoContext;
use crate::error::{Error, Result};
use crate::geometry::{ComplexField, Domain};

/// Coefficients below this size are dropped from a [`TestFunction`].
const NEGLIGIBLE: f64 = 1e-300;

/// `chi(z) * sum c_{kl} z^k conj(z)^l` with the Gaussian `chi = exp(-|z|^2 / sigma^2)` and integer,
/// possibly negative, exponents.
///
/// The class is closed under `d`, `dbar` and multiplication by Laurent monomials, so expansion iterates
/// and integration by parts stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub sigma: f64,
    terms: BTreeMap<(i32, i32), Complex64>,
}

impl TestFunction {
    pub fn zero(sigma: f64) -> Self {
        Self {
            sigma,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(sigma: f64, k: i32, l: i32) -> Self {
        Self::zero(sigma).with_term(k, l, Complex64::new(1.0, 0.0))
    }

    fn with_term(mut self, k: i32, l: i32, c: Complex64) -> Self {
        let entry = self.terms.entry((k, l)).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() <= NEGLIGIBLE {
            self.terms.remove(&(k, l));
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i32, i32), &Complex64)> {
        self.terms.iter()
    }

    /// Lowest total degree `k + l` among the terms; `None` for the zero function.
    pub fn degree(&self) -> Option<i32> {
        self.terms.keys().map(|(k, l)| k + l).min()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.terms
            .iter()
            .fold(Self::zero(self.sigma), |acc, (&(k, l), v)| {
                acc.with_term(k, l, v * c)
            })
    }

    /// Product with `c z^k conj(z)^l`.
    pub fn times_monomial(&self, c: Complex64, k: i32, l: i32) -> Self {
        self.terms
            .iter()
            .fold(Self::zero(self.sigma), |acc, (&(a, b), v)| {
                acc.with_term(a + k, b + l, v * c)
            })
    }

    /// `d = (d/dx - i d/dy) / 2`; `d chi = -conj(z) chi / sigma^2`.
    pub fn d(&self) -> Self {
        let s2 = self.sigma * self.sigma;
        self.terms
            .iter()
            .fold(Self::zero(self.sigma), |acc, (&(k, l), v)| {
                acc.with_term(k - 1, l, v * k as f64)
                    .with_term(k, l + 1, -v / s2)
            })
    }

    /// `dbar = (d/dx + i d/dy) / 2`; `dbar chi = -z chi / sigma^2`.
    pub fn dbar(&self) -> Self {
        let s2 = self.sigma * self.sigma;
        self.terms
            .iter()
            .fold(Self::zero(self.sigma), |acc, (&(k, l), v)| {
                acc.with_term(k, l - 1, v * l as f64)
                    .with_term(k + 1, l, -v / s2)
            })
    }

    /// Value at `z`; at the origin terms of nonpositive total degree other than the constant are
    /// filled with zero.
    pub fn value(&self, z: Complex64) -> Complex64 {
        let chi = (-z.norm_sqr() / (self.sigma * self.sigma)).exp();
        let at_origin = z.norm() == 0.0;
        self.terms
            .iter()
            .map(|(&(k, l), c)| {
                if at_origin {
                    if (k, l) == (0, 0) {
                        *c
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                } else {
                    c * z.powi(k) * z.conj().powi(l)
                }
            })
            .sum::<Complex64>()
            * chi
    }

    pub fn field(&self, domain: &Domain) -> ComplexField {
        ComplexField::from_fn(*domain, |x, y| self.value(Complex64::new(x, y)))
    }
}

impl Add for &TestFunction {
    type Output = TestFunction;
    fn add(self, rhs: Self) -> TestFunction {
        rhs.terms
            .iter()
            .fold(self.clone(), |acc, (&(k, l), v)| acc.with_term(k, l, *v))
    }
}

fn monomial_phase(phase: &CgoPhase) -> Result<(Complex64, i32)> {
    phase
        .monomial_derivative()
        .map(|(c, m)| (c, m as i32))
        .ok_or_else(|| {
            Error::ConfigInvalid("expansion needs a phase with monomial derivative".into())
        })
}

/// `F^1 = f / conj(Phi')`, `F^{j+1} = dbar F^j / conj(Phi')` for `j <= iterates`, returning `K + 1`
/// functions for `iterates = K`. Requires `deg f >= 2K + 1`.
pub fn expansion_iterates(
    f: &TestFunction,
    phase: &CgoPhase,
    iterates: usize,
) -> Result<Vec<TestFunction>> {
    let degree = f.degree().unwrap_or(i32::MAX);
    if degree < 2 * iterates as i32 + 1 {
        return Err(Error::DegreeTooLow {
            degree: degree.max(0) as usize,
            iterates,
        });
    }
    let (c, m) = monomial_phase(phase)?;
    let inverse = c.conj().inv();
    let mut out = vec![f.times_monomial(inverse, 0, -m)];
    for _ in 0..iterates {
        let next = out
            .last()
            .expect("nonempty")
            .dbar()
            .times_monomial(inverse, 0, -m);
        out.push(next);
    }
    Ok(out)
}

/// `dbar_psi^{-1} f - e^{-2 i psi/h} sum_j (-1)^{j+1} h^j F^j` on the grid; the plateau `L^2` norm of
/// this remainder decays like `h^{K+1}` or faster.
pub fn expansion_remainder(ctx: &CgoContext, f: &TestFunction, iterates: usize) -> Result<f64> {
    let domain = *ctx.domain();
    let fs = expansion_iterates(f, &ctx.phase, iterates)?;
    let h = ctx.h;
    let mut series = ComplexField::zeros(domain);
    let mut weight = -1.0;
    for term in &fs {
        weight *= -h;
        series = &series + &term.field(&domain).scaled(weight);
    }
    let direct = ctx.dbar_psi_inverse(&f.field(&domain));
    let remainder = ComplexField::from_vec(
        domain,
        direct
            .values()
            .iter()
            .zip(series.values())
            .zip(ctx.wave())
            .map(|((d, s), w)| d - s * w.conj())
            .collect(),
    )?;
    Ok(ctx.plateau_norm(&remainder, 2.0))
}

/// `(-1)^l D^l f` with `D F = (2 Phi'/h) F + d F`, so that
/// `int e^{4 i psi/h} f d^l r = int e^{4 i psi/h} ((-1)^l D^l f) r` for compactly supported `f`.
pub fn transpose_derivative(
    f: &TestFunction,
    phase: &CgoPhase,
    h: f64,
    order: usize,
) -> Result<TestFunction> {
    let (c, m) = monomial_phase(phase)?;
    let mut g = f.clone();
    for _ in 0..order {
        g = &g.times_monomial(c * (2.0 / h), m, 0) + &g.d();
        g = g.scaled(Complex64::new(-1.0, 0.0));
    }
    Ok(g)
}
