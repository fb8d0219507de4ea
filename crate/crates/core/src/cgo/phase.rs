use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, Mat2, RealField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Evaluates `sum c_k z^k` by Horner's rule.
pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
}

/// Coefficients of the derivative of `sum c_k z^k`.
pub(crate) fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// Roots of a polynomial by the Durand-Kerner iteration.
fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let Some(top) = coeffs.iter().rposition(|c| c.norm() > 0.0) else {
        return Vec::new();
    };
    let degree = top;
    if degree == 0 {
        return Vec::new();
    }
    let monic: Vec<Complex64> = coeffs[..=top].iter().map(|c| c / coeffs[top]).collect();
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut shift = 0.0f64;
        for k in 0..degree {
            let denom = (0..degree)
                .filter(|&m| m != k)
                .fold(Complex64::new(1.0, 0.0), |acc, m| acc * (z[k] - z[m]));
            let step = horner(&monic, z[k]) / denom;
            z[k] -= step;
            shift = shift.max(step.norm());
        }
        if shift < 1e-15 {
            break;
        }
    }
    z
}

/// A critical point of the phase with its Morse flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub re: f64,
    pub im: f64,
    /// `det Hess psi != 0`.
    pub morse: bool,
}

impl CriticalPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Holomorphic polynomial phase `Phi(z) = sum c_k z^k` with `phi = Re Phi`, `psi = Im Phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgoPhase {
    pub coeffs: Vec<Complex64>,
}

impl CgoPhase {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// `Phi = z^2 / 2`, a Morse phase with its only critical point at the origin.
    pub fn quadratic() -> Self {
        Self::new(vec![ZERO, ZERO, Complex64::new(0.5, 0.0)])
    }

    /// `factor * Phi`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `e^{i theta} Phi`.
    pub fn rotated(&self, theta: f64) -> Self {
        self.scaled(Complex64::from_polar(1.0, theta))
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        horner(&derivative_coeffs(&self.coeffs), z)
    }

    pub fn second_derivative(&self, z: Complex64) -> Complex64 {
        horner(&derivative_coeffs(&derivative_coeffs(&self.coeffs)), z)
    }

    /// `(c, m)` when `Phi' = c z^m`.
    pub fn monomial_derivative(&self) -> Option<(Complex64, u32)> {
        let d = derivative_coeffs(&self.coeffs);
        let nonzero: Vec<usize> = (0..d.len()).filter(|&k| d[k].norm() > 0.0).collect();
        match nonzero.as_slice() {
            [m] => Some((d[*m], *m as u32)),
            _ => None,
        }
    }

    pub fn psi(&self, domain: &Domain) -> RealField {
        RealField::from_fn(*domain, |x, y| self.value(Complex64::new(x, y)).im)
    }

    pub fn phi(&self, domain: &Domain) -> RealField {
        RealField::from_fn(*domain, |x, y| self.value(Complex64::new(x, y)).re)
    }

    /// `max |grad psi| = max |Phi'|` over the disk of the given radius, attained on its boundary.
    pub fn max_gradient(&self, radius: f64) -> f64 {
        if let Some((c, m)) = self.monomial_derivative() {
            return c.norm() * radius.powi(m as i32);
        }
        (0..4096)
            .map(|k| {
                let z = Complex64::from_polar(radius, 2.0 * PI * k as f64 / 4096.0);
                self.derivative(z).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn critical_points(&self) -> Vec<CriticalPoint> {
        roots(&derivative_coeffs(&self.coeffs))
            .into_iter()
            .map(|z| CriticalPoint {
                re: z.re,
                im: z.im,
                morse: self.hessian_psi_det(z).abs() > 1e-12,
            })
            .collect()
    }

    /// `det Hess psi = -|Phi''|^2`.
    pub fn hessian_psi_det(&self, z: Complex64) -> f64 {
        -self.second_derivative(z).norm_sqr()
    }

    /// Real and imaginary parts `S`, `A` of `Hess Phi = Phi'' [[1, i], [i, -1]]`.
    pub fn hessian_split(&self, z: Complex64) -> (Mat2, Mat2) {
        let p = self.second_derivative(z);
        let s = Mat2::new(p.re, -p.im, -p.im, -p.re);
        let a = Mat2::new(p.im, p.re, p.re, -p.im);
        (s, a)
    }
}

/// The exponent `Theta` of a solution `e^{Theta/h}(...)`: either `Phi` or `conj(Phi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionPhase {
    pub base: CgoPhase,
    pub antiholomorphic: bool,
}

impl SolutionPhase {
    pub fn holomorphic(base: CgoPhase) -> Self {
        Self {
            base,
            antiholomorphic: false,
        }
    }

    pub fn antiholomorphic(base: CgoPhase) -> Self {
        Self {
            base,
            antiholomorphic: true,
        }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        let v = self.base.value(z);
        if self.antiholomorphic {
            v.conj()
        } else {
            v
        }
    }

    /// `(d/dx Theta, d/dy Theta)`.
    pub fn gradient(&self, z: Complex64) -> [Complex64; 2] {
        let i = Complex64::i();
        if self.antiholomorphic {
            let d = self.base.derivative(z).conj();
            [d, -i * d]
        } else {
            let d = self.base.derivative(z);
            [d, i * d]
        }
    }

    /// Phases `Phi, Phi, -2 conj(Phi)` of the second-order identity; their sum is `4 i psi`.
    pub fn second_order_triple(phase: &CgoPhase) -> [SolutionPhase; 3] {
        [
            Self::holomorphic(phase.clone()),
            Self::holomorphic(phase.clone()),
            Self::antiholomorphic(phase.scaled(Complex64::new(-2.0, 0.0))),
        ]
    }

    /// Phases `Phi, -conj(Phi), Phi, -conj(Phi)` of the third-order identity.
    pub fn third_order_quadruple(phase: &CgoPhase) -> [SolutionPhase; 4] {
        let hol = Self::holomorphic(phase.clone());
        let anti = Self::antiholomorphic(phase.scaled(Complex64::new(-1.0, 0.0)));
        [hol.clone(), anti.clone(), hol, anti]
    }

    /// `max |Re sum Theta_j|` over the grid.
    pub fn real_part_of_sum(phases: &[SolutionPhase], domain: &Domain) -> f64 {
        (0..domain.len())
            .map(|n| {
                let (x, y) = domain.coords(n);
                let z = Complex64::new(x, y);
                phases
                    .iter()
                    .map(|p| p.value(z))
                    .sum::<Complex64>()
                    .re
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}
