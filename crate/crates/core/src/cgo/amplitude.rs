use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phase::{derivative_coeffs, horner};
use crate::geometry::{ComplexField, Domain};

/// Holomorphic polynomial amplitude `a(z) = sum c_k z^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgoAmplitude {
    pub coeffs: Vec<Complex64>,
}

impl Default for CgoAmplitude {
    fn default() -> Self {
        Self::constant(1.0)
    }
}

impl CgoAmplitude {
    pub fn constant(value: f64) -> Self {
        Self {
            coeffs: vec![Complex64::new(value, 0.0)],
        }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        horner(&derivative_coeffs(&self.coeffs), z)
    }

    pub fn field(&self, domain: &Domain) -> ComplexField {
        ComplexField::from_fn(*domain, |x, y| self.value(Complex64::new(x, y)))
    }

    /// Order of contact of `a` with the constant `target` at `z`: the index of the first nonzero
    /// Taylor coefficient of `a - target`, or `None` when they agree identically.
    pub fn contact_order(&self, z: Complex64, target: Complex64) -> Option<usize> {
        let mut coeffs = self.coeffs.clone();
        let mut factorial = 1.0;
        for k in 0..self.coeffs.len() {
            if k > 0 {
                factorial *= k as f64;
            }
            let mut taylor = horner(&coeffs, z) / factorial;
            if k == 0 {
                taylor -= target;
            }
            if taylor.norm() > 1e-12 {
                return Some(k);
            }
            coeffs = derivative_coeffs(&coeffs);
        }
        None
    }
}
