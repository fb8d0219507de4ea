use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::diff::partial_z;
use crate::error::{Error, Result};
use crate::geometry::{ComplexField, Domain};

/// Fraction of each side treated as the cutoff margin by [`dbar_inverse`].
pub const MARGIN_FRACTION: f64 = 0.1;

/// Relative size below which a field counts as vanishing in the margin.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Smallest length `>= n` whose prime factors are 2, 3 and 5.
fn fast_length(n: usize) -> usize {
    (n..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("unbounded search")
}

/// Discrete Cauchy transform `f -> (1/pi) int f(z) / (w - z) dA(z)` on a uniform grid.
///
/// The punctured trapezoidal sum runs through a zero-padded FFT. Its leading error is the local term
/// `dx dy d f(w) / pi`, which is subtracted, leaving a fourth-order rule for smooth compactly supported
/// fields on square cells.
pub struct CauchyTransform {
    domain: Domain,
    px: usize,
    py: usize,
    spectrum: Vec<Complex64>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CauchyTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CauchyTransform")
            .field("domain", &self.domain)
            .field("padded", &(self.px, self.py))
            .finish()
    }
}

impl CauchyTransform {
    pub fn new(domain: &Domain) -> Self {
        let (nx, ny) = (domain.nx, domain.ny);
        let (dx, dy) = (domain.dx(), domain.dy());
        let px = fast_length(2 * nx - 1);
        let py = fast_length(2 * ny - 1);
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(px);
        let ifft_x = planner.plan_fft_inverse(px);
        let fft_y = planner.plan_fft_forward(py);
        let ifft_y = planner.plan_fft_inverse(py);
        let mut kernel = vec![Complex64::new(0.0, 0.0); px * py];
        let wrap = |k: i64, p: usize| {
            if k < 0 {
                (k + p as i64) as usize
            } else {
                k as usize
            }
        };
        for n in -(ny as i64 - 1)..ny as i64 {
            for m in -(nx as i64 - 1)..nx as i64 {
                let (cx, cy) = (m as f64 * dx, n as f64 * dy);
                let w = if m == 0 && n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(dx * dy, 0.0) / Complex64::new(cx, cy)
                };
                kernel[wrap(n, py) * px + wrap(m, px)] = w / PI;
            }
        }
        let mut out = Self {
            domain: *domain,
            px,
            py,
            spectrum: Vec::new(),
            fft_x,
            ifft_x,
            fft_y,
            ifft_y,
        };
        out.forward(&mut kernel);
        let scale = 1.0 / (px * py) as f64;
        out.spectrum = kernel.into_iter().map(|k| k * scale).collect();
        out
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn transpose(src: &[Complex64], rows: usize, cols: usize, dst: &mut [Complex64]) {
        const BLOCK: usize = 32;
        for rb in (0..rows).step_by(BLOCK) {
            for cb in (0..cols).step_by(BLOCK) {
                for r in rb..(rb + BLOCK).min(rows) {
                    for c in cb..(cb + BLOCK).min(cols) {
                        dst[c * rows + r] = src[r * cols + c];
                    }
                }
            }
        }
    }

    /// Forward 2D FFT; the result is left transposed (`py`-long rows).
    fn forward(&self, buf: &mut Vec<Complex64>) {
        self.fft_x.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
        Self::transpose(buf, self.py, self.px, &mut t);
        self.fft_y.process(&mut t);
        *buf = t;
    }

    /// Inverse of [`Self::forward`] without normalization.
    fn inverse(&self, buf: &mut Vec<Complex64>) {
        self.ifft_y.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
        Self::transpose(buf, self.px, self.py, &mut t);
        self.ifft_x.process(&mut t);
        *buf = t;
    }

    /// `dbar^{-1} f` for grid values `f`, without support checks.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.px * self.py];
        for j in 0..ny {
            buf[j * self.px..j * self.px + nx].copy_from_slice(&f[j * nx..(j + 1) * nx]);
        }
        self.forward(&mut buf);
        buf.iter_mut()
            .zip(&self.spectrum)
            .for_each(|(b, k)| *b *= k);
        self.inverse(&mut buf);
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            out.extend_from_slice(&buf[j * self.px..j * self.px + nx]);
        }
        let field = ComplexField::from_vec(self.domain, f.to_vec()).expect("grid shape");
        let weight = self.domain.dx() * self.domain.dy() / PI;
        out.iter_mut()
            .zip(partial_z(&field).values())
            .for_each(|(o, d)| *o -= d * weight);
        out
    }

    /// `d^{-1} f = conj(dbar^{-1} conj f)`, the transform with kernel `1 / (pi (conj w - conj z))`.
    pub fn apply_conjugate(&self, f: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = f.iter().map(|v| v.conj()).collect();
        self.apply(&conj).into_iter().map(|v| v.conj()).collect()
    }
}

/// Largest `|f|` inside the outer margin of the domain, relative to `max |f|`.
pub fn margin_mass(f: &ComplexField) -> f64 {
    let d = f.domain();
    let (mx, my) = (
        MARGIN_FRACTION * (d.x1 - d.x0),
        MARGIN_FRACTION * (d.y1 - d.y0),
    );
    let peak = f.sup_norm();
    if peak == 0.0 {
        return 0.0;
    }
    f.values()
        .iter()
        .enumerate()
        .filter(|(n, _)| {
            let (x, y) = d.coords(*n);
            x < d.x0 + mx || x > d.x1 - mx || y < d.y0 + my || y > d.y1 - my
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
        / peak
}

/// `dbar^{-1} f` for a field vanishing in the cutoff margin.
pub fn dbar_inverse(f: &ComplexField) -> Result<ComplexField> {
    let mass = margin_mass(f);
    if mass > SUPPORT_TOL {
        return Err(Error::SupportViolation { mass });
    }
    let transform = CauchyTransform::new(f.domain());
    ComplexField::from_vec(*f.domain(), transform.apply(f.values()))
}

/// `d^{-1} f` for a field vanishing in the cutoff margin.
pub fn d_inverse(f: &ComplexField) -> Result<ComplexField> {
    Ok(dbar_inverse(&f.conj())?.conj())
}
