use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::amplitude::CgoAmplitude;
use super::cauchy::CauchyTransform;
use super::diff::{laplacian, partial_z, partial_zbar};
use super::patch::Patch;
use super::phase::CgoPhase;
use crate::error::{Error, Result};
use crate::geometry::{ComplexField, Domain, RealField};

/// Measured contraction ratios at or above this value abort the Neumann series.
pub const MAX_CONTRACTION: f64 = 0.9;

/// Default number of `T_h` applications.
pub const DEFAULT_TERMS: usize = 8;

/// The conjugated Cauchy inverses of one phase at one `h` on one grid.
///
/// With `E` the patch cutoff and `w = e^{2 i psi / h}`:
/// `dbar_psi^{-1} f = dbar^{-1}(conj(w) E f)`, `dbar_psi^{*-1} f = d^{-1}(w E f)`,
/// `d_psi^{-1} f = d^{-1}(conj(w) E f)` and `d_psi^{*-1} f = dbar^{-1}(w E f)`.
pub struct CgoContext {
    pub h: f64,
    pub phase: CgoPhase,
    pub patch: Patch,
    transform: Arc<CauchyTransform>,
    cutoff: Vec<f64>,
    wave: Vec<Complex64>,
    plateau: Vec<f64>,
}

impl std::fmt::Debug for CgoContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CgoContext")
            .field("h", &self.h)
            .field("phase", &self.phase)
            .field("patch", &self.patch)
            .field("domain", self.domain())
            .finish()
    }
}

impl CgoContext {
    /// Context on the grid the oscillation guard assigns to `h`.
    pub fn new(phase: CgoPhase, h: f64, patch: Patch) -> Result<Self> {
        let domain = patch.domain_for(&phase, h)?;
        Self::with_transform(phase, h, patch, Arc::new(CauchyTransform::new(&domain)))
    }

    /// Context reusing a transform, whose grid must satisfy the guard.
    pub fn with_transform(
        phase: CgoPhase,
        h: f64,
        patch: Patch,
        transform: Arc<CauchyTransform>,
    ) -> Result<Self> {
        patch.validate()?;
        let domain = *transform.domain();
        patch.check_resolution(&domain, &phase, h)?;
        let psi = phase.psi(&domain);
        let wave = psi
            .values()
            .iter()
            .map(|p| Complex64::from_polar(1.0, 2.0 * p / h))
            .collect();
        let weights = domain.node_weights();
        let plateau = (0..domain.len())
            .map(|n| {
                let (x, y) = domain.coords(n);
                if patch.in_plateau(x, y) {
                    weights[n]
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            h,
            cutoff: patch.cutoff_field(&domain).into_values(),
            phase,
            patch,
            transform,
            wave,
            plateau,
        })
    }

    /// The same grid and transform for the phase `-Phi`.
    pub fn reflected(&self) -> Self {
        let phase = self.phase.scaled(Complex64::new(-1.0, 0.0));
        Self {
            h: self.h,
            phase,
            patch: self.patch,
            transform: Arc::clone(&self.transform),
            cutoff: self.cutoff.clone(),
            wave: self.wave.iter().map(|w| w.conj()).collect(),
            plateau: self.plateau.clone(),
        }
    }

    pub fn domain(&self) -> &Domain {
        self.transform.domain()
    }

    pub fn transform(&self) -> &Arc<CauchyTransform> {
        &self.transform
    }

    /// `e^{2 i psi / h}` on the grid.
    pub fn wave(&self) -> &[Complex64] {
        &self.wave
    }

    fn weighted(&self, f: &ComplexField, conjugate_wave: bool) -> Vec<Complex64> {
        f.values()
            .iter()
            .zip(&self.wave)
            .zip(&self.cutoff)
            .map(|((v, w), c)| {
                let w = if conjugate_wave { w.conj() } else { *w };
                v * w * *c
            })
            .collect()
    }

    fn field(&self, values: Vec<Complex64>) -> ComplexField {
        ComplexField::from_vec(*self.domain(), values).expect("grid shape")
    }

    pub fn dbar_psi_inverse(&self, f: &ComplexField) -> ComplexField {
        self.field(self.transform.apply(&self.weighted(f, true)))
    }

    pub fn dbar_psi_star_inverse(&self, f: &ComplexField) -> ComplexField {
        self.field(self.transform.apply_conjugate(&self.weighted(f, false)))
    }

    pub fn d_psi_inverse(&self, f: &ComplexField) -> ComplexField {
        self.field(self.transform.apply_conjugate(&self.weighted(f, true)))
    }

    pub fn d_psi_star_inverse(&self, f: &ComplexField) -> ComplexField {
        self.field(self.transform.apply(&self.weighted(f, false)))
    }

    /// Trapezoid `L^p` norm over the plateau, where the extension cutoff is one.
    pub fn plateau_norm(&self, f: &ComplexField, p: f64) -> f64 {
        f.values()
            .iter()
            .zip(&self.plateau)
            .map(|(v, w)| w * v.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// `int e^{i multiplier psi / h} f` by the trapezoid rule over the grid.
    pub fn oscillatory_integral(&self, f: &ComplexField, multiplier: u32) -> Complex64 {
        let weights = self.domain().node_weights();
        f.values()
            .iter()
            .zip(&self.wave)
            .zip(&weights)
            .map(|((v, w), dw)| v * w.powu(multiplier / 2) * *dw)
            .sum()
    }
}

/// A complex geometric optics solution `e^{Phi/h}(a + r)` or, for the tilde branch,
/// `e^{-conj(Phi)/h}(conj(a) + r)`.
#[derive(Clone, Debug)]
pub struct CgoSolution {
    pub h: f64,
    pub phase: CgoPhase,
    pub amplitude: CgoAmplitude,
    pub tilde: bool,
    pub r: ComplexField,
    pub s: ComplexField,
    /// Number of `T_h` applications summed.
    pub neumann_terms: usize,
    /// `||t_j|| / ||t_{j-1}||` for the computed series terms.
    pub ratios: Vec<f64>,
    /// Geometric bound on the truncated tail of the series.
    pub tail_bound: f64,
}

/// Builds `r = -dbar_psi^{-1} s` with `s = sum_{j <= terms} T^j dbar_psi^{*-1}(q a / 4)` and
/// `T = -dbar_psi^{*-1} (q / 4) dbar_psi^{-1}`, which solves `(Delta + q) e^{Phi/h}(a + r) = 0` on the
/// plateau for `Delta = d_xx + d_yy`.
pub fn build_cgo(
    ctx: &CgoContext,
    amplitude: &CgoAmplitude,
    q: &RealField,
    terms: usize,
) -> Result<CgoSolution> {
    if terms == 0 {
        return Err(Error::ConfigInvalid(
            "Neumann truncation must be at least 1".into(),
        ));
    }
    let domain = *ctx.domain();
    if q.domain() != &domain {
        return Err(Error::ShapeMismatch("potential and CGO grid differ".into()));
    }
    let quarter = q.scaled(0.25).to_complex();
    let a = amplitude.field(&domain);
    let mut term = ctx.dbar_psi_star_inverse(&quarter.zip_map(&a, |q, a| q * a));
    let mut s = term.clone();
    let mut ratios = Vec::with_capacity(terms);
    let mut previous = ctx.plateau_norm(&term, 2.0);
    let mut tail_bound = 0.0;
    if previous > 0.0 {
        for _ in 0..terms {
            let inner = ctx.dbar_psi_inverse(&term);
            term = ctx
                .dbar_psi_star_inverse(&quarter.zip_map(&inner, |q, v| q * v))
                .scaled(-1.0);
            let norm = ctx.plateau_norm(&term, 2.0);
            let ratio = norm / previous;
            if !ratio.is_finite() || ratio >= MAX_CONTRACTION {
                return Err(Error::SeriesDiverging { ratio });
            }
            ratios.push(ratio);
            s = &s + &term;
            previous = norm;
            tail_bound = norm * ratio / (1.0 - ratio);
        }
    }
    let r = ctx.dbar_psi_inverse(&s).scaled(-1.0);
    Ok(CgoSolution {
        h: ctx.h,
        phase: ctx.phase.clone(),
        amplitude: amplitude.clone(),
        tilde: false,
        r,
        s,
        neumann_terms: terms,
        ratios,
        tail_bound,
    })
}

/// The tilde branch `e^{-conj(Phi)/h}(conj(a) + r~)`: the conjugate of the solution built with `-Phi`.
/// Requires a real potential.
pub fn build_cgo_tilde(
    ctx: &CgoContext,
    amplitude: &CgoAmplitude,
    q: &RealField,
    terms: usize,
) -> Result<CgoSolution> {
    let reflected = build_cgo(&ctx.reflected(), amplitude, q, terms)?;
    Ok(CgoSolution {
        phase: ctx.phase.clone(),
        tilde: true,
        r: reflected.r.conj(),
        s: reflected.s.conj(),
        ..reflected
    })
}

/// Plateau norms of the weighted residual `e^{-Phi/h}(Delta + q) v` and its reference sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: f64,
    pub qa_norm: f64,
    pub a_norm: f64,
}

impl ResidualReport {
    /// `||e^{-phi/h}(Delta + q) v|| / ||a||`.
    pub fn weighted(&self) -> f64 {
        self.residual / self.a_norm
    }

    /// Residual relative to `||q a||`.
    pub fn relative_to_potential(&self) -> f64 {
        self.residual / self.qa_norm
    }
}

/// Residual of the equation on the plateau with fourth-order differences:
/// `Delta r + 4 (Phi'/h) dbar r + q (a + r)`, or `Delta r - 4 (conj(Phi')/h) d r + q (conj(a) + r)`
/// for the tilde branch.
pub fn residual_check(ctx: &CgoContext, sol: &CgoSolution, q: &RealField) -> ResidualReport {
    let domain = *ctx.domain();
    let h = sol.h;
    let a = sol.amplitude.field(&domain);
    let a = if sol.tilde { a.conj() } else { a };
    let lap = laplacian(&sol.r);
    let first = if sol.tilde {
        partial_z(&sol.r)
    } else {
        partial_zbar(&sol.r)
    };
    let values: Vec<Complex64> = (0..domain.len())
        .map(|n| {
            let (x, y) = domain.coords(n);
            let d = sol.phase.derivative(Complex64::new(x, y));
            let coupling = if sol.tilde { -d.conj() } else { d } * (4.0 / h);
            lap.values()[n]
                + coupling * first.values()[n]
                + q.values()[n] * (a.values()[n] + sol.r.values()[n])
        })
        .collect();
    let residual = ComplexField::from_vec(domain, values).expect("grid shape");
    let qa = a.zip_map(q, |a, q| a * *q);
    ResidualReport {
        residual: ctx.plateau_norm(&residual, 2.0),
        qa_norm: ctx.plateau_norm(&qa, 2.0),
        a_norm: ctx.plateau_norm(&a, 2.0),
    }
}
