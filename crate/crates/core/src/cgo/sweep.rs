use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::amplitude::CgoAmplitude;
use super::asymptotics::{quartic_gradient_integral, second_order_integral};
use super::calculus::{expansion_remainder, transpose_derivative, TestFunction};
use super::diff::partial_z;
use super::patch::Patch;
use super::phase::CgoPhase;
use super::solution::{
    build_cgo, build_cgo_tilde, residual_check, CgoContext, ResidualReport, DEFAULT_TERMS,
};
use super::{bump_potential, CauchyTransform};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::geometry::{ComplexField, Mat2, RealField};

/// Allowed shortfall of a fitted slope below its floor.
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// Largest relative spread of `h * I(h)` over the last three sweep points.
pub const PLATEAU_DRIFT: f64 = 0.05;

/// `{2^-4, ..., 2^-9}`.
pub fn default_sweep() -> Vec<f64> {
    (4..=9).map(|k| 0.5f64.powi(k)).collect()
}

/// Settings shared by the CGO sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgoConfig {
    pub hs: Vec<f64>,
    /// Sweep for the second-order identity, whose third solution oscillates twice as fast.
    pub second_order_hs: Vec<f64>,
    pub patch: Patch,
    pub potential_amplitude: f64,
    pub terms: usize,
    /// Width of the Gaussian factor of the test functions.
    pub sigma: f64,
    /// Slopes of test-function quantities are fitted on the points with `h <= asymptotic_ratio *
    /// sigma^2`; coarser points lie outside the stationary-phase regime.
    pub asymptotic_ratio: f64,
}

impl Default for CgoConfig {
    fn default() -> Self {
        Self {
            hs: default_sweep(),
            second_order_hs: (4..=8).map(|k| 0.5f64.powi(k)).collect(),
            patch: Patch::default(),
            potential_amplitude: 4.0,
            terms: DEFAULT_TERMS,
            sigma: 0.16,
            asymptotic_ratio: 1.0,
        }
    }
}

impl CgoConfig {
    /// Largest `h` used in slope fits of test-function quantities.
    pub fn asymptotic_h(&self) -> f64 {
        self.asymptotic_ratio * self.sigma * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        self.patch.validate()?;
        let positive = |hs: &[f64]| hs.iter().all(|h| *h > 0.0 && h.is_finite());
        if self.hs.len() < 2 || !positive(&self.hs) || !positive(&self.second_order_hs) {
            return Err(Error::ConfigInvalid(
                "CGO sweeps need at least two positive h".into(),
            ));
        }
        if self.terms == 0
            || !(self.sigma > 0.0)
            || !(self.asymptotic_ratio > 0.0)
            || !self.potential_amplitude.is_finite()
        {
            return Err(Error::ConfigInvalid(
                "invalid CGO series or test-function settings".into(),
            ));
        }
        Ok(())
    }

    fn potential(&self, ctx: &CgoContext) -> RealField {
        bump_potential(ctx.domain(), self.potential_amplitude)
    }
}

/// One entry of the nonlinear-calculus suite: `int e^{4 i psi/h} f L` for a test function `f` of
/// known degree and a remainder expression `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalculusCase {
    /// `L = r`.
    Remainder { degree: u32 },
    /// `L = d^order r`.
    RemainderDerivative { degree: u32, order: u32 },
    /// `L = r~`.
    TildeRemainder { degree: u32 },
    /// `L = r r~`.
    RemainderProduct { degree: u32 },
    /// `L = (d r) r~`.
    DerivativeProduct { degree: u32 },
}

impl CalculusCase {
    /// The default suite.
    pub fn suite() -> Vec<CalculusCase> {
        let mut cases: Vec<CalculusCase> = (0..=4)
            .map(|degree| CalculusCase::Remainder { degree })
            .collect();
        cases.extend(
            [(2, 1), (3, 1), (4, 2)]
                .map(|(degree, order)| CalculusCase::RemainderDerivative { degree, order }),
        );
        cases.extend([
            CalculusCase::TildeRemainder { degree: 4 },
            CalculusCase::RemainderProduct { degree: 4 },
            CalculusCase::DerivativeProduct { degree: 3 },
        ]);
        cases
    }

    pub fn name(&self) -> String {
        match *self {
            CalculusCase::Remainder { degree } => format!("remainder_deg{degree}"),
            CalculusCase::RemainderDerivative { degree, order } => {
                format!("remainder_derivative_deg{degree}_order{order}")
            }
            CalculusCase::TildeRemainder { degree } => format!("tilde_remainder_deg{degree}"),
            CalculusCase::RemainderProduct { degree } => format!("remainder_product_deg{degree}"),
            CalculusCase::DerivativeProduct { degree } => {
                format!("derivative_product_deg{degree}")
            }
        }
    }

    pub fn degree(&self) -> u32 {
        match *self {
            CalculusCase::Remainder { degree }
            | CalculusCase::RemainderDerivative { degree, .. }
            | CalculusCase::TildeRemainder { degree }
            | CalculusCase::RemainderProduct { degree }
            | CalculusCase::DerivativeProduct { degree } => degree,
        }
    }

    pub fn derivative_order(&self) -> u32 {
        match *self {
            CalculusCase::RemainderDerivative { order, .. } => order,
            CalculusCase::DerivativeProduct { .. } => 1,
            _ => 0,
        }
    }

    /// Decay exponent the integral must exceed: `floor((deg - l)/2) + 1` for single remainders,
    /// `deg / 2 + 1` for products with a degree-4 function and `2` for the degree-3 derivative product.
    pub fn floor(&self) -> f64 {
        match *self {
            CalculusCase::Remainder { degree } | CalculusCase::TildeRemainder { degree } => {
                (degree / 2 + 1) as f64
            }
            CalculusCase::RemainderDerivative { degree, order } => {
                ((degree - order) / 2 + 1) as f64
            }
            CalculusCase::RemainderProduct { .. } => 3.0,
            CalculusCase::DerivativeProduct { .. } => 2.0,
        }
    }

    /// `chi z^k conj(z)^l` with `k + l = deg` and `k - l` equal to 0 or 1.
    pub fn test_function(&self, sigma: f64) -> TestFunction {
        let degree = self.degree() as i32;
        TestFunction::monomial(sigma, (degree + 1) / 2, degree / 2)
    }

    fn evaluate(
        &self,
        ctx: &CgoContext,
        sigma: f64,
        r: &ComplexField,
        r_tilde: &ComplexField,
        dr: &ComplexField,
    ) -> Result<Complex64> {
        let f = self.test_function(sigma);
        let domain = *ctx.domain();
        let integrand = match *self {
            CalculusCase::Remainder { .. } => f.field(&domain).zip_map(r, |a, b| a * b),
            CalculusCase::RemainderDerivative { order, .. } => {
                transpose_derivative(&f, &ctx.phase, ctx.h, order as usize)?
                    .field(&domain)
                    .zip_map(r, |a, b| a * b)
            }
            CalculusCase::TildeRemainder { .. } => f.field(&domain).zip_map(r_tilde, |a, b| a * b),
            CalculusCase::RemainderProduct { .. } => f
                .field(&domain)
                .zip_map(&r.zip_map(r_tilde, |a, b| a * b), |a, b| a * b),
            CalculusCase::DerivativeProduct { .. } => f
                .field(&domain)
                .zip_map(&dr.zip_map(r_tilde, |a, b| a * b), |a, b| a * b),
        };
        Ok(ctx.oscillatory_integral(&integrand, 4))
    }
}

/// Everything measured at one `h` of the main sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub h: f64,
    pub nodes: usize,
    pub max_ratio: f64,
    pub r_l2: f64,
    pub r_l4: f64,
    pub r_tilde_l2: f64,
    /// `||dbar_psi^{-1} omega||` for a degree-0 Gaussian `omega`.
    pub conjugated_inverse_l2: f64,
    /// Remainder after the leading term `h e^{-2 i psi/h} F^1` for a degree-1 input.
    pub leading_term_remainder: f64,
    /// Remainder after two expansion iterates for a degree-3 input.
    pub expansion_remainder: f64,
    pub calculus: BTreeMap<String, Complex64>,
    /// `int Q [...]` of the third-order identity with `Q(0) != 0`, full and leading term.
    pub quartic: Complex64,
    pub quartic_leading: Complex64,
    /// The same integral with `Q` vanishing near the critical point.
    pub quartic_vanishing: Complex64,
}

/// A sweep point that was skipped, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedPoint {
    pub h: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub dropped: Vec<DroppedPoint>,
}

/// Center and width of the flat-topped quartic weight.
const QUARTIC_CENTER: [f64; 2] = [0.02, -0.01];
const QUARTIC_WIDTH: f64 = 0.22;

fn flat_top(x: f64, y: f64) -> f64 {
    let t = ((x - QUARTIC_CENTER[0]).powi(2) + (y - QUARTIC_CENTER[1]).powi(2))
        / (QUARTIC_WIDTH * QUARTIC_WIDTH);
    (-t.powi(3)).exp()
}

/// Weight of the quartic integral with `Q(0) != 0`: `exp(-(|z - c| / width)^6)`.
///
/// The flat top removes the low-order stationary-phase corrections, and the analytic decay keeps the
/// edge contributions negligible at moderate `h`.
pub fn quartic_weight(ctx: &CgoContext) -> RealField {
    RealField::from_fn(*ctx.domain(), flat_top)
}

/// Weight of the quartic integral vanishing at the critical point: a linear factor times
/// [`quartic_weight`].
pub fn vanishing_quartic_weight(ctx: &CgoContext) -> RealField {
    RealField::from_fn(*ctx.domain(), |x, y| {
        (x - 0.5 * y) / QUARTIC_WIDTH * flat_top(x, y)
    })
}

fn context_or_drop(
    phase: &CgoPhase,
    h: f64,
    patch: Patch,
    dropped: &mut Vec<DroppedPoint>,
) -> Result<Option<CgoContext>> {
    match CgoContext::new(phase.clone(), h, patch) {
        Ok(ctx) => Ok(Some(ctx)),
        Err(e @ Error::UnderResolved { .. }) => {
            dropped.push(DroppedPoint {
                h,
                reason: e.to_string(),
            });
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs the main CGO sweep for `Phi = z^2 / 2` and unit amplitude.
pub fn run_sweep(config: &CgoConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let phase = CgoPhase::quadratic();
    let amplitude = CgoAmplitude::default();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &h in &config.hs {
        let Some(ctx) = context_or_drop(&phase, h, config.patch, &mut dropped)? else {
            continue;
        };
        let q = config.potential(&ctx);
        let sol = build_cgo(&ctx, &amplitude, &q, config.terms)?;
        let tilde = build_cgo_tilde(&ctx, &amplitude, &q, config.terms)?;
        let dr = partial_z(&sol.r);
        let mut calculus = BTreeMap::new();
        for case in CalculusCase::suite() {
            let value = case.evaluate(&ctx, config.sigma, &sol.r, &tilde.r, &dr)?;
            calculus.insert(case.name(), value);
        }
        let domain = *ctx.domain();
        let omega = TestFunction::monomial(config.sigma, 0, 0);
        let weight = quartic_weight(&ctx);
        let vanishing = vanishing_quartic_weight(&ctx);
        points.push(SweepPoint {
            h,
            nodes: domain.nx,
            max_ratio: sol
                .ratios
                .iter()
                .chain(&tilde.ratios)
                .copied()
                .fold(0.0, f64::max),
            r_l2: ctx.plateau_norm(&sol.r, 2.0),
            r_l4: ctx.plateau_norm(&sol.r, 4.0),
            r_tilde_l2: ctx.plateau_norm(&tilde.r, 2.0),
            conjugated_inverse_l2: ctx
                .plateau_norm(&ctx.dbar_psi_inverse(&omega.field(&domain)), 2.0),
            leading_term_remainder: expansion_remainder(
                &ctx,
                &TestFunction::monomial(config.sigma, 0, 1),
                0,
            )?,
            expansion_remainder: expansion_remainder(
                &ctx,
                &TestFunction::monomial(config.sigma, 1, 2),
                1,
            )?,
            calculus,
            quartic: quartic_gradient_integral(
                &ctx,
                &amplitude,
                Some(&sol.r),
                Some(&tilde.r),
                &weight,
            ),
            quartic_leading: quartic_gradient_integral(&ctx, &amplitude, None, None, &weight),
            quartic_vanishing: quartic_gradient_integral(
                &ctx,
                &amplitude,
                Some(&sol.r),
                Some(&tilde.r),
                &vanishing,
            ),
        });
    }
    Ok(SweepOutcome { points, dropped })
}

/// Full and leading-term second-order integrals at one `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderPoint {
    pub h: f64,
    pub nodes: usize,
    pub full: Complex64,
    pub leading: Complex64,
}

impl SecondOrderPoint {
    pub fn difference(&self) -> f64 {
        (self.full - self.leading).norm()
    }
}

/// Constant tensor of the second-order integral; its scalar weight is [`quartic_weight`].
pub fn second_order_tensor() -> Mat2 {
    Mat2::new(1.0, 0.3, 0.3, -0.5)
}

/// Second-order integral with the triple `Phi, Phi, -2 conj(Phi)` on grids resolving `2 Phi`.
pub fn run_second_order_sweep(
    config: &CgoConfig,
) -> Result<(Vec<SecondOrderPoint>, Vec<DroppedPoint>)> {
    config.validate()?;
    let phase = CgoPhase::quadratic();
    let doubled = phase.scaled(Complex64::new(2.0, 0.0));
    let amplitude = CgoAmplitude::default();
    let tensor = second_order_tensor();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &h in &config.second_order_hs {
        let Some(ctx3) = context_or_drop(&doubled, h, config.patch, &mut dropped)? else {
            continue;
        };
        let ctx = CgoContext::with_transform(
            phase.clone(),
            h,
            config.patch,
            Arc::clone(ctx3.transform()),
        )?;
        let q = config.potential(&ctx);
        let sol = build_cgo(&ctx, &amplitude, &q, config.terms)?;
        let third = build_cgo_tilde(&ctx3, &amplitude, &q, config.terms)?;
        let weight = quartic_weight(&ctx);
        points.push(SecondOrderPoint {
            h,
            nodes: ctx.domain().nx,
            full: second_order_integral(
                &ctx,
                &amplitude,
                Some(&sol.r),
                Some(&third.r),
                &weight,
                &tensor,
            ),
            leading: second_order_integral(&ctx, &amplitude, None, None, &weight, &tensor),
        });
    }
    Ok((points, dropped))
}

/// Residual of the constructed solution and its tilde partner at one `h` on an `nodes`-point grid.
pub fn residual_at(
    config: &CgoConfig,
    h: f64,
    terms: usize,
    nodes: usize,
) -> Result<(ResidualReport, ResidualReport)> {
    let phase = CgoPhase::quadratic();
    let patch = Patch {
        min_nodes: nodes,
        max_nodes: nodes.max(config.patch.max_nodes),
        ..config.patch
    };
    let domain = patch.domain_for(&phase, h)?;
    let ctx = CgoContext::with_transform(phase, h, patch, Arc::new(CauchyTransform::new(&domain)))?;
    let q = config.potential(&ctx);
    let amplitude = CgoAmplitude::default();
    let sol = build_cgo(&ctx, &amplitude, &q, terms)?;
    let tilde = build_cgo_tilde(&ctx, &amplitude, &q, terms)?;
    Ok((
        residual_check(&ctx, &sol, &q),
        residual_check(&ctx, &tilde, &q),
    ))
}

/// One row of a slope table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub case: String,
    pub degree: Option<u32>,
    pub derivative_order: Option<u32>,
    pub hs: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `h` entering the slope fit.
    pub fit_max_h: f64,
    pub slope: Option<f64>,
    pub floor: f64,
    pub pass: bool,
}

impl SlopeRow {
    fn new(
        case: String,
        degree: Option<u32>,
        derivative_order: Option<u32>,
        hs: Vec<f64>,
        values: Vec<f64>,
        fit_max_h: f64,
        floor: f64,
        tolerance: f64,
    ) -> Self {
        let (fit_hs, fit_values): (Vec<f64>, Vec<f64>) = hs
            .iter()
            .zip(&values)
            .filter(|(h, _)| **h <= fit_max_h)
            .unzip();
        let slope = loglog_slope(&fit_hs, &fit_values);
        let pass = slope.is_some_and(|s| s >= floor - tolerance);
        Self {
            case,
            degree,
            derivative_order,
            hs,
            values,
            fit_max_h,
            slope,
            floor,
            pass,
        }
    }
}

impl SweepOutcome {
    pub fn hs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.h).collect()
    }

    fn column(&self, f: impl Fn(&SweepPoint) -> f64) -> Vec<f64> {
        self.points.iter().map(f).collect()
    }

    /// Decay rows of the remainder and the conjugated inverses; floors are met exactly. Remainder
    /// norms are fitted over the whole sweep, test-function rows up to `asymptotic_h`.
    pub fn decay_table(&self, asymptotic_h: f64) -> Vec<SlopeRow> {
        let row = |name: &str, max_h: f64, floor: f64, f: &dyn Fn(&SweepPoint) -> f64| {
            SlopeRow::new(
                name.into(),
                None,
                None,
                self.hs(),
                self.column(f),
                max_h,
                floor,
                0.0,
            )
        };
        let all = f64::INFINITY;
        vec![
            row("remainder_l2", all, 0.5, &|p| p.r_l2),
            row("remainder_l4", all, 0.25, &|p| p.r_l4),
            row("tilde_remainder_l2", all, 0.5, &|p| p.r_tilde_l2),
            row("conjugated_inverse_deg0_l2", asymptotic_h, 0.5, &|p| {
                p.conjugated_inverse_l2
            }),
            row("leading_term_remainder_deg1", asymptotic_h, 1.0, &|p| {
                p.leading_term_remainder
            }),
            row("expansion_remainder_deg3", asymptotic_h, 2.4, &|p| {
                p.expansion_remainder
            }),
        ]
    }

    /// The nonlinear-calculus slope table.
    pub fn calculus_table(&self, asymptotic_h: f64) -> Vec<SlopeRow> {
        CalculusCase::suite()
            .into_iter()
            .map(|case| {
                let name = case.name();
                SlopeRow::new(
                    name.clone(),
                    Some(case.degree()),
                    Some(case.derivative_order()),
                    self.hs(),
                    self.column(|p| p.calculus[&name].norm()),
                    asymptotic_h,
                    case.floor(),
                    SLOPE_TOLERANCE,
                )
            })
            .collect()
    }

    /// `h * I(h)` for the quartic integral with `Q(0) != 0`.
    pub fn scaled_quartic(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.quartic * p.h).collect()
    }

    /// Largest pairwise spread of `h I(h)` over the last three points, relative to the last.
    pub fn plateau_drift(&self) -> f64 {
        let v = self.scaled_quartic();
        let tail = &v[v.len().saturating_sub(3)..];
        let last = tail.last().map_or(0.0, |z| z.norm());
        let spread = tail
            .iter()
            .flat_map(|a| tail.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        spread / last
    }

    /// `max |h I_0(h)| / |h I(h)|` at the finest point for the weight vanishing near the critical point.
    pub fn vanishing_ratio(&self) -> f64 {
        self.points.last().map_or(f64::INFINITY, |p| {
            p.quartic_vanishing.norm() / p.quartic.norm()
        })
    }
}
