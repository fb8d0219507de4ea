//! The pipelines behind each subcommand. Every stage returns a typed report that knows its acceptance
//! criteria, its CSV tables and the grids it used.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cgo::{
    build_cgo, build_cgo_tilde, residual_at, run_second_order_sweep, run_sweep, CgoAmplitude,
    CgoContext, CgoPhase, DroppedPoint, ResidualReport, SecondOrderPoint, SlopeRow,
};
use crate::error::Result;
use crate::fit::loglog_slope;
use crate::forward::{
    area_first_variation, dn_from_areas, dn_map, AreaDerivative, BoundaryData, ForwardSolver,
    NewtonOptions,
};
use crate::geometry::{Domain, Family, GridFunction, RealField};
use crate::identities::{second_identity, third_identity, IdentityReport, TermGroup};
use crate::linearize::{default_epsilon, fd_linearize, Linearizer};
use crate::recovery::{
    end_to_end, trace_algebra_check, Calibration, RecoveryReport, TraceAlgebraReport,
};

use super::config::{
    CgoSection, ForwardSection, IdentitiesSection, LinearizeSection, RecoverSection, TwinName,
};
use super::output::Table;

/// Acceptance thresholds checked by the runner.
pub mod thresholds {
    pub const SCHERK_ORDER: f64 = 1.9;
    pub const SOLVE_SECONDS: f64 = 60.0;
    pub const ZERO_RESIDUAL: f64 = 1e-12;
    pub const AFFINE_ERROR: f64 = 1e-10;
    pub const FIRST_VARIATION: f64 = 1e-6;
    pub const DN_FROM_AREAS: f64 = 5e-3;
    pub const FIRST_LINEARIZATION: f64 = 1e-3;
    pub const SECOND_LINEARIZATION: f64 = 1e-3;
    pub const THIRD_LINEARIZATION: f64 = 5e-3;
    pub const SECOND_IDENTITY: f64 = 5e-3;
    pub const THIRD_IDENTITY: f64 = 1e-2;
    pub const IDENTITY_ORDER: f64 = 1.8;
    pub const CGO_RESIDUAL: f64 = 1e-3;
    pub const REMAINDER_L2_SLOPE: f64 = 0.5;
    pub const REMAINDER_L4_SLOPE: f64 = 0.25;
    pub const PLATEAU_DRIFT: f64 = 0.05;
    pub const VANISHING_RATIO: f64 = 0.05;
    pub const ZERO_TRUTH: f64 = 0.05;
    pub const NONZERO_TRUTH: f64 = 0.15;
}

/// One PASS/FAIL line of the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    fn new(id: u8, name: &'static str, pass: bool, detail: String) -> Self {
        Self {
            id,
            name,
            pass,
            detail,
        }
    }
}

/// What the runner needs from every stage report.
pub trait StageReport: Serialize {
    fn criteria(&self) -> Vec<Criterion>;
    fn tables(&self) -> Vec<Table>;
    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }
    /// Grid sizes used, for the manifest.
    fn grid(&self) -> Vec<usize>;
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64()))
}

fn orders(hs: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    std::iter::once(None)
        .chain(
            hs.windows(2)
                .zip(errors.windows(2))
                .map(|(h, e)| Some((e[0] / e[1]).ln() / (h[0] / h[1]).ln())),
        )
        .collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(";")
}

// Forward

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub nodes: usize,
    pub spacing: f64,
    pub sup_error: f64,
    pub order: Option<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstVariationRow {
    pub pair: usize,
    pub boundary: f64,
    pub finite_difference: f64,
    pub defect: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForwardReport {
    pub scherk: Vec<ConvergenceRow>,
    /// Newton residual and `sup |u|` for zero data, over the flat and the configured family.
    pub zero_residual: f64,
    pub zero_sup: f64,
    /// `sup |u - f|` for affine data in the flat metric.
    pub affine_error: f64,
    pub first_variation: Vec<FirstVariationRow>,
    /// Relative sup difference of `dn_from_areas` and `dn_map` away from the corners.
    pub dn_from_areas: f64,
    pub nodes: Vec<usize>,
    /// Wall time of the slowest Scherk solve; kept out of the artifacts.
    #[serde(skip)]
    pub slowest_solve: f64,
}

fn scherk(kappa: f64, x: f64, y: f64) -> f64 {
    ((kappa * x).cos() / (kappa * y).cos()).ln() / kappa
}

pub fn run_forward(cfg: &ForwardSection, seed: u64) -> Result<ForwardReport> {
    let flat = Family::Flat;
    let kappa = cfg.scherk_kappa;
    let mut scherk_rows = Vec::new();
    let mut slowest: f64 = 0.0;
    for &n in &cfg.scherk_resolutions {
        let d = Domain::square(-1.0, 1.0, n)?;
        let solver = ForwardSolver::new(&flat, &d, cfg.newton.clone())?;
        let data = BoundaryData::from_fn(d, |x, y| scherk(kappa, x, y));
        let (sol, seconds) = timed(|| solver.solve(&data))?;
        slowest = slowest.max(seconds);
        let exact = GridFunction::from_fn(d, |x, y| scherk(kappa, x, y));
        scherk_rows.push(ConvergenceRow {
            nodes: n,
            spacing: d.dx(),
            sup_error: (&sol.u - &exact).sup_norm(),
            order: None,
            iterations: sol.iterations,
        });
    }
    let hs: Vec<f64> = scherk_rows.iter().map(|r| r.spacing).collect();
    let errors: Vec<f64> = scherk_rows.iter().map(|r| r.sup_error).collect();
    for (row, order) in scherk_rows.iter_mut().zip(orders(&hs, &errors)) {
        row.order = order;
    }

    let family = cfg.family.build();
    let d = Domain::square(0.0, 1.0, cfg.trivial_nodes)?;
    let (mut zero_residual, mut zero_sup): (f64, f64) = (0.0, 0.0);
    for fam in [&flat, &family] {
        let solver = ForwardSolver::new(fam, &d, cfg.newton.clone())?;
        let sol = solver.solve(&BoundaryData::zeros(d))?;
        zero_residual = zero_residual.max(sol.residual);
        zero_sup = zero_sup.max(sol.u.sup_norm());
    }
    let affine = |x: f64, y: f64| 0.1 * x - 0.05 * y + 0.02;
    let solver = ForwardSolver::new(&flat, &d, cfg.newton.clone())?;
    let sol = solver.solve(&BoundaryData::from_fn(d, affine))?;
    let affine_error = (&sol.u - &GridFunction::from_fn(d, affine)).sup_norm();

    let d = Domain::square(0.0, 1.0, cfg.first_variation_nodes)?;
    let solver = ForwardSolver::new(&family, &d, cfg.newton.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first_variation = Vec::new();
    for pair in 0..cfg.first_variation_pairs {
        let (a, b, c) = (
            rng.random_range(-0.04..0.04),
            rng.random_range(-0.04..0.04),
            rng.random_range(-0.04..0.04),
        );
        let (p, q) = (rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0));
        let f = BoundaryData::from_fn(d, |x, y| a * x + b * y + c * x * y);
        let w: RealField = GridFunction::from_fn(d, |x, y| (p * x).cos() + q * y * y);
        let fv = area_first_variation(&f, &w, &solver)?;
        first_variation.push(FirstVariationRow {
            pair,
            boundary: fv.boundary,
            finite_difference: fv.finite_difference,
            defect: (fv.boundary - fv.finite_difference).abs(),
            bound: thresholds::FIRST_VARIATION * (1.0 + fv.boundary.abs()),
        });
    }

    let d = Domain::square(0.0, 1.0, cfg.dn_nodes)?;
    let solver = ForwardSolver::new(&family, &d, cfg.newton.clone())?;
    let f = BoundaryData::from_fn(d, |x, y| 0.04 * (x - 0.5 * y) + 0.01 * (2.0 * x * y).sin());
    let dn = dn_map(&f, &solver)?;
    let rec = dn_from_areas(&f, &solver, AreaDerivative::Discrete)?;
    let dn_rel =
        rec.zip_map(&dn, |a, b| a - b).sup_norm_without_corners() / dn.sup_norm_without_corners();

    let mut nodes: Vec<usize> = cfg.scherk_resolutions.clone();
    nodes.extend([cfg.trivial_nodes, cfg.first_variation_nodes, cfg.dn_nodes]);
    Ok(ForwardReport {
        scherk: scherk_rows,
        zero_residual,
        zero_sup,
        affine_error,
        first_variation,
        dn_from_areas: dn_rel,
        nodes,
        slowest_solve: slowest,
    })
}

impl ForwardReport {
    pub fn min_order(&self) -> f64 {
        self.scherk
            .iter()
            .filter_map(|r| r.order)
            .fold(f64::INFINITY, f64::min)
    }
}

impl StageReport for ForwardReport {
    fn criteria(&self) -> Vec<Criterion> {
        let order = self.min_order();
        let fv_ok = self.first_variation.iter().all(|r| r.defect <= r.bound);
        let worst_fv = self
            .first_variation
            .iter()
            .map(|r| r.defect / r.bound)
            .fold(0.0, f64::max);
        vec![
            Criterion::new(
                1,
                "forward_convergence",
                order >= thresholds::SCHERK_ORDER && self.slowest_solve < thresholds::SOLVE_SECONDS,
                format!("min order {order:.3}"),
            ),
            Criterion::new(
                2,
                "zero_and_affine",
                self.zero_residual < thresholds::ZERO_RESIDUAL
                    && self.zero_sup < thresholds::ZERO_RESIDUAL
                    && self.affine_error < thresholds::AFFINE_ERROR,
                format!(
                    "zero residual {:.3e}, zero sup {:.3e}, affine error {:.3e}",
                    self.zero_residual, self.zero_sup, self.affine_error
                ),
            ),
            Criterion::new(
                3,
                "area_dn_duality",
                fv_ok
                    && self.first_variation.len() >= 10
                    && self.dn_from_areas < thresholds::DN_FROM_AREAS,
                format!(
                    "{} pairs, worst defect/bound {worst_fv:.3}, dn relative {:.3e}",
                    self.first_variation.len(),
                    self.dn_from_areas
                ),
            ),
        ]
    }

    fn tables(&self) -> Vec<Table> {
        let mut convergence = Table::new(
            "forward_convergence.csv",
            &["nodes", "spacing", "sup_error", "order", "iterations"],
        );
        for r in &self.scherk {
            convergence.row([
                r.nodes.to_string(),
                format!("{:e}", r.spacing),
                format!("{:e}", r.sup_error),
                r.order.map_or(String::new(), |o| format!("{o:.6}")),
                r.iterations.to_string(),
            ]);
        }
        let mut fv = Table::new(
            "forward_first_variation.csv",
            &[
                "pair",
                "boundary",
                "finite_difference",
                "defect",
                "bound",
                "pass",
            ],
        );
        for r in &self.first_variation {
            fv.row([
                r.pair.to_string(),
                format!("{:e}", r.boundary),
                format!("{:e}", r.finite_difference),
                format!("{:e}", r.defect),
                format!("{:e}", r.bound),
                (r.defect <= r.bound).to_string(),
            ]);
        }
        vec![convergence, fv]
    }

    fn grid(&self) -> Vec<usize> {
        self.nodes.clone()
    }
}

// Linearize

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearizationRow {
    pub family: String,
    pub indices: Vec<usize>,
    pub pde_norm: f64,
    pub fd_norm: f64,
    /// `|fd - pde| / |pde|`, or `|fd| / prod |v_i|` when the PDE solution vanishes identically.
    pub error: f64,
    pub normalization: &'static str,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearizeReport {
    pub nodes: usize,
    pub rows: Vec<LinearizationRow>,
}

pub fn run_linearize(cfg: &LinearizeSection) -> Result<LinearizeReport> {
    let d = Domain::square(0.0, 1.0, cfg.nodes)?;
    let fields: Vec<_> = cfg.data.iter().map(|r| r.field(d)).collect();
    let data: Vec<BoundaryData> = fields.iter().cloned().map(BoundaryData::new).collect();
    let opts = NewtonOptions {
        tol: 1e-12,
        delta_admissible: 10.0,
        ..NewtonOptions::default()
    };
    let mut rows = Vec::new();
    for spec in &cfg.families {
        let family = spec.build();
        let lin = Linearizer::new(&family, &d)?;
        let all = lin.linearize_all(&fields, 3);
        let solver = ForwardSolver::new(&family, &d, opts.clone())?;
        let cases: [(Vec<usize>, &RealField, f64); 3] = [
            (vec![1], all.v(1), thresholds::FIRST_LINEARIZATION),
            (vec![0, 2], all.w2(0, 2), thresholds::SECOND_LINEARIZATION),
            (
                vec![0, 1, 2],
                all.w3(0, 1, 2),
                thresholds::THIRD_LINEARIZATION,
            ),
        ];
        for (indices, pde, tolerance) in cases {
            let fd = fd_linearize(&indices, &data, &solver, default_epsilon(indices.len()))?;
            let pde_norm = pde.l2_norm();
            let (error, normalization) = if pde_norm > 0.0 {
                ((&fd - pde).l2_norm() / pde_norm, "relative")
            } else {
                let product: f64 = indices.iter().map(|&i| all.v(i).l2_norm()).product();
                (fd.l2_norm() / product, "vanishing")
            };
            rows.push(LinearizationRow {
                family: spec.label().to_owned(),
                indices,
                pde_norm,
                fd_norm: fd.l2_norm(),
                error,
                normalization,
                tolerance,
            });
        }
    }
    Ok(LinearizeReport {
        nodes: cfg.nodes,
        rows,
    })
}

impl StageReport for LinearizeReport {
    fn criteria(&self) -> Vec<Criterion> {
        let worst = self
            .rows
            .iter()
            .map(|r| r.error / r.tolerance)
            .fold(0.0, f64::max);
        vec![Criterion::new(
            4,
            "linearization_cross_validation",
            self.rows.iter().all(|r| r.error <= r.tolerance),
            format!(
                "{} comparisons, worst error/tolerance {worst:.3}",
                self.rows.len()
            ),
        )]
    }

    fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "linearize.csv",
            &[
                "family",
                "indices",
                "pde_norm",
                "fd_norm",
                "error",
                "normalization",
                "tolerance",
                "pass",
            ],
        );
        for r in &self.rows {
            t.row([
                r.family.clone(),
                r.indices
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join("-"),
                format!("{:e}", r.pde_norm),
                format!("{:e}", r.fd_norm),
                format!("{:e}", r.error),
                r.normalization.to_owned(),
                format!("{:e}", r.tolerance),
                (r.error <= r.tolerance).to_string(),
            ]);
        }
        vec![t]
    }

    fn grid(&self) -> Vec<usize> {
        vec![self.nodes]
    }
}

// Identities

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub family: String,
    pub order: usize,
    pub nodes: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
    /// Convergence order of the residual against the previous grid.
    pub rate: Option<f64>,
    pub groups: [f64; 5],
}

impl IdentityRow {
    fn new(family: &str, report: &IdentityReport<f64>, nodes: usize) -> Self {
        let groups = [
            TermGroup::Leading,
            TermGroup::H,
            TermGroup::R,
            TermGroup::B,
            TermGroup::Slope,
        ]
        .map(|g| report.group(g));
        Self {
            family: family.to_owned(),
            order: report.order,
            nodes,
            lhs: report.lhs,
            rhs: report.rhs(),
            residual: report.residual,
            scale: report.scale(),
            relative: report.relative_residual(),
            rate: None,
            groups,
        }
    }
}

/// Identity residuals per family and grid, coarse to fine.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitiesReport {
    pub rows: Vec<IdentityRow>,
}

pub fn run_identities(cfg: &IdentitiesSection) -> Result<IdentitiesReport> {
    let mut rows = Vec::new();
    for spec in &cfg.families {
        let family = spec.build();
        let (mut second, mut third) = (Vec::new(), Vec::new());
        for &n in &cfg.resolutions {
            let d = Domain::square(0.0, 1.0, n)?;
            let fields: Vec<_> = cfg.data.iter().map(|r| r.field(d)).collect();
            let lin = Linearizer::new(&family, &d)?;
            let all = lin.linearize_all(&fields, 3);
            let label = spec.label();
            second.push(IdentityRow::new(
                label,
                &second_identity(&lin, &all, [0, 1], 2),
                n,
            ));
            third.push(IdentityRow::new(
                label,
                &third_identity(&lin, &all, [0, 1, 2], 3),
                n,
            ));
        }
        for series in [&mut second, &mut third] {
            let hs: Vec<f64> = series.iter().map(|r| 1.0 / (r.nodes - 1) as f64).collect();
            let residuals: Vec<f64> = series.iter().map(|r| r.residual.abs()).collect();
            for (row, rate) in series.iter_mut().zip(orders(&hs, &residuals)) {
                row.rate = rate;
            }
        }
        rows.extend(second);
        rows.extend(third);
    }
    Ok(IdentitiesReport { rows })
}

impl IdentitiesReport {
    /// Finest-grid rows, one per family and identity.
    pub fn finest(&self) -> Vec<&IdentityRow> {
        let finest = self.rows.iter().map(|r| r.nodes).max().unwrap_or(0);
        self.rows.iter().filter(|r| r.nodes == finest).collect()
    }

    /// Whether a finest-grid row meets its tolerance and rate; identically vanishing identities pass.
    pub fn row_passes(row: &IdentityRow) -> bool {
        let tol = if row.order == 2 {
            thresholds::SECOND_IDENTITY
        } else {
            thresholds::THIRD_IDENTITY
        };
        row.scale == 0.0
            || (row.relative < tol && row.rate.is_some_and(|r| r >= thresholds::IDENTITY_ORDER))
    }
}

impl StageReport for IdentitiesReport {
    fn criteria(&self) -> Vec<Criterion> {
        let finest = self.finest();
        let detail = finest
            .iter()
            .map(|r| {
                if r.scale == 0.0 {
                    format!("{} order-{} identically zero", r.family, r.order)
                } else {
                    format!(
                        "{} order-{} {:.2e} (rate {:.2})",
                        r.family,
                        r.order,
                        r.relative,
                        r.rate.unwrap_or(f64::NAN)
                    )
                }
            })
            .collect::<Vec<_>>()
            .join(", ");
        vec![Criterion::new(
            5,
            "integral_identities",
            !finest.is_empty() && finest.iter().all(|r| Self::row_passes(r)),
            detail,
        )]
    }

    fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "identities.csv",
            &[
                "family", "identity", "nodes", "lhs", "rhs", "residual", "scale", "relative",
                "rate", "leading", "h_terms", "r_terms", "b_terms", "slope",
            ],
        );
        for r in &self.rows {
            let mut cells = vec![
                r.family.clone(),
                if r.order == 2 { "second" } else { "third" }.to_owned(),
                r.nodes.to_string(),
                format!("{:e}", r.lhs),
                format!("{:e}", r.rhs),
                format!("{:e}", r.residual),
                format!("{:e}", r.scale),
                format!("{:e}", r.relative),
                r.rate.map_or(String::new(), |o| format!("{o:.6}")),
            ];
            cells.extend(r.groups.iter().map(|g| format!("{g:e}")));
            t.row(cells);
        }
        vec![t]
    }

    fn grid(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.rows.iter().map(|r| r.nodes).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

// CGO

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CgoReport {
    /// Largest `|r_h|` for `q = 0`, for both branches.
    pub zero_potential_remainder: f64,
    pub residual: ResidualReport,
    pub tilde_residual: ResidualReport,
    pub decay: Vec<SlopeRow>,
    pub calculus: Vec<SlopeRow>,
    pub second_order: Vec<SecondOrderPoint>,
    pub second_order_slope: Option<f64>,
    pub scaled_quartic: Vec<Complex64>,
    pub plateau_drift: f64,
    pub vanishing_ratio: f64,
    pub dropped: Vec<DroppedPoint>,
    pub nodes: Vec<usize>,
}

pub fn run_cgo(cfg: &CgoSection) -> Result<CgoReport> {
    let sweep = &cfg.sweep;
    let ctx = CgoContext::new(CgoPhase::quadratic(), cfg.residual_h, sweep.patch)?;
    let zero = RealField::zeros(*ctx.domain());
    let amplitude = CgoAmplitude::default();
    let zero_potential_remainder = [
        build_cgo(&ctx, &amplitude, &zero, sweep.terms)?,
        build_cgo_tilde(&ctx, &amplitude, &zero, sweep.terms)?,
    ]
    .iter()
    .map(|s| s.r.sup_norm())
    .fold(0.0, f64::max);
    let (residual, tilde_residual) = residual_at(
        sweep,
        cfg.residual_h,
        cfg.residual_terms,
        cfg.residual_nodes,
    )?;

    let outcome = run_sweep(sweep)?;
    let (second_order, mut dropped) = run_second_order_sweep(sweep)?;
    dropped.extend(outcome.dropped.iter().cloned());
    let hs: Vec<f64> = second_order.iter().map(|p| p.h).collect();
    let differences: Vec<f64> = second_order.iter().map(|p| p.difference()).collect();
    let mut nodes: Vec<usize> = outcome.points.iter().map(|p| p.nodes).collect();
    nodes.extend(second_order.iter().map(|p| p.nodes));
    nodes.push(cfg.residual_nodes);
    Ok(CgoReport {
        zero_potential_remainder,
        residual,
        tilde_residual,
        decay: outcome.decay_table(sweep.asymptotic_h()),
        calculus: outcome.calculus_table(sweep.asymptotic_h()),
        second_order_slope: loglog_slope(&hs, &differences),
        second_order,
        scaled_quartic: outcome.scaled_quartic(),
        plateau_drift: outcome.plateau_drift(),
        vanishing_ratio: outcome.vanishing_ratio(),
        dropped,
        nodes,
    })
}

impl CgoReport {
    pub fn decay_row(&self, case: &str) -> Option<&SlopeRow> {
        self.decay.iter().find(|r| r.case == case)
    }
}

fn slope_table(name: &str, rows: &[&SlopeRow]) -> Table {
    let mut t = Table::new(
        name,
        &[
            "case",
            "deg",
            "l",
            "hs",
            "values",
            "slope",
            "floor",
            "pass",
            "fit_max_h",
        ],
    );
    for r in rows {
        t.row([
            r.case.clone(),
            r.degree.map_or(String::new(), |d| d.to_string()),
            r.derivative_order.map_or(String::new(), |l| l.to_string()),
            join(&r.hs),
            join(&r.values),
            r.slope.map_or(String::new(), |s| format!("{s:.6}")),
            format!("{}", r.floor),
            r.pass.to_string(),
            if r.fit_max_h.is_finite() {
                format!("{:e}", r.fit_max_h)
            } else {
                "all".to_owned()
            },
        ]);
    }
    t
}

impl StageReport for CgoReport {
    fn criteria(&self) -> Vec<Criterion> {
        let slope = |case: &str| {
            self.decay_row(case)
                .and_then(|r| r.slope)
                .unwrap_or(f64::NAN)
        };
        let (l2, l4) = (slope("remainder_l2"), slope("remainder_l4"));
        let residual = self
            .residual
            .relative_to_potential()
            .max(self.tilde_residual.relative_to_potential());
        let failed: Vec<&str> = self
            .calculus
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.case.as_str())
            .collect();
        let second = self.second_order_slope.unwrap_or(f64::NAN);
        vec![
            Criterion::new(
                6,
                "cgo_construction",
                self.zero_potential_remainder == 0.0
                    && residual < thresholds::CGO_RESIDUAL
                    && l2 >= thresholds::REMAINDER_L2_SLOPE
                    && l4 >= thresholds::REMAINDER_L4_SLOPE,
                format!(
                    "zero-potential remainder {:.1e}, residual {residual:.3e}, L2 slope {l2:.3}, L4 slope {l4:.3}",
                    self.zero_potential_remainder
                ),
            ),
            Criterion::new(
                7,
                "cgo_calculus",
                failed.is_empty() && !self.calculus.is_empty(),
                if failed.is_empty() {
                    format!("{} rows meet their floors", self.calculus.len())
                } else {
                    format!("below floor: {}", failed.join(", "))
                },
            ),
            Criterion::new(
                8,
                "stationary_phase",
                second > 0.0
                    && self.plateau_drift < thresholds::PLATEAU_DRIFT
                    && self.vanishing_ratio < thresholds::VANISHING_RATIO,
                format!(
                    "mixed-term slope {second:.3}, plateau drift {:.3e}, vanishing ratio {:.3e}",
                    self.plateau_drift, self.vanishing_ratio
                ),
            ),
        ]
    }

    fn tables(&self) -> Vec<Table> {
        let decay: Vec<&SlopeRow> = self.decay.iter().collect();
        let calculus: Vec<&SlopeRow> = self.calculus.iter().collect();
        let mut asymptotics = Table::new(
            "cgo_second_order.csv",
            &[
                "h",
                "nodes",
                "full_re",
                "full_im",
                "leading_re",
                "leading_im",
                "difference",
            ],
        );
        for p in &self.second_order {
            asymptotics.row([
                format!("{:e}", p.h),
                p.nodes.to_string(),
                format!("{:e}", p.full.re),
                format!("{:e}", p.full.im),
                format!("{:e}", p.leading.re),
                format!("{:e}", p.leading.im),
                format!("{:e}", p.difference()),
            ]);
        }
        vec![
            slope_table("cgo_decay.csv", &decay),
            slope_table("cgo_calculus.csv", &calculus),
            asymptotics,
        ]
    }

    fn warnings(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .dropped
            .iter()
            .map(|d| format!("cgo: h = {:e} dropped: {}", d.h, d.reason))
            .collect();
        out.extend(self.decay.iter().filter(|r| !r.pass).map(|r| {
            format!(
                "cgo: {} slope {:?} below floor {}",
                r.case, r.slope, r.floor
            )
        }));
        out
    }

    fn grid(&self) -> Vec<usize> {
        self.nodes.clone()
    }
}

// Recover

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoverReport {
    pub trace_algebra: TraceAlgebraReport,
    pub calibration: Option<Calibration>,
    pub twins: Vec<(TwinName, RecoveryReport)>,
    pub nodes: Vec<usize>,
}

pub fn run_recover(cfg: &RecoverSection, seed: u64) -> Result<RecoverReport> {
    let trace_algebra = trace_algebra_check(cfg.trace_samples, seed);
    let mut twins = Vec::new();
    let mut calibration = None;
    let mut nodes = Vec::new();
    if !cfg.twins.is_empty() {
        let reference = cfg.calibration_twin();
        let cal = Calibration::from_reference(&reference)?;
        for name in &cfg.twins {
            let twin = cfg.twin(*name);
            let report = end_to_end(&twin, &cal)?;
            for p in &report.probes {
                nodes.extend(
                    p.k.limits
                        .iter()
                        .flat_map(|l| l.values.iter().map(|v| v.nodes)),
                );
                nodes.extend(p.c.values.iter().map(|v| v.nodes));
            }
            twins.push((*name, report));
        }
        calibration = Some(cal);
    }
    nodes.sort_unstable();
    nodes.dedup();
    Ok(RecoverReport {
        trace_algebra,
        calibration,
        twins,
        nodes,
    })
}

impl RecoverReport {
    pub fn twin(&self, name: TwinName) -> Option<&RecoveryReport> {
        self.twins.iter().find(|(n, _)| *n == name).map(|(_, r)| r)
    }

    /// Largest `|K_hat_ij - K_ij| / max(|K_ij|, 0.05 scale)` over probes and components.
    pub fn k_componentwise(report: &RecoveryReport) -> f64 {
        report
            .probes
            .iter()
            .flat_map(|p| {
                let floor = thresholds::ZERO_TRUTH * p.truth.k_scale;
                (0..4).map(move |n| {
                    let (i, j) = (n / 2, n % 2);
                    let truth = p.truth.k.0[i][j];
                    (p.k.projected.0[i][j] - truth).abs() / truth.abs().max(floor)
                })
            })
            .fold(0.0, f64::max)
    }

    /// Zero-truth discrepancies of one twin: `(|K_hat| / k scale, |h2_hat| / h2 scale, |c_hat - 1|)`.
    pub fn zero_truth(report: &RecoveryReport) -> (f64, f64, f64) {
        report.probes.iter().fold((0.0, 0.0, 0.0), |acc, p| {
            (
                acc.0.max(p.k.projected.max_abs() / p.truth.k_scale),
                acc.1.max(p.h2.value.abs() / p.truth.h2_scale),
                acc.2.max((p.c.value - 1.0).abs()),
            )
        })
    }
}

impl StageReport for RecoverReport {
    fn criteria(&self) -> Vec<Criterion> {
        let mut out = Vec::new();
        if let Some(matched) = self.twin(TwinName::Matched) {
            let (k, h2, c) = Self::zero_truth(matched);
            let limit = thresholds::ZERO_TRUTH;
            out.push(Criterion::new(
                9,
                "recovery_zero_truth",
                k < limit && h2 < limit && c < limit,
                format!("|K|/scale {k:.3e}, |h2|/scale {h2:.3e}, |c - 1| {c:.3e}"),
            ));
        }
        if let (Some(trace_free), Some(conformal)) = (
            self.twin(TwinName::TraceFree),
            self.twin(TwinName::Conformal),
        ) {
            let k = Self::k_componentwise(trace_free);
            let center = conformal
                .probes
                .iter()
                .find(|p| p.probe == [0.5, 0.5])
                .unwrap_or(&conformal.probes[0]);
            let c = center.c_error / (center.truth.c - 1.0).abs().max(f64::EPSILON);
            out.push(Criterion::new(
                10,
                "recovery_nonzero_truth",
                k < thresholds::NONZERO_TRUTH && c < thresholds::NONZERO_TRUTH,
                format!(
                    "K component error {k:.3e}, c_hat {:.4} vs {:.4} (error {c:.3e} of c - 1)",
                    center.c.value, center.truth.c
                ),
            ));
        }
        let t = &self.trace_algebra;
        out.push(Criterion::new(
            11,
            "trace_algebra",
            t.passed(),
            format!(
                "{} samples, {} mismatches, identity defect {:.1e}",
                t.samples, t.mismatches, t.max_identity_defect
            ),
        ));
        out
    }

    fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "recovery.csv",
            &[
                "twin",
                "probe_x",
                "probe_y",
                "k11",
                "k12",
                "k21",
                "k22",
                "k11_truth",
                "k12_truth",
                "k22_truth",
                "k_error",
                "k_scale",
                "antisymmetric_defect",
                "h2",
                "h2_truth",
                "h2_error",
                "h2_scale",
                "c",
                "c_truth",
                "c_error",
            ],
        );
        for (name, report) in &self.twins {
            for p in &report.probes {
                let (k, truth) = (p.k.projected.0, p.truth.k.0);
                t.row(
                    [serde_json::to_value(name)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default()]
                    .into_iter()
                    .chain(
                        [
                            p.probe[0],
                            p.probe[1],
                            k[0][0],
                            k[0][1],
                            k[1][0],
                            k[1][1],
                            truth[0][0],
                            truth[0][1],
                            truth[1][1],
                            p.k_error,
                            p.truth.k_scale,
                            p.k.antisymmetric_defect,
                            p.h2.value,
                            p.truth.h2,
                            p.h2_error,
                            p.truth.h2_scale,
                            p.c.value,
                            p.truth.c,
                            p.c_error,
                        ]
                        .iter()
                        .map(|v| format!("{v:e}")),
                    ),
                );
            }
        }
        vec![t]
    }

    fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, report) in &self.twins {
            for p in &report.probes {
                let scale = p.truth.k_scale.max(p.truth.h2_scale).max(f64::MIN_POSITIVE);
                if p.k.projected.max_abs() > thresholds::ZERO_TRUTH * scale {
                    out.push(format!(
                        "recover: {name:?} at {:?}: conformal factor read with unmatched second-order data (|K_hat| = {:.3e})",
                        p.probe,
                        p.k.projected.max_abs()
                    ));
                }
                if p.k.antisymmetric_defect > thresholds::ZERO_TRUTH * scale {
                    out.push(format!(
                        "recover: {name:?} at {:?}: antisymmetric defect {:.3e}",
                        p.probe, p.k.antisymmetric_defect
                    ));
                }
            }
        }
        out
    }

    fn grid(&self) -> Vec<usize> {
        self.nodes.clone()
    }
}
