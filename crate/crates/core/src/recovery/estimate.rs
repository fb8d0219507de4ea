use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{two_term_fit, TwoTermFit, MAX_CONDITION};
use crate::geometry::Mat2;

use super::twin::{SweepValue, Tensor, Truth, TwinExperiment};

/// `h -> 0` limit of the second-order identity for one phase orientation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationLimit {
    pub theta: f64,
    pub values: Vec<SweepValue>,
    /// Fitted constant term; its stationary-phase value is `-(pi/4) e^{i theta} (K11 - K22 + 2i K12)`.
    pub alpha: Complex64,
    /// Fitted `h` coefficient.
    pub beta: Complex64,
    pub condition: f64,
    /// Largest misfit of the two-term model relative to the largest value.
    pub misfit: f64,
}

fn fit_series(values: &[SweepValue], p: f64) -> Result<(TwoTermFit, f64)> {
    let hs: Vec<f64> = values.iter().map(|v| v.h).collect();
    let ys: Vec<Complex64> = values.iter().map(|v| v.value).collect();
    let fit = two_term_fit(&hs, &ys, p)?;
    let scale = ys.iter().map(|y| y.norm()).fold(0.0, f64::max);
    let misfit = hs
        .iter()
        .zip(&ys)
        .map(|(h, y)| (y - (fit.alpha * h.powf(p) + fit.beta * h.powf(p + 1.0))).norm())
        .fold(0.0, f64::max);
    Ok((fit, if scale > 0.0 { misfit / scale } else { 0.0 }))
}

impl OrientationLimit {
    pub fn new(theta: f64, values: Vec<SweepValue>) -> Result<Self> {
        let (fit, misfit) = fit_series(&values, 0.0)?;
        Ok(Self {
            theta,
            values,
            alpha: fit.alpha,
            beta: fit.beta,
            condition: fit.condition,
            misfit,
        })
    }

    /// `Tr(K S) / 2 + i Tr(K A) / 2 = K11 - K22 + i (K12 + K21)` implied by the limit.
    pub fn trace_pairing(&self) -> Complex64 {
        -self.alpha * Complex64::from_polar(4.0 / PI, -self.theta)
    }
}

/// Estimate of `K = k1_A - c k1_B` at one probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KEstimate {
    /// Minimum-norm solution of the stationary-phase rows alone.
    pub raw: Tensor,
    /// Symmetric estimate with the trace closed by minimality, `Tr(g K) = 0`.
    pub projected: Tensor,
    /// Antisymmetric part of the unconstrained least-squares solution with the minimality row.
    pub antisymmetric_defect: f64,
    pub condition: f64,
    pub limits: Vec<OrientationLimit>,
}

/// Recovers `K(z0)` from the second-order limits of every orientation.
///
/// Unknowns are `(K11, K12, K21, K22)`. Each orientation contributes the rows `K11 - K22` and `K12 + K21`;
/// the symmetry row and the minimality row `Tr(g K) = 0` close the system.
pub fn recover_k(limits: Vec<OrientationLimit>, metric: &Mat2) -> Result<KEstimate> {
    let mut rows: Vec<([f64; 4], f64)> = Vec::new();
    for limit in &limits {
        let m = limit.trace_pairing();
        rows.push(([1.0, 0.0, 0.0, -1.0], m.re));
        rows.push(([0.0, 1.0, 1.0, 0.0], m.im));
    }
    let solve = |rows: &[([f64; 4], f64)], strict: bool| -> Result<(DVector<f64>, f64)> {
        let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = smax / smin;
        if strict && !(condition <= MAX_CONDITION) {
            return Err(Error::FitIllConditioned { condition });
        }
        let x = svd
            .solve(&b, 1e-12 * smax)
            .map_err(|_| Error::FitIllConditioned { condition })?;
        Ok((x, condition))
    };
    let tensor = |x: &DVector<f64>| Tensor([[x[0], x[1]], [x[2], x[3]]]);
    let (raw, _) = solve(&rows, false)?;
    rows.push((
        [
            metric[(0, 0)],
            metric[(1, 0)],
            metric[(0, 1)],
            metric[(1, 1)],
        ],
        0.0,
    ));
    let unconstrained = solve(&rows, false)?.0;
    rows.push(([0.0, 1.0, -1.0, 0.0], 0.0));
    let (full, condition) = solve(&rows, true)?;
    Ok(KEstimate {
        raw: tensor(&raw),
        projected: tensor(&full),
        antisymmetric_defect: 0.5 * (unconstrained[1] - unconstrained[2]).abs(),
        condition,
        limits,
    })
}

/// Estimate of `h2_A - c h2_B` at one probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H2Estimate {
    pub value: f64,
    /// Imaginary part of the normalized coefficient, zero in exact arithmetic.
    pub imaginary: f64,
    pub condition: f64,
}

/// Recovers the `h2` discrepancy from the `h`-linear term of the second-order identity once the
/// constant produced by `k` has been removed: the remainder is `(pi h / 4) (h2_A - c h2_B) + O(h^2)`.
pub fn recover_h2(limits: &[OrientationLimit], k: &Tensor) -> Result<H2Estimate> {
    let m: Mat2 = (*k).into();
    let pairing = Complex64::new(m[(0, 0)] - m[(1, 1)], m[(0, 1)] + m[(1, 0)]);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut condition: f64 = 0.0;
    for limit in limits {
        let constant = -pairing * Complex64::from_polar(PI / 4.0, limit.theta);
        let values: Vec<SweepValue> = limit
            .values
            .iter()
            .map(|v| SweepValue {
                value: v.value - constant,
                ..*v
            })
            .collect();
        let (fit, _) = fit_series(&values, 1.0)?;
        condition = condition.max(fit.condition);
        sum += fit.alpha * (4.0 / PI);
    }
    let mean = sum / limits.len() as f64;
    Ok(H2Estimate {
        value: mean.re,
        imaginary: mean.im,
        condition,
    })
}

/// The undetermined constant `C` in `Delta Lambda_3 = C (1 - 1/c(z0)) / h + O(1)`, measured on a
/// reference twin with known conformal factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub reference: String,
    pub probe: [f64; 2],
    pub reference_q: f64,
    pub constant: Complex64,
    /// Stationary-phase value of the constant for the quadratic phase.
    pub predicted: f64,
}

impl Calibration {
    pub fn from_reference(reference: &TwinExperiment) -> Result<Self> {
        let probe = reference.probes[0];
        let truth = reference.truth(probe)?;
        let q = 1.0 - 1.0 / truth.c;
        if q.abs() < 1e-3 {
            return Err(Error::ConfigInvalid(
                "calibration twin needs a conformal factor away from one at its probe".into(),
            ));
        }
        let series = reference.third_order_sweep()?;
        let (fit, _) = fit_series(&series[0], -1.0)?;
        Ok(Self {
            reference: reference.name.clone(),
            probe,
            reference_q: q,
            constant: fit.alpha / q,
            predicted: PI,
        })
    }
}

/// Estimate of the conformal factor at one probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformalEstimate {
    pub values: Vec<SweepValue>,
    /// Fitted `h^-1` coefficient.
    pub alpha: Complex64,
    pub condition: f64,
    pub misfit: f64,
    /// `1 - 1/c` implied by the calibration.
    pub q: f64,
    pub value: f64,
}

/// Recovers `c(z0)` from the `h^-1` coefficient of the third-order identity.
pub fn recover_conformal_factor(
    values: Vec<SweepValue>,
    calibration: Option<&Calibration>,
) -> Result<ConformalEstimate> {
    let calibration = calibration.ok_or(Error::CalibrationMissing)?;
    let (fit, misfit) = fit_series(&values, -1.0)?;
    let q = (fit.alpha / calibration.constant).re;
    let value = 1.0 / (1.0 - q);
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::FitIllConditioned {
            condition: f64::INFINITY,
        });
    }
    Ok(ConformalEstimate {
        values,
        alpha: fit.alpha,
        condition: fit.condition,
        misfit,
        q,
        value,
    })
}

/// Everything recovered at one probe, with the white-box truth used for scoring.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub probe: [f64; 2],
    pub k: KEstimate,
    pub h2: H2Estimate,
    pub c: ConformalEstimate,
    pub truth: Truth,
    /// `max |K_hat_ij - K_ij|`.
    pub k_error: f64,
    pub h2_error: f64,
    pub c_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub experiment: String,
    pub mode: super::OracleMode,
    pub hs: Vec<f64>,
    pub third_order_hs: Vec<f64>,
    pub orientations: Vec<f64>,
    pub calibration: Calibration,
    pub probes: Vec<ProbeRecord>,
}

impl RecoveryReport {
    pub fn max_k_error(&self) -> f64 {
        self.probes.iter().map(|p| p.k_error).fold(0.0, f64::max)
    }

    pub fn max_h2_error(&self) -> f64 {
        self.probes.iter().map(|p| p.h2_error).fold(0.0, f64::max)
    }

    pub fn max_c_error(&self) -> f64 {
        self.probes.iter().map(|p| p.c_error).fold(0.0, f64::max)
    }
}

/// Second-order limits of every orientation at every probe.
pub fn orientation_limits(experiment: &TwinExperiment) -> Result<Vec<Vec<OrientationLimit>>> {
    let mut sweep = experiment.second_order_sweep()?;
    (0..experiment.probes.len())
        .map(|p| {
            experiment
                .orientations
                .iter()
                .enumerate()
                .map(|(o, &theta)| {
                    OrientationLimit::new(theta, sweep.remove(&(p, o)).unwrap_or_default())
                })
                .collect()
        })
        .collect()
}

/// Runs the `K`, `h2` and conformal-factor recoveries at every probe.
pub fn end_to_end(
    experiment: &TwinExperiment,
    calibration: &Calibration,
) -> Result<RecoveryReport> {
    let limits = orientation_limits(experiment)?;
    let third = experiment.third_order_sweep()?;
    let probes = experiment
        .probes
        .iter()
        .zip(limits)
        .zip(third)
        .map(|((&probe, limits), third)| {
            let [x, y] = probe;
            let metric = experiment.family_a.metric(x, y, 0.0);
            let k = recover_k(limits, &metric)?;
            let h2 = recover_h2(&k.limits, &k.projected)?;
            let c = recover_conformal_factor(third, Some(calibration))?;
            let truth = experiment.truth(probe)?;
            let truth_k: Mat2 = truth.k.into();
            let k_error = Tensor::from(Mat2::from(k.projected) - truth_k).max_abs();
            Ok(ProbeRecord {
                probe,
                h2_error: (h2.value - truth.h2).abs(),
                c_error: (c.value - truth.c).abs(),
                k_error,
                k,
                h2,
                c,
                truth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryReport {
        experiment: experiment.name.clone(),
        mode: experiment.mode,
        hs: experiment.hs.clone(),
        third_order_hs: experiment.third_order_hs.clone(),
        orientations: experiment.orientations.clone(),
        calibration: calibration.clone(),
        probes,
    })
}
