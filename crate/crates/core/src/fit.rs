//! Least-squares fits used by the asymptotic checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest condition number accepted by the fits.
pub const MAX_CONDITION: f64 = 1e6;

/// Least-squares slope of `log |y|` against `log x`.
///
/// Returns `None` with fewer than two usable points; zero values give `+inf` when every value is zero.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let points: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && y.abs() > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if points.is_empty() && ys.iter().all(|y| *y == 0.0) && ys.len() >= 2 {
        return Some(f64::INFINITY);
    }
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx).powi(2))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Coefficients of `value(h) = alpha h^p + beta h^(p+1)` fitted by least squares.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoTermFit {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub condition: f64,
}

/// Fits `value(h) = alpha h^p + beta h^(p+1)`; with a single point only `alpha` is fitted.
pub fn two_term_fit(hs: &[f64], values: &[Complex64], p: f64) -> Result<TwoTermFit> {
    let cols = if hs.len() >= 2 { 2 } else { 1 };
    if hs.is_empty() || hs.len() != values.len() {
        return Err(Error::FitIllConditioned {
            condition: f64::INFINITY,
        });
    }
    // Columns are rescaled to unit norm so the condition number measures the design, not the units.
    let raw = DMatrix::from_fn(hs.len(), cols, |i, j| hs[i].powf(p + j as f64));
    let norms: Vec<f64> = (0..cols).map(|j| raw.column(j).norm()).collect();
    let design = DMatrix::from_fn(hs.len(), cols, |i, j| raw[(i, j)] / norms[j]);
    let svd = design.clone().svd(true, true);
    let (smax, smin) = svd
        .singular_values
        .iter()
        .fold((0.0f64, f64::INFINITY), |(a, b), s| (a.max(*s), b.min(*s)));
    let condition = smax / smin;
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::FitIllConditioned { condition });
    }
    let solve = |rhs: DVector<f64>| -> Result<DVector<f64>> {
        svd.solve(&rhs, 0.0)
            .map_err(|_| Error::FitIllConditioned { condition })
    };
    let re = solve(DVector::from_iterator(
        hs.len(),
        values.iter().map(|v| v.re),
    ))?;
    let im = solve(DVector::from_iterator(
        hs.len(),
        values.iter().map(|v| v.im),
    ))?;
    let coeff = |j: usize| {
        if j < cols {
            Complex64::new(re[j], im[j]) / norms[j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    Ok(TwoTermFit {
        alpha: coeff(0),
        beta: coeff(1),
        condition,
    })
}
