use rayon::prelude::*;

use crate::error::Result;
use crate::forward::{dn_map, BoundaryData, DNSample, ForwardSolver};
use crate::geometry::{GridFunction, RealField, Side};

/// Default `epsilon` per order for the finite-difference cross-check.
pub fn default_epsilon(order: usize) -> f64 {
    match order {
        1 | 2 => 1e-2,
        _ => 3e-2,
    }
}

/// Central mixed difference of `eval(sum_i eps sigma_i f_{indices_i})` over all sign patterns `sigma`.
fn mixed_difference(
    indices: &[usize],
    fs: &[BoundaryData],
    eps: f64,
    eval: &(dyn Fn(&BoundaryData) -> Result<Vec<f64>> + Sync),
) -> Result<Vec<f64>> {
    let order = indices.len();
    let patterns: Vec<u32> = (0..1u32 << order).collect();
    let terms: Vec<(f64, Vec<f64>)> = patterns
        .par_iter()
        .map(|&bits| {
            let mut data = BoundaryData::zeros(*fs[0].domain());
            let mut sign = 1.0;
            for (slot, &idx) in indices.iter().enumerate() {
                let s = if bits >> slot & 1 == 1 { -1.0 } else { 1.0 };
                sign *= s;
                data = data.combine(&fs[idx], 1.0, s * eps);
            }
            eval(&data).map(|v| (sign, v))
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / ((1u32 << order) as f64 * eps.powi(order as i32));
    let mut out = vec![0.0; terms[0].1.len()];
    for (sign, v) in &terms {
        for (o, x) in out.iter_mut().zip(v) {
            *o += sign * x * scale;
        }
    }
    Ok(out)
}

/// Richardson combination `(4 D(eps/2) - D(eps)) / 3` of the mixed difference.
fn richardson(
    indices: &[usize],
    fs: &[BoundaryData],
    eps: f64,
    eval: &(dyn Fn(&BoundaryData) -> Result<Vec<f64>> + Sync),
) -> Result<Vec<f64>> {
    let coarse = mixed_difference(indices, fs, eps, eval)?;
    let fine = mixed_difference(indices, fs, 0.5 * eps, eval)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

/// `partial^n u / partial eps_{indices}` at `eps = 0` from re-solves of the nonlinear problem.
pub fn fd_linearize(
    indices: &[usize],
    fs: &[BoundaryData],
    solver: &ForwardSolver<'_>,
    eps: f64,
) -> Result<RealField> {
    let values = richardson(indices, fs, eps, &|f| Ok(solver.solve(f)?.u.into_values()))?;
    GridFunction::from_vec(*solver.domain(), values)
}

/// `partial^n Lambda / partial eps_{indices}` at `eps = 0` from finite differences of the DN map.
pub fn fd_dn_derivative(
    indices: &[usize],
    fs: &[BoundaryData],
    solver: &ForwardSolver<'_>,
    eps: f64,
) -> Result<DNSample> {
    let domain = *solver.domain();
    let flat = richardson(indices, fs, eps, &|f| Ok(dn_map(f, solver)?.sides.concat()))?;
    let mut offset = 0;
    let sides = Side::ALL.map(|side| {
        let len = domain.side_nodes(side).len();
        let part = flat[offset..offset + len].to_vec();
        offset += len;
        part
    });
    Ok(DNSample { domain, sides })
}
