use num_complex::Complex64;

use super::amplitude::CgoAmplitude;
use super::diff::{partial_x, partial_y};
use super::phase::SolutionPhase;
use super::solution::CgoContext;
use crate::geometry::{ComplexField, Mat2, RealField};

/// `w` and `G` with `v = e^{Theta/h} w` and `grad v = e^{Theta/h} G`, `G = w grad Theta / h + grad w`.
struct Reduced {
    w: Vec<Complex64>,
    grad: [Vec<Complex64>; 2],
}

/// Reduced fields of `e^{Theta/h}(a + r)`, using `conj(a)` for an antiholomorphic `Theta`; `r = None`
/// gives the leading term.
fn reduced(
    ctx: &CgoContext,
    theta: &SolutionPhase,
    amplitude: &CgoAmplitude,
    r: Option<&ComplexField>,
) -> Reduced {
    let domain = *ctx.domain();
    let h = ctx.h;
    let zero = ComplexField::zeros(domain);
    let r = r.unwrap_or(&zero);
    let (rx, ry) = (partial_x(r), partial_y(r));
    let i = Complex64::i();
    let mut w = Vec::with_capacity(domain.len());
    let mut gx = Vec::with_capacity(domain.len());
    let mut gy = Vec::with_capacity(domain.len());
    for n in 0..domain.len() {
        let (x, y) = domain.coords(n);
        let z = Complex64::new(x, y);
        let (a, grad_a) = if theta.antiholomorphic {
            let d = amplitude.derivative(z).conj();
            (amplitude.value(z).conj(), [d, -i * d])
        } else {
            let d = amplitude.derivative(z);
            (amplitude.value(z), [d, i * d])
        };
        let value = a + r.values()[n];
        let dt = theta.gradient(z);
        w.push(value);
        gx.push(value * dt[0] / h + grad_a[0] + rx.values()[n]);
        gy.push(value * dt[1] / h + grad_a[1] + ry.values()[n]);
    }
    Reduced { w, grad: [gx, gy] }
}

fn bilinear(m: &Mat2, a: [Complex64; 2], b: [Complex64; 2]) -> Complex64 {
    a[0] * (b[0] * m[(0, 0)] + b[1] * m[(0, 1)]) + a[1] * (b[0] * m[(1, 0)] + b[1] * m[(1, 1)])
}

fn integrate_with_phase(ctx: &CgoContext, integrand: impl Fn(usize) -> Complex64) -> Complex64 {
    let weights = ctx.domain().node_weights();
    ctx.wave()
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(n, (w, dw))| integrand(n) * w * w * *dw)
        .sum()
}

/// `int v1 K(grad v2, grad v3) + v2 K(grad v1, grad v3) + v3 K(grad v1, grad v2)` for
/// `K = weight * tensor`, `v1 = v2 = e^{Phi/h}(a + r)` and `v3 = e^{-2 conj(Phi)/h}(conj(a) + r3)`.
/// `ctx` carries `Phi`; passing `None` for the remainders gives the leading-term integral.
pub fn second_order_integral(
    ctx: &CgoContext,
    amplitude: &CgoAmplitude,
    r: Option<&ComplexField>,
    r3: Option<&ComplexField>,
    weight: &RealField,
    tensor: &Mat2,
) -> Complex64 {
    let [p1, _, p3] = SolutionPhase::second_order_triple(&ctx.phase);
    let v1 = reduced(ctx, &p1, amplitude, r);
    let v3 = reduced(ctx, &p3, amplitude, r3);
    let g = |v: &Reduced, n: usize| [v.grad[0][n], v.grad[1][n]];
    integrate_with_phase(ctx, |n| {
        let (g1, g3) = (g(&v1, n), g(&v3, n));
        let k13 = bilinear(tensor, g1, g3);
        (v1.w[n] * k13 * 2.0 + v3.w[n] * bilinear(tensor, g1, g1)) * weight.values()[n]
    })
}

/// `int Q [g(grad v1, grad v2) g(grad v3, grad v4) + g(grad v1, grad v3) g(grad v2, grad v4)
///   + g(grad v2, grad v3) g(grad v1, grad v4)]` in the Euclidean metric for
/// `v1 = v3 = e^{Phi/h}(a + r)` and `v2 = v4 = e^{-conj(Phi)/h}(conj(a) + r~)`.
pub fn quartic_gradient_integral(
    ctx: &CgoContext,
    amplitude: &CgoAmplitude,
    r: Option<&ComplexField>,
    r_tilde: Option<&ComplexField>,
    weight: &RealField,
) -> Complex64 {
    let [p1, p2, _, _] = SolutionPhase::third_order_quadruple(&ctx.phase);
    let v1 = reduced(ctx, &p1, amplitude, r);
    let v2 = reduced(ctx, &p2, amplitude, r_tilde);
    let dot = |a: &Reduced, b: &Reduced, n: usize| {
        a.grad[0][n] * b.grad[0][n] + a.grad[1][n] * b.grad[1][n]
    };
    integrate_with_phase(ctx, |n| {
        let cross = dot(&v1, &v2, n);
        (cross * cross * 2.0 + dot(&v1, &v1, n) * dot(&v2, &v2, n)) * weight.values()[n]
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::cgo::{CgoPhase, Patch};

    #[test]
    fn leading_quartic_integral_matches_stationary_phase() {
        // The flat sum is 8 |z|^4 / h^4 e^{4 i psi/h}, so h * integral -> -pi Q(0); a flat-topped Q
        // removes the low-order corrections.
        let h = 1.0 / 128.0;
        let ctx = CgoContext::new(CgoPhase::quadratic(), h, Patch::default()).unwrap();
        let weight = RealField::from_fn(*ctx.domain(), |x, y| {
            (-((x * x + y * y) / 0.0484).powi(3)).exp()
        });
        let value = quartic_gradient_integral(&ctx, &CgoAmplitude::default(), None, None, &weight);
        let expected = -PI / h;
        assert!((value - expected).norm() < 0.02 * expected.abs(), "{value}");
    }
}
