use super::*;
use crate::forward::{BoundaryData, ForwardSolver, NewtonOptions};
use crate::geometry::{
    eval_coefficients, BoundaryField, Domain, Family, GridFunction, Mat2, MetricFamily, Profile,
    RealField, Tabulated,
};

fn unit(n: usize) -> Domain {
    Domain::square(0.0, 1.0, n).unwrap()
}

/// A family with every coefficient `k1, k2, h1, h2, h3` nonzero up to the boundary.
fn curved() -> Family {
    Family::Layered {
        base: Box::new(Family::trace_free(
            Profile::Gaussian {
                center: [0.4, 0.6],
                width: 0.5,
                amplitude: 0.6,
            },
            Profile::Gaussian {
                center: [0.7, 0.3],
                width: 0.4,
                amplitude: -0.4,
            },
            true,
        )),
        quadratic: Profile::Gaussian {
            center: [0.5, 0.5],
            width: 0.4,
            amplitude: 0.5,
        },
        cubic: Profile::Gaussian {
            center: [0.3, 0.6],
            width: 0.3,
            amplitude: 0.7,
        },
    }
}

fn data(d: Domain) -> Vec<BoundaryData> {
    vec![
        BoundaryData::from_fn(d, |x, y| 0.5 * (x - y)),
        BoundaryData::from_fn(d, |x, y| 0.2 * (2.0 * x + y).sin()),
        BoundaryData::from_fn(d, |x, y| 0.5 * x * y + 0.25 * x * x),
    ]
}

fn fields(fs: &[BoundaryData]) -> Vec<BoundaryField<f64>> {
    fs.iter().map(|f| f.field().clone()).collect()
}

fn rel_l2(a: &RealField, b: &RealField) -> f64 {
    (a - b).l2_norm() / b.l2_norm()
}

fn fd_solver<'a>(fam: &'a dyn MetricFamily, d: &Domain) -> ForwardSolver<'a> {
    ForwardSolver::new(
        fam,
        d,
        NewtonOptions {
            tol: 1e-12,
            ..NewtonOptions::default()
        },
    )
    .unwrap()
}

#[test]
fn harmonic_data_is_reproduced_in_flat_space() {
    let d = unit(33);
    let lin = Linearizer::new(&Family::Flat, &d).unwrap();
    let sys = lin.first_system(&BoundaryField::from_fn(d, |x, y| x * x - y * y), 0);
    let exact = GridFunction::from_fn(d, |x, y| x * x - y * y);
    assert!((&sys.solution - &exact).sup_norm() < 1e-12);
    assert!(sys.residual < 1e-10);
}

#[test]
fn zero_data_gives_zero_linearizations() {
    let d = unit(17);
    let lin = Linearizer::new(&curved(), &d).unwrap();
    let all = lin.linearize_all::<f64>(&[BoundaryField::zeros(d), BoundaryField::zeros(d)], 3);
    assert_eq!(all.v(0).sup_norm(), 0.0);
    assert_eq!(all.w3(0, 1, 1).sup_norm(), 0.0);
    assert_eq!(lin.dn_derivative(&all, &[0]).sup_norm(), 0.0);
}

#[test]
fn resonant_potential_is_rejected() {
    let fam = Family::gamma(Profile::constant(-std::f64::consts::PI.powi(2)));
    let err = Linearizer::new(&fam, &unit(33)).unwrap_err();
    assert!(matches!(err, crate::Error::EigenvalueObstruction { .. }));
}

#[test]
fn pj_vanishes_without_k1_and_is_minus_laplacian_for_identity_k1() {
    let d = unit(33);
    let lin = Linearizer::new(&Family::gamma(Profile::constant(0.3)), &d).unwrap();
    let one = GridFunction::from_fn(d, |_, _| 1.0);
    let w = GridFunction::from_fn(d, |x, y| x * x + y * y);
    assert_eq!(lin.apply_pj(&one, &w).sup_norm(), 0.0);

    let mut stab =
        crate::forward::StabilityOperator::new(eval_coefficients(&Family::Flat, &d).unwrap())
            .unwrap();
    stab.coeffs.k1 = GridFunction::from_fn(d, |_, _| Mat2::identity());
    let lin = Linearizer::from_stability(stab);
    let p = lin.apply_pj(&one, &w);
    for n in d.interior_nodes() {
        assert!((p.values()[n] + 4.0).abs() < 1e-9, "{}", p.values()[n]);
    }
}

/// Independent assembly of `int (d v k1 grad w) . grad phi_i dx` over both diagonal triangulations at half
/// weight, with P1 gradients from vertex coordinates and a dense barycentric quadrature of the P1 coefficient.
fn pj_oracle(lin: &Linearizer, v: &RealField, w: &RealField, node: usize) -> f64 {
    let d = *lin.domain();
    let c = lin.coeffs();
    let (i0, j0) = d.ij(node);
    let coef = |n: usize| c.k1.values()[n] * (c.d.values()[n] * v.values()[n]);
    let p1_grad = |pts: [(f64, f64); 3], vals: [f64; 3]| {
        let m = Mat2::new(
            pts[1].0 - pts[0].0,
            pts[1].1 - pts[0].1,
            pts[2].0 - pts[0].0,
            pts[2].1 - pts[0].1,
        );
        let rhs = nalgebra::Vector2::new(vals[1] - vals[0], vals[2] - vals[0]);
        m.try_inverse().unwrap() * rhs
    };
    let mut acc = 0.0;
    for (ci, cj) in [(i0 - 1, j0 - 1), (i0, j0 - 1), (i0 - 1, j0), (i0, j0)] {
        let corners = [
            d.index(ci, cj),
            d.index(ci + 1, cj),
            d.index(ci + 1, cj + 1),
            d.index(ci, cj + 1),
        ];
        let tris = [[0, 1, 2], [0, 2, 3], [0, 1, 3], [1, 2, 3]];
        for t in tris {
            let nodes = t.map(|k| corners[k]);
            if !nodes.contains(&node) {
                continue;
            }
            let pts = nodes.map(|n| d.coords(n));
            let gw = p1_grad(pts, nodes.map(|n| w.values()[n]));
            let gphi = p1_grad(pts, nodes.map(|n| if n == node { 1.0 } else { 0.0 }));
            let area = 0.5 * d.dx() * d.dy();
            let m = 8;
            let mut integral = Mat2::zeros();
            let mut count = 0.0;
            for a in 0..m {
                for b in 0..m - a {
                    let (l1, l2) = (
                        (a as f64 + 1.0 / 3.0) / m as f64,
                        (b as f64 + 1.0 / 3.0) / m as f64,
                    );
                    let l0 = 1.0 - l1 - l2;
                    integral += coef(nodes[0]) * l0 + coef(nodes[1]) * l1 + coef(nodes[2]) * l2;
                    count += 1.0;
                    if a + b + 1 < m {
                        let (l1, l2) = (
                            (a as f64 + 2.0 / 3.0) / m as f64,
                            (b as f64 + 2.0 / 3.0) / m as f64,
                        );
                        let l0 = 1.0 - l1 - l2;
                        integral += coef(nodes[0]) * l0 + coef(nodes[1]) * l1 + coef(nodes[2]) * l2;
                        count += 1.0;
                    }
                }
            }
            acc += 0.5 * area * gphi.dot(&(integral / count * gw));
        }
    }
    acc / (lin.stability.mesh.mass[node] * c.d.values()[node])
}

#[test]
fn pj_matches_dense_quadrature_weak_form() {
    let d = unit(257);
    let lin = Linearizer::new(&curved(), &d).unwrap();
    let v = GridFunction::from_fn(d, |x, y| (1.3 * x - y).cos() + x * y);
    let w = GridFunction::from_fn(d, |x, y| (2.0 * x + 0.5 * y).sin() * y);
    let p = lin.apply_pj(&v, &w);
    for (i, j) in [(1, 1), (17, 200), (128, 128), (255, 3), (90, 255 - 1)] {
        let n = d.index(i, j);
        let oracle = pj_oracle(&lin, &v, &w, n);
        assert!(
            (p.values()[n] - oracle).abs() < 1e-8 * (1.0 + oracle.abs()),
            "{} vs {oracle}",
            p.values()[n]
        );
    }
}

#[test]
fn flat_space_has_no_higher_linearizations() {
    let d = unit(17);
    let lin = Linearizer::new(&Family::Flat, &d).unwrap();
    let all = lin.linearize_all(&fields(&data(d)), 3);
    // The flat area is even in u, so only the third order survives; it comes from the slope term.
    assert!(all.second.values().all(|s| s.solution.sup_norm() == 0.0));
    assert!(all.max_residual() < 1e-10);
}

#[test]
fn second_and_third_linearizations_are_symmetric() {
    let d = unit(33);
    let lin = Linearizer::new(&curved(), &d).unwrap();
    let all = lin.linearize_all(&fields(&data(d)), 2);
    let (v0, v1, v2) = (all.v(0), all.v(1), all.v(2));
    let a = lin.solve_second(v0, v1).solution;
    let b = lin.solve_second(v1, v0).solution;
    assert!((&a - &b).sup_norm() <= 1e-10 * a.sup_norm());
    let w = |j, k| all.w2(j, k);
    let reference = lin
        .solve_third([v0, v1, v2], [w(1, 2), w(0, 2), w(0, 1)])
        .solution;
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let vs = [v0, v1, v2];
    for p in perms {
        let other = lin
            .solve_third(
                p.map(|i| vs[i]),
                [w(p[1], p[2]), w(p[0], p[2]), w(p[0], p[1])],
            )
            .solution;
        assert!(
            (&other - &reference).sup_norm() <= 1e-10 * reference.sup_norm(),
            "{p:?}"
        );
    }
}

#[test]
fn linearizations_match_finite_differences_of_the_solver() {
    let d = unit(33);
    let fam = curved();
    let fs = data(d);
    let lin = Linearizer::new(&fam, &d).unwrap();
    let all = lin.linearize_all(&fields(&fs), 3);
    let solver = fd_solver(&fam, &d);
    let v = fd_linearize(&[1], &fs, &solver, default_epsilon(1)).unwrap();
    assert!(rel_l2(&v, all.v(1)) < 1e-6);
    let w = fd_linearize(&[0, 2], &fs, &solver, default_epsilon(2)).unwrap();
    assert!(
        rel_l2(&w, all.w2(0, 2)) < 1e-3,
        "{}",
        rel_l2(&w, all.w2(0, 2))
    );
    let w3 = fd_linearize(&[0, 1, 2], &fs, &solver, default_epsilon(3)).unwrap();
    assert!(
        rel_l2(&w3, all.w3(0, 1, 2)) < 5e-3,
        "{}",
        rel_l2(&w3, all.w3(0, 1, 2))
    );
}

#[test]
fn dn_derivatives_match_finite_differences_of_the_dn_map() {
    let d = unit(33);
    let fam = curved();
    let fs = data(d);
    let lin = Linearizer::new(&fam, &d).unwrap();
    let all = lin.linearize_all(&fields(&fs), 3);
    let solver = fd_solver(&fam, &d);
    for idx in [vec![2], vec![0, 1], vec![1, 1, 2]] {
        let exact = lin.dn_derivative(&all, &idx);
        let fd = fd_dn_derivative(&idx, &fs, &solver, default_epsilon(idx.len())).unwrap();
        let rel = fd.zip_map(&exact, |a, b| a - b).sup_norm() / exact.sup_norm();
        assert!(rel < 1e-3, "{idx:?}: {rel}");
    }
    let a = lin.dn_derivative(&all, &[0, 2]);
    let b = lin.dn_derivative(&all, &[2, 0]);
    assert!(a.zip_map(&b, |x, y| x - y).sup_norm() <= 1e-12 * a.sup_norm());
}

#[test]
fn first_dn_derivative_is_gauge_invariant() {
    // (g, q) -> (c g, q / c) with c = 1 near the boundary: g'(x, s) = c g(x, s / sqrt(c)).
    let d = unit(65);
    let base = Family::gamma(Profile::Gaussian {
        center: [0.5, 0.5],
        width: 0.3,
        amplitude: 1.5,
    });
    let c = Profile::Sum {
        terms: vec![Profile::constant(1.0), Profile::bump([0.5, 0.5], 0.35, 0.6)],
    };
    let scaled = Tabulated::new(|x: f64, y: f64, s: f64| {
        let cv = c.value(x, y);
        base.metric(x, y, s / cv.sqrt()) * cv
    });
    let f = [BoundaryField::from_fn(d, |x, y| {
        (2.0 * x - y).sin() + x * y
    })];
    let dn = |fam: &dyn MetricFamily| {
        let lin = Linearizer::new(fam, &d).unwrap();
        lin.dn_derivative(&lin.linearize_all(&f, 1), &[0])
    };
    let (a, b) = (dn(&base), dn(&scaled));
    let rel = a.zip_map(&b, |x, y| x - y).sup_norm() / a.sup_norm();
    assert!(rel < 1e-3, "{rel}");
}
