use super::*;
use crate::geometry::{BoundaryField, Domain, Family, MetricFamily, Profile};

fn unit(n: usize) -> Domain {
    Domain::square(0.0, 1.0, n).unwrap()
}

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

fn data(d: Domain) -> Vec<BoundaryField<f64>> {
    vec![
        BoundaryField::from_fn(d, |x, y| 0.5 * (x - y) + 0.2),
        BoundaryField::from_fn(d, |x, y| (2.0 * x + y).sin()),
        BoundaryField::from_fn(d, |x, y| x * y + 0.5 * x * x),
        BoundaryField::from_fn(d, |x, y| (x - 2.0 * y).cos()),
    ]
}

fn setup(fam: &dyn MetricFamily, n: usize) -> (Linearizer, Linearizations<f64>) {
    let d = unit(n);
    let lin = Linearizer::new(fam, &d).unwrap();
    let all = lin.linearize_all(&data(d), 3);
    (lin, all)
}

#[test]
fn second_identity_vanishes_in_flat_space() {
    let (lin, all) = setup(&Family::Flat, 17);
    let r = second_identity(&lin, &all, [0, 1], 2);
    assert_eq!(r.scale(), 0.0);
}

#[test]
fn third_identity_in_flat_space_has_only_leading_and_slope_terms() {
    let (lin, all) = setup(&Family::Flat, 33);
    let r = third_identity(&lin, &all, [0, 1, 2], 3);
    for g in [TermGroup::H, TermGroup::R, TermGroup::B] {
        assert_eq!(r.group(g), 0.0, "{g}");
    }
    assert!(r.group(TermGroup::Leading).abs() > 0.1);
    assert!(r.relative_residual() < 2e-2, "{r:?}");
}

#[test]
fn identities_hold_at_discretization_order() {
    let (lin, all) = setup(&curved(), 65);
    let r2 = second_identity(&lin, &all, [0, 1], 2);
    assert!(r2.relative_residual() < 5e-3, "{r2:?}");
    let r3 = third_identity(&lin, &all, [0, 1, 2], 3);
    assert!(r3.relative_residual() < 1e-2, "{r3:?}");
}

#[test]
fn compactly_supported_coefficients_drop_boundary_terms() {
    let fam = Family::Layered {
        base: Box::new(Family::trace_free(
            Profile::bump([0.5, 0.5], 0.4, 0.6),
            Profile::constant(0.0),
            true,
        )),
        quadratic: Profile::bump([0.45, 0.5], 0.4, 0.5),
        cubic: Profile::constant(0.0),
    };
    let (lin, all) = setup(&fam, 33);
    let r2 = second_identity(&lin, &all, [0, 1], 2);
    assert!(r2.term("boundary_k1_normal").unwrap().abs() < 1e-12);
    let r3 = third_identity(&lin, &all, [0, 1, 2], 3);
    assert!(r3.group(TermGroup::B).abs() < 1e-12);
}

#[test]
fn reports_are_invariant_under_index_permutations() {
    let (lin, all) = setup(&curved(), 33);
    let a = second_identity(&lin, &all, [0, 1], 3);
    let b = second_identity(&lin, &all, [1, 0], 3);
    assert!((a.lhs - b.lhs).abs() <= 1e-10 * a.scale());
    assert!((a.residual - b.residual).abs() <= 1e-10 * a.scale());
    let base = third_identity(&lin, &all, [0, 1, 2], 3);
    for p in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let r = third_identity(&lin, &all, p, 3);
        assert!((r.lhs - base.lhs).abs() <= 1e-10 * base.scale(), "{p:?}");
        for g in [
            TermGroup::Leading,
            TermGroup::H,
            TermGroup::R,
            TermGroup::B,
            TermGroup::Slope,
        ] {
            assert!(
                (r.group(g) - base.group(g)).abs() <= 1e-10 * base.scale(),
                "{p:?} {g}"
            );
        }
    }
}
