use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::error::Error;
use crate::geometry::Mat2;

fn synthetic_limit(theta: f64, k: &Mat2) -> OrientationLimit {
    let pairing = Complex64::new(k[(0, 0)] - k[(1, 1)], 2.0 * k[(0, 1)]);
    let alpha = -Complex64::from_polar(PI / 4.0, theta) * pairing;
    let values = [1.0 / 32.0, 1.0 / 48.0, 1.0 / 64.0]
        .iter()
        .map(|&h| SweepValue {
            h,
            nodes: 0,
            value: alpha + Complex64::new(0.3, -0.1) * h,
        })
        .collect();
    OrientationLimit::new(theta, values).unwrap()
}

fn short(twin: TwinExperiment) -> TwinExperiment {
    twin.with_probes(vec![[0.5, 0.5]])
        .with_hs(vec![1.0 / 24.0, 1.0 / 32.0], vec![1.0 / 48.0, 1.0 / 64.0])
}

#[test]
fn trace_algebra_holds_exactly() {
    let report = trace_algebra_check(1000, 17);
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.proportional, 250);
    assert_eq!(report.both_traces_vanish, 250);
}

#[test]
fn trace_free_tensor_is_recovered_from_exact_limits() {
    let k = Mat2::new(0.2, -0.15, -0.15, -0.2);
    let limits = vec![synthetic_limit(0.0, &k), synthetic_limit(PI, &k)];
    let estimate = recover_k(limits, &Mat2::identity()).unwrap();
    let error = Tensor::from(Mat2::from(estimate.projected) - k).max_abs();
    assert!(error < 1e-12, "{estimate:?}");
    assert!(estimate.antisymmetric_defect < 1e-12);
}

#[test]
fn multiples_of_the_identity_are_invisible_to_the_limits() {
    let k = Mat2::identity() * 0.4;
    let limits = vec![synthetic_limit(0.0, &k), synthetic_limit(PI, &k)];
    assert!(limits.iter().all(|l| l.alpha.norm() < 1e-15));
    let estimate = recover_k(limits, &Mat2::identity()).unwrap();
    assert!(estimate.projected.max_abs() < 1e-15);
}

#[test]
fn degenerate_closure_is_ill_conditioned() {
    let k = Mat2::new(0.2, 0.0, 0.0, -0.2);
    let limits = vec![synthetic_limit(0.0, &k)];
    let result = recover_k(limits, &Mat2::new(1.0, 0.0, 0.0, -1.0));
    assert!(matches!(result, Err(Error::FitIllConditioned { .. })));
}

#[test]
fn h2_comes_from_the_linear_term() {
    let values: Vec<SweepValue> = [1.0 / 32.0, 1.0 / 48.0, 1.0 / 64.0]
        .iter()
        .map(|&h| SweepValue {
            h,
            nodes: 0,
            value: Complex64::new(PI / 4.0 * -0.6 * h + 2.0 * h * h, 0.0),
        })
        .collect();
    let limit = OrientationLimit::new(0.0, values).unwrap();
    let estimate = recover_h2(&[limit], &Tensor([[0.0; 2]; 2])).unwrap();
    assert!((estimate.value + 0.6).abs() < 1e-10, "{estimate:?}");
}

#[test]
fn conformal_factor_needs_a_calibration() {
    let values = vec![
        SweepValue {
            h: 0.01,
            nodes: 0,
            value: Complex64::new(1.0, 0.0),
        },
        SweepValue {
            h: 0.02,
            nodes: 0,
            value: Complex64::new(0.5, 0.0),
        },
    ];
    assert!(matches!(
        recover_conformal_factor(values, None),
        Err(Error::CalibrationMissing)
    ));
}

#[test]
fn probes_near_the_boundary_are_rejected() {
    let twin = scenarios::conformal_twin(OracleMode::DnOnly, 0.3).with_probes(vec![[0.15, 0.5]]);
    assert!(matches!(twin.validate(), Err(Error::ConfigInvalid(_))));
    assert!(scenarios::conformal_twin(OracleMode::DnOnly, 0.3)
        .validate()
        .is_ok());
}

#[test]
fn twins_differing_on_the_boundary_are_rejected() {
    use std::sync::Arc;

    use crate::geometry::{Family, Profile};

    let twin = TwinExperiment::new(
        "unmatched",
        Arc::new(Family::Flat),
        Arc::new(Family::conformal(Profile::constant(1.1))),
        OracleMode::DnOnly,
    );
    assert!(matches!(twin.validate(), Err(Error::ConfigInvalid(_))));
}

#[test]
fn calibration_requires_a_nontrivial_reference() {
    let reference = scenarios::matched_twins(OracleMode::DnOnly).with_probes(vec![[0.5, 0.5]]);
    assert!(matches!(
        Calibration::from_reference(&reference),
        Err(Error::ConfigInvalid(_))
    ));
}

#[test]
fn white_box_and_dn_only_sweeps_agree() {
    let dn = short(scenarios::h2_twin(OracleMode::DnOnly));
    let white = short(scenarios::h2_twin(OracleMode::WhiteBox));
    let (a, b) = (
        dn.second_order_sweep().unwrap(),
        white.second_order_sweep().unwrap(),
    );
    for (key, values) in &a {
        for (x, y) in values.iter().zip(&b[key]) {
            assert!(
                (x.value - y.value).norm() < 2e-2 * y.value.norm(),
                "{x:?} {y:?}"
            );
        }
    }
    let (a, b) = (
        dn.third_order_sweep().unwrap(),
        white.third_order_sweep().unwrap(),
    );
    for (x, y) in a[0].iter().zip(&b[0]) {
        assert!(
            (x.value - y.value).norm() < 2e-2 * y.value.norm().max(1.0),
            "{x:?} {y:?}"
        );
    }
}

#[test]
fn matched_twins_give_vanishing_integrals() {
    let twin = short(scenarios::matched_twins(OracleMode::DnOnly));
    let sweep = twin.second_order_sweep().unwrap();
    assert!(
        sweep.values().flatten().all(|v| v.value.norm() < 1e-6),
        "{sweep:?}"
    );
    let third = twin.third_order_sweep().unwrap();
    assert!(third[0].iter().all(|v| v.value.norm() < 1e-3), "{third:?}");
}
