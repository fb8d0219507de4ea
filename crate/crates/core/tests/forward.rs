use minsurf::forward::{
    area_first_variation, dn_from_areas, dn_map, AreaDerivative, BoundaryData, ForwardSolver,
    NewtonOptions,
};
use minsurf::geometry::{Domain, Family, GridFunction, Profile, Side};

const KAPPA: f64 = 0.7;

fn scherk(x: f64, y: f64) -> f64 {
    ((KAPPA * x).cos() / (KAPPA * y).cos()).ln() / KAPPA
}

fn scherk_error(n: usize) -> f64 {
    let d = Domain::square(-1.0, 1.0, n).unwrap();
    let opts = NewtonOptions {
        delta_admissible: 2.0,
        ..NewtonOptions::default()
    };
    let solver = ForwardSolver::new(&Family::Flat, &d, opts).unwrap();
    let sol = solver.solve(&BoundaryData::from_fn(d, scherk)).unwrap();
    let exact = GridFunction::from_fn(d, scherk);
    (&sol.u - &exact).sup_norm()
}

#[test]
fn scherk_surface_converges_at_second_order() {
    let errs: Vec<f64> = [33, 65, 129].iter().map(|&n| scherk_error(n)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(errs[2] < 1e-3, "{errs:?}");
    assert!(orders.iter().all(|&p| p >= 1.9), "{errs:?} {orders:?}");
}

fn curved_family() -> Family {
    Family::Scaled {
        factor: Profile::Sum {
            terms: vec![
                Profile::constant(1.0),
                Profile::bump([0.45, 0.55], 0.35, 0.25),
            ],
        },
        base: Box::new(Family::trace_free(
            Profile::bump([0.5, 0.5], 0.4, 0.5),
            Profile::bump([0.55, 0.45], 0.35, -0.3),
            true,
        )),
    }
}

#[test]
fn dn_from_areas_agrees_with_dn_map() {
    let d = Domain::square(0.0, 1.0, 65).unwrap();
    let fam = curved_family();
    let solver = ForwardSolver::new(&fam, &d, NewtonOptions::default()).unwrap();
    let f = BoundaryData::from_fn(d, |x, y| 0.04 * (x - 0.5 * y) + 0.01 * (2.0 * x * y).sin());
    let dn = dn_map(&f, &solver).unwrap();
    let rec = dn_from_areas(&f, &solver, AreaDerivative::Discrete).unwrap();
    let rel =
        rec.zip_map(&dn, |a, b| a - b).sup_norm_without_corners() / dn.sup_norm_without_corners();
    assert!(rel < 5e-3, "relative difference {rel}");
    let _ = Side::ALL;
}

#[test]
fn first_variation_matches_re_solved_areas() {
    let d = Domain::square(0.0, 1.0, 33).unwrap();
    let fam = curved_family();
    let solver = ForwardSolver::new(&fam, &d, NewtonOptions::default()).unwrap();
    let f = BoundaryData::from_fn(d, |x, y| 0.03 * (x + y) - 0.01 * x * x);
    let w = GridFunction::from_fn(d, |x, y| (1.5 * x).cos() + y * y);
    let fv = area_first_variation(&f, &w, &solver).unwrap();
    assert!(
        (fv.boundary - fv.finite_difference).abs() < 1e-6 * (1.0 + fv.boundary.abs()),
        "{fv:?}"
    );
}
