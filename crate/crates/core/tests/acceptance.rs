//! Acceptance run: one PASS/FAIL line per criterion, scored from the stage reports of the default
//! configuration with the tolerances pinned below.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use minsurf::cli::stages::{
    run_cgo, run_forward, run_identities, run_linearize, run_recover, CgoReport, ForwardReport,
    IdentitiesReport, LinearizeReport, RecoverReport,
};
use minsurf::cli::{ExperimentConfig, TwinName};

const SCHERK_ORDER: f64 = 1.9;
const SOLVE_SECONDS: f64 = 60.0;
const ZERO_RESIDUAL: f64 = 1e-12;
const AFFINE_ERROR: f64 = 1e-10;
const FIRST_VARIATION: f64 = 1e-6;
const FIRST_VARIATION_PAIRS: usize = 10;
const DN_FROM_AREAS: f64 = 5e-3;
const LINEARIZATION: [f64; 3] = [1e-3, 1e-3, 5e-3];
const LINEARIZATION_NODES: usize = 129;
const SECOND_IDENTITY: f64 = 5e-3;
const THIRD_IDENTITY: f64 = 1e-2;
const IDENTITY_ORDER: f64 = 1.8;
const IDENTITY_NODES: usize = 129;
const CGO_RESIDUAL: f64 = 1e-3;
const REMAINDER_L2_SLOPE: f64 = 0.5;
const REMAINDER_L4_SLOPE: f64 = 0.25;
const SLOPE_TOLERANCE: f64 = 0.1;
const CALCULUS_MINUTES: f64 = 30.0;
const PLATEAU_DRIFT: f64 = 0.05;
const VANISHING_RATIO: f64 = 0.05;
const ZERO_TRUTH: f64 = 0.05;
const NONZERO_TRUTH: f64 = 0.15;
const TRACE_SAMPLES: usize = 1000;
const TRACE_DEFECT: f64 = 8.0 * f64::EPSILON;

/// Calculus cases and their floors: single remainders by degree, derivative remainders by
/// (degree, order), and the two products.
const CALCULUS_FLOORS: [(&str, f64); 11] = [
    ("remainder_deg0", 1.0),
    ("remainder_deg1", 1.0),
    ("remainder_deg2", 2.0),
    ("remainder_deg3", 2.0),
    ("remainder_deg4", 3.0),
    ("remainder_derivative_deg2_order1", 1.0),
    ("remainder_derivative_deg3_order1", 2.0),
    ("remainder_derivative_deg4_order2", 2.0),
    ("tilde_remainder_deg4", 3.0),
    ("remainder_product_deg4", 3.0),
    ("derivative_product_deg3", 2.0),
];

struct Line {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: u8, name: &'static str, pass: bool, detail: String) -> Line {
    Line {
        id,
        name,
        pass,
        detail,
    }
}

fn forward(report: &ForwardReport) -> Vec<Line> {
    let order = report.min_order();
    let orders = report.scherk.iter().filter(|r| r.order.is_some()).count();
    let resolutions: Vec<usize> = report.scherk.iter().map(|r| r.nodes).collect();
    let worst = report
        .first_variation
        .iter()
        .map(|r| {
            (r.boundary - r.finite_difference).abs() / (FIRST_VARIATION * (1.0 + r.boundary.abs()))
        })
        .fold(0.0, f64::max);
    vec![
        line(
            1,
            "forward_convergence",
            resolutions == [65, 129, 257]
                && orders == 2
                && order >= SCHERK_ORDER
                && report.slowest_solve < SOLVE_SECONDS,
            format!(
                "min order {order:.3}, slowest solve {:.1} s",
                report.slowest_solve
            ),
        ),
        line(
            2,
            "zero_and_affine",
            report.zero_residual < ZERO_RESIDUAL
                && report.zero_sup < ZERO_RESIDUAL
                && report.affine_error < AFFINE_ERROR,
            format!(
                "zero residual {:.1e}, zero sup {:.1e}, affine error {:.1e}",
                report.zero_residual, report.zero_sup, report.affine_error
            ),
        ),
        line(
            3,
            "area_dn_duality",
            report.first_variation.len() >= FIRST_VARIATION_PAIRS
                && worst <= 1.0
                && report.dn_from_areas < DN_FROM_AREAS,
            format!(
                "{} pairs, worst defect/bound {worst:.3}, dn relative {:.2e}",
                report.first_variation.len(),
                report.dn_from_areas
            ),
        ),
    ]
}

fn linearize(report: &LinearizeReport) -> Line {
    let worst = report
        .rows
        .iter()
        .map(|r| r.error / LINEARIZATION[r.indices.len() - 1])
        .fold(0.0, f64::max);
    let orders: Vec<usize> = report.rows.iter().map(|r| r.indices.len()).collect();
    line(
        4,
        "linearization_cross_validation",
        report.nodes == LINEARIZATION_NODES
            && report.rows.iter().any(|r| r.family == "gamma")
            && [1, 2, 3].iter().all(|k| orders.contains(k))
            && worst <= 1.0,
        format!(
            "{} comparisons, worst error/tolerance {worst:.3}",
            report.rows.len()
        ),
    )
}

fn identities(report: &IdentitiesReport) -> Line {
    let finest = report.finest();
    let pass_row = |r: &&minsurf::cli::stages::IdentityRow| {
        let tol = if r.order == 2 {
            SECOND_IDENTITY
        } else {
            THIRD_IDENTITY
        };
        r.nodes == IDENTITY_NODES
            && (r.scale == 0.0 || (r.relative < tol && r.rate.is_some_and(|o| o >= IDENTITY_ORDER)))
    };
    let detail = finest
        .iter()
        .map(|r| {
            if r.scale == 0.0 {
                format!("{} order {}: identically zero", r.family, r.order)
            } else {
                format!(
                    "{} order {}: {:.2e} rate {:.2}",
                    r.family,
                    r.order,
                    r.relative,
                    r.rate.unwrap_or(f64::NAN)
                )
            }
        })
        .collect::<Vec<_>>()
        .join("; ");
    let nonzero = finest
        .iter()
        .filter(|r| r.scale > 0.0)
        .map(|r| r.order)
        .collect::<Vec<_>>();
    line(
        5,
        "integral_identities",
        nonzero.contains(&2) && nonzero.contains(&3) && finest.iter().all(pass_row),
        detail,
    )
}

fn cgo(report: &CgoReport, seconds: f64) -> Vec<Line> {
    let slope = |case: &str| {
        report
            .decay_row(case)
            .and_then(|r| r.slope)
            .unwrap_or(f64::NAN)
    };
    let (l2, l4) = (slope("remainder_l2"), slope("remainder_l4"));
    let residual = report
        .residual
        .relative_to_potential()
        .max(report.tilde_residual.relative_to_potential());
    let failed: Vec<&str> = CALCULUS_FLOORS
        .iter()
        .filter(|(case, floor)| {
            !report
                .calculus
                .iter()
                .find(|r| r.case == *case)
                .and_then(|r| r.slope)
                .is_some_and(|s| s >= floor - SLOPE_TOLERANCE)
        })
        .map(|(case, _)| *case)
        .collect();
    let mixed = report.second_order_slope.unwrap_or(f64::NAN);
    vec![
        line(
            6,
            "cgo_construction",
            report.zero_potential_remainder == 0.0
                && residual < CGO_RESIDUAL
                && l2 >= REMAINDER_L2_SLOPE
                && l4 >= REMAINDER_L4_SLOPE,
            format!(
                "zero-potential remainder {:.1e}, residual {residual:.2e}, L2 slope {l2:.3}, L4 slope {l4:.3}",
                report.zero_potential_remainder
            ),
        ),
        line(
            7,
            "cgo_calculus",
            failed.is_empty() && seconds < CALCULUS_MINUTES * 60.0,
            if failed.is_empty() {
                format!("{} floors met in {seconds:.0} s", CALCULUS_FLOORS.len())
            } else {
                format!("below floor: {}", failed.join(", "))
            },
        ),
        line(
            8,
            "stationary_phase",
            mixed > 0.0 && report.plateau_drift < PLATEAU_DRIFT && report.vanishing_ratio < VANISHING_RATIO,
            format!(
                "mixed-term slope {mixed:.3}, plateau drift {:.2e}, vanishing ratio {:.2e}",
                report.plateau_drift, report.vanishing_ratio
            ),
        ),
    ]
}

fn recover(report: &RecoverReport) -> Vec<Line> {
    let matched = report
        .twin(TwinName::Matched)
        .expect("matched twin in the default config");
    let (k, h2, c) = matched
        .probes
        .iter()
        .fold((0.0f64, 0.0f64, 0.0f64), |acc, p| {
            (
                acc.0.max(p.k.projected.max_abs() / p.truth.k_scale),
                acc.1.max(p.h2.value.abs() / p.truth.h2_scale),
                acc.2.max((p.c.value - 1.0).abs()),
            )
        });
    let trace_free = report
        .twin(TwinName::TraceFree)
        .expect("trace-free twin in the default config");
    let k_error = trace_free
        .probes
        .iter()
        .flat_map(|p| {
            let floor = ZERO_TRUTH * p.truth.k_scale;
            (0..4).map(move |n| {
                let truth = p.truth.k.0[n / 2][n % 2];
                (p.k.projected.0[n / 2][n % 2] - truth).abs() / truth.abs().max(floor)
            })
        })
        .fold(0.0, f64::max);
    let conformal = report
        .twin(TwinName::Conformal)
        .expect("conformal twin in the default config");
    let center = conformal.probes.iter().find(|p| p.probe == [0.5, 0.5]);
    let c_error = center.map_or(f64::NAN, |p| {
        (p.c.value - p.truth.c).abs() / (p.truth.c - 1.0).abs()
    });
    let t = &report.trace_algebra;
    vec![
        line(
            9,
            "recovery_zero_truth",
            k < ZERO_TRUTH && h2 < ZERO_TRUTH && c < ZERO_TRUTH,
            format!("|K|/scale {k:.2e}, |h2|/scale {h2:.2e}, |c - 1| {c:.2e}"),
        ),
        line(
            10,
            "recovery_nonzero_truth",
            k_error < NONZERO_TRUTH && c_error < NONZERO_TRUTH,
            format!(
                "K component error {k_error:.2e}, c_hat {:.4} (error {c_error:.2e} of c - 1)",
                center.map_or(f64::NAN, |p| p.c.value)
            ),
        ),
        line(
            11,
            "trace_algebra",
            t.samples == TRACE_SAMPLES
                && t.mismatches == 0
                && t.max_identity_defect <= TRACE_DEFECT,
            format!(
                "{} samples, {} mismatches, identity defect {:.1e}",
                t.samples, t.mismatches, t.max_identity_defect
            ),
        ),
    ]
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir =
        std::env::temp_dir().join(format!("minsurf-acceptance-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run_all(config: &Path, out: &Path) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_minsurf"))
        .args(["all", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .ok()
        .and_then(|o| o.status.code())
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap_or_default(),
            )
        })
        .collect()
}

fn determinism() -> Line {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quick.toml");
    let (first, second) = (scratch_dir("first"), scratch_dir("second"));
    let codes = (run_all(&config, &first), run_all(&config, &second));
    let (a, b) = (artifacts(&first), artifacts(&second));
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    let kinds_present = a.keys().any(|k| k.ends_with(".csv")) && a.contains_key("manifest.json");
    let _ = fs::remove_dir_all(&first);
    let _ = fs::remove_dir_all(&second);
    line(
        12,
        "determinism",
        codes.0.is_some()
            && codes.0 == codes.1
            && kinds_present
            && a.len() == b.len()
            && differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across two runs", a.len())
        } else {
            format!("differing: {differing:?}")
        },
    )
}

fn main() {
    let config = ExperimentConfig::default();
    let mut lines = Vec::new();
    match run_forward(&config.forward, config.seed) {
        Ok(report) => lines.extend(forward(&report)),
        Err(e) => lines.push(line(1, "forward", false, e.to_string())),
    }
    match run_linearize(&config.linearize) {
        Ok(report) => lines.push(linearize(&report)),
        Err(e) => lines.push(line(
            4,
            "linearization_cross_validation",
            false,
            e.to_string(),
        )),
    }
    match run_identities(&config.identities) {
        Ok(report) => lines.push(identities(&report)),
        Err(e) => lines.push(line(5, "integral_identities", false, e.to_string())),
    }
    let start = Instant::now();
    match run_cgo(&config.cgo) {
        Ok(report) => lines.extend(cgo(&report, start.elapsed().as_secs_f64())),
        Err(e) => lines.push(line(6, "cgo", false, e.to_string())),
    }
    match run_recover(&config.recover, config.seed) {
        Ok(report) => lines.extend(recover(&report)),
        Err(e) => lines.push(line(9, "recovery", false, e.to_string())),
    }
    lines.push(determinism());

    for l in &lines {
        println!(
            "criterion {:>2} {:<32} {}  {}",
            l.id,
            l.name,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail
        );
    }
    if lines.iter().any(|l| !l.pass) {
        std::process::exit(1);
    }
}
