//! The twin experiments used by the CLI and the acceptance suite.

use std::sync::Arc;

use crate::geometry::{Family, MetricFamily, Profile, Tabulated};

use super::twin::{OracleMode, TwinExperiment};

/// Width of the flat-topped profiles carrying every coefficient difference.
pub const PROFILE_WIDTH: f64 = 0.32;

/// `amplitude * exp(-(|x - (0.5, 0.5)| / width)^6)`, flat to fifth order at the centre and below
/// `1e-6 * amplitude` on the boundary of the unit square.
pub fn flat_top(amplitude: f64, width: f64) -> Profile {
    Profile::FlatTop {
        center: [0.5, 0.5],
        width,
        amplitude,
    }
}

/// Balanced trace-free family with second fundamental form of size `amplitude`.
pub fn trace_free_family(amplitude: f64) -> Family {
    Family::trace_free(
        flat_top(amplitude, PROFILE_WIDTH),
        flat_top(-2.0 / 3.0 * amplitude, PROFILE_WIDTH),
        true,
    )
}

/// A family with nonzero `k1`, `h2` and `h3`, used for the matched twins.
pub fn curved_family() -> Family {
    Family::Layered {
        base: Box::new(trace_free_family(0.3)),
        quadratic: Profile::constant(0.0),
        cubic: flat_top(0.4, PROFILE_WIDTH),
    }
}

/// `curved_family` against itself, the second copy seen only through tabulated metric values.
pub fn matched_twins(mode: OracleMode) -> TwinExperiment {
    let family = curved_family();
    let copy = family.clone();
    let tabulated: Arc<dyn MetricFamily> =
        Arc::new(Tabulated::new(move |x, y, s| copy.metric(x, y, s)));
    TwinExperiment::new("matched", Arc::new(family), tabulated, mode)
}

/// Trace-free second fundamental form against the flat family: `K = -B`.
pub fn trace_free_twin(mode: OracleMode) -> TwinExperiment {
    TwinExperiment::new(
        "trace_free",
        Arc::new(trace_free_family(0.3)),
        Arc::new(Family::Flat),
        mode,
    )
}

/// `h2` differing by 20%: `g = (1 + beta s^3) I` against `g = (1 + 1.2 beta s^3) I`.
pub fn h2_twin(mode: OracleMode) -> TwinExperiment {
    TwinExperiment::new(
        "h2",
        Arc::new(Family::cubic(flat_top(0.5, PROFILE_WIDTH))),
        Arc::new(Family::cubic(flat_top(0.6, PROFILE_WIDTH))),
        mode,
    )
}

fn conformal_family(amplitude: f64, width: f64) -> Family {
    Family::conformal(Profile::Sum {
        terms: vec![Profile::constant(1.0), flat_top(amplitude, width)],
    })
}

/// Flat family against `c g` with `c = 1 + amplitude * bump`.
pub fn conformal_twin(mode: OracleMode, amplitude: f64) -> TwinExperiment {
    TwinExperiment::new(
        "conformal",
        Arc::new(Family::Flat),
        Arc::new(conformal_family(amplitude, PROFILE_WIDTH)),
        mode,
    )
}

/// Reference run for the conformal calibration: a narrower, weaker factor than [`conformal_twin`].
pub fn calibration_twin() -> TwinExperiment {
    TwinExperiment::new(
        "calibration",
        Arc::new(Family::Flat),
        Arc::new(conformal_family(0.15, 0.28)),
        OracleMode::DnOnly,
    )
    .with_probes(vec![[0.5, 0.5]])
}
