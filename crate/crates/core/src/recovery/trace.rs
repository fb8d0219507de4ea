use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::Mat2;

/// `S = 2 diag(1, -1)` and `A = 2 antidiag(1, 1)`, the real and imaginary Hessian parts of `z^2`.
pub fn hessian_pair() -> (Mat2, Mat2) {
    (
        Mat2::new(2.0, 0.0, 0.0, -2.0),
        Mat2::new(0.0, 2.0, 2.0, 0.0),
    )
}

/// Outcome of the trace-algebra check over random symmetric matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceAlgebraReport {
    pub samples: usize,
    /// Samples drawn as multiples of the identity.
    pub proportional: usize,
    /// Samples with `Tr(KS) = Tr(KA) = 0` exactly.
    pub both_traces_vanish: usize,
    /// Largest `| |K - Tr(K)/2 I|_F^2 - (Tr(KS)^2 + Tr(KA)^2) / 8 |` relative to `|K|_F^2`.
    pub max_identity_defect: f64,
    /// Samples where the two sides of the equivalence disagree.
    pub mismatches: usize,
}

impl TraceAlgebraReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.max_identity_defect <= 8.0 * f64::EPSILON
    }
}

/// Checks `Tr(KS) = 0 and Tr(KA) = 0 <=> K = kappa I` on seeded random symmetric matrices.
///
/// Every fourth sample is a multiple of the identity so both directions are exercised. The equivalence
/// follows from the identity `|K - Tr(K)/2 I|_F^2 = (Tr(KS)^2 + Tr(KA)^2) / 8`, checked to rounding.
pub fn trace_algebra_check(samples: usize, seed: u64) -> TraceAlgebraReport {
    let (s, a) = hessian_pair();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TraceAlgebraReport {
        samples,
        proportional: 0,
        both_traces_vanish: 0,
        max_identity_defect: 0.0,
        mismatches: 0,
    };
    for n in 0..samples {
        let k = if n % 4 == 0 {
            report.proportional += 1;
            Mat2::identity() * rng.random_range(-10.0..10.0)
        } else {
            let (p, q, r) = (
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            Mat2::new(p, q, q, r)
        };
        let (ts, ta) = ((k * s).trace(), (k * a).trace());
        let vanish = ts == 0.0 && ta == 0.0;
        let trace_free = k - Mat2::identity() * (0.5 * k.trace());
        let proportional = trace_free.norm() == 0.0;
        if vanish {
            report.both_traces_vanish += 1;
        }
        if vanish != proportional {
            report.mismatches += 1;
        }
        let defect = (trace_free.norm_squared() - (ts * ts + ta * ta) / 8.0).abs();
        let scale = k.norm_squared().max(f64::MIN_POSITIVE);
        report.max_identity_defect = report.max_identity_defect.max(defect / scale);
    }
    report
}
