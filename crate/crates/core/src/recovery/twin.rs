use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgo::{CgoPhase, SolutionPhase};
use crate::error::{Error, Result};
use crate::geometry::{point_coefficients, BoundaryField, Domain, Mat2, MetricFamily};
use crate::identities::{second_identity, third_identity, IdentityReport};
use crate::linearize::{Linearizations, Linearizer};

/// Probes must keep this fraction of the domain diameter from the boundary.
pub const SAFE_ZONE: f64 = 0.2;

/// Largest phase increment per grid cell accepted for the CGO boundary data, in radians.
pub const MAX_PHASE_STEP: f64 = 0.25;

/// Coefficient jets of the twins must agree on the boundary to this tolerance.
pub const BOUNDARY_AGREEMENT_TOL: f64 = 1e-6;

/// Which side of the integral identities supplies the interior integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Interior integrals evaluated from the coefficients of both families.
    WhiteBox,
    /// Interior integrals recovered from DN derivatives only.
    DnOnly,
}

/// Complex value of one identity at one `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepValue {
    pub h: f64,
    pub nodes: usize,
    pub value: Complex64,
}

/// Two metric families compared through their linearized DN maps.
#[derive(Clone, Debug)]
pub struct TwinExperiment {
    pub name: String,
    pub family_a: Arc<dyn MetricFamily>,
    pub family_b: Arc<dyn MetricFamily>,
    pub mode: OracleMode,
    /// Extent of the surface patch; the resolution is chosen per `h`.
    pub domain: Domain,
    pub probes: Vec<[f64; 2]>,
    /// Sweep for the second-order identity.
    pub hs: Vec<f64>,
    /// Sweep for the third-order identity, whose CGO data grow half as fast.
    pub third_order_hs: Vec<f64>,
    /// Rotation angles of the quadratic phase used by the second-order identity.
    pub orientations: Vec<f64>,
    pub min_nodes: usize,
    pub max_nodes: usize,
}

impl TwinExperiment {
    pub fn new(
        name: &str,
        family_a: Arc<dyn MetricFamily>,
        family_b: Arc<dyn MetricFamily>,
        mode: OracleMode,
    ) -> Self {
        Self {
            name: name.to_owned(),
            family_a,
            family_b,
            mode,
            domain: Domain::square(0.0, 1.0, 129).expect("unit square"),
            probes: vec![[0.5, 0.5], [0.46, 0.54]],
            hs: vec![1.0 / 48.0, 1.0 / 56.0, 1.0 / 64.0],
            third_order_hs: vec![1.0 / 96.0, 1.0 / 112.0, 1.0 / 128.0],
            orientations: vec![0.0, PI],
            min_nodes: 129,
            max_nodes: 1025,
        }
    }

    pub fn with_probes(mut self, probes: Vec<[f64; 2]>) -> Self {
        self.probes = probes;
        self
    }

    pub fn with_hs(mut self, hs: Vec<f64>, third_order_hs: Vec<f64>) -> Self {
        self.hs = hs;
        self.third_order_hs = third_order_hs;
        self
    }

    /// Checks the probe safe zone, the sweep and boundary agreement of the twins.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        let margin = SAFE_ZONE * d.diameter();
        for p in &self.probes {
            let dist = (p[0] - d.x0)
                .min(d.x1 - p[0])
                .min(p[1] - d.y0)
                .min(d.y1 - p[1]);
            if dist < margin {
                return Err(Error::ConfigInvalid(format!(
                    "probe {p:?} is {dist:.3} from the boundary, need {margin:.3}"
                )));
            }
        }
        let sweep_ok = |hs: &[f64]| hs.len() >= 2 && hs.iter().all(|h| *h > 0.0);
        if self.probes.is_empty() || !sweep_ok(&self.hs) || !sweep_ok(&self.third_order_hs) {
            return Err(Error::ConfigInvalid(
                "recovery needs at least one probe and two positive h values".into(),
            ));
        }
        if self.orientations.is_empty() {
            return Err(Error::ConfigInvalid("no phase orientations".into()));
        }
        let boundary = d.boundary_nodes();
        for n in boundary {
            let (x, y) = d.coords(n);
            let (a, b) = (self.family_a.jet(x, y, 0.0), self.family_b.jet(x, y, 0.0));
            let gap =
                a.d.iter()
                    .zip(&b.d)
                    .map(|(p, q)| (p - q).abs().max())
                    .fold(0.0, f64::max);
            if gap > BOUNDARY_AGREEMENT_TOL {
                return Err(Error::ConfigInvalid(format!(
                    "twins differ by {gap:.3e} at boundary point ({x:.3}, {y:.3})"
                )));
            }
        }
        Ok(())
    }

    /// Grid for `h`: CGO data whose exponent has gradient up to `steepness * |z - probe| / h` may turn by
    /// at most [`MAX_PHASE_STEP`] per cell anywhere in the domain.
    pub fn domain_for(&self, h: f64, steepness: f64) -> Result<Domain> {
        let d = &self.domain;
        let reach = self
            .probes
            .iter()
            .flat_map(|p| {
                [(d.x0, d.y0), (d.x1, d.y0), (d.x0, d.y1), (d.x1, d.y1)]
                    .map(|(x, y)| (x - p[0]).hypot(y - p[1]))
            })
            .fold(0.0, f64::max);
        let required = MAX_PHASE_STEP * h / (steepness * reach);
        let cells = ((d.x1 - d.x0).max(d.y1 - d.y0) / required).ceil() as usize;
        let nodes = (cells + 1).max(self.min_nodes);
        if nodes > self.max_nodes {
            return Err(Error::UnderResolved {
                spacing: (d.x1 - d.x0) / (self.max_nodes - 1) as f64,
                required,
            });
        }
        d.with_resolution(nodes, nodes)
    }

    fn linearizers(&self, domain: &Domain) -> Result<[Linearizer; 2]> {
        Ok([
            Linearizer::new(self.family_a.as_ref(), domain)?,
            Linearizer::new(self.family_b.as_ref(), domain)?,
        ])
    }

    fn observed(&self, a: &IdentityReport<Complex64>, b: &IdentityReport<Complex64>) -> Complex64 {
        match self.mode {
            OracleMode::DnOnly => a.lhs - b.lhs,
            OracleMode::WhiteBox => a.rhs() - b.rhs(),
        }
    }

    /// Second-order identity differences for every probe and orientation, keyed by `(probe, orientation)`.
    pub fn second_order_sweep(&self) -> Result<BTreeMap<(usize, usize), Vec<SweepValue>>> {
        self.validate()?;
        let mut out: BTreeMap<(usize, usize), Vec<SweepValue>> = BTreeMap::new();
        for &h in &self.hs {
            let domain = self.domain_for(h, 2.0)?;
            let lins = self.linearizers(&domain)?;
            let jobs: Vec<(usize, usize)> = (0..self.probes.len())
                .flat_map(|p| (0..self.orientations.len()).map(move |o| (p, o)))
                .collect();
            let values: Vec<Complex64> = jobs
                .par_iter()
                .map(|&(p, o)| {
                    let phase = CgoPhase::quadratic().rotated(self.orientations[o]);
                    let reports = lins
                        .each_ref()
                        .map(|lin| second_order_report(lin, &phase, self.probes[p], h));
                    self.observed(&reports[0], &reports[1])
                })
                .collect();
            for (job, value) in jobs.into_iter().zip(values) {
                out.entry(job).or_default().push(SweepValue {
                    h,
                    nodes: domain.nx,
                    value,
                });
            }
        }
        Ok(out)
    }

    /// Third-order identity differences for every probe.
    pub fn third_order_sweep(&self) -> Result<Vec<Vec<SweepValue>>> {
        self.validate()?;
        let mut out = vec![Vec::new(); self.probes.len()];
        for &h in &self.third_order_hs {
            let domain = self.domain_for(h, 1.0)?;
            let lins = self.linearizers(&domain)?;
            let values: Vec<Complex64> = self
                .probes
                .par_iter()
                .map(|&probe| {
                    let reports = lins
                        .each_ref()
                        .map(|lin| third_order_report(lin, &CgoPhase::quadratic(), probe, h));
                    self.observed(&reports[0], &reports[1])
                })
                .collect();
            for (series, value) in out.iter_mut().zip(values) {
                series.push(SweepValue {
                    h,
                    nodes: domain.nx,
                    value,
                });
            }
        }
        Ok(out)
    }

    /// White-box values at `probe`, used only for scoring.
    pub fn truth(&self, probe: [f64; 2]) -> Result<Truth> {
        let [x, y] = probe;
        let (ja, jb) = (self.family_a.jet(x, y, 0.0), self.family_b.jet(x, y, 0.0));
        let not_spd = || Error::NotSpd { x, y, s: 0.0 };
        let (pa, pb) = (
            point_coefficients(&ja).ok_or_else(not_spd)?,
            point_coefficients(&jb).ok_or_else(not_spd)?,
        );
        let c = (jb.g().determinant() / ja.g().determinant()).sqrt();
        Ok(Truth {
            k: Tensor::from(pa.k[1] - pb.k[1] * c),
            h2: pa.h[2] - c * pb.h[2],
            c,
            k_scale: Tensor::from(pa.k[1])
                .max_abs()
                .max(Tensor::from(pb.k[1]).max_abs()),
            h2_scale: pa.h[2].abs().max(pb.h[2].abs()),
        })
    }
}

/// Row-major 2x2 tensor with a serializable layout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tensor(pub [[f64; 2]; 2]);

impl From<Mat2> for Tensor {
    fn from(m: Mat2) -> Self {
        Tensor([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]])
    }
}

impl From<Tensor> for Mat2 {
    fn from(t: Tensor) -> Self {
        Mat2::new(t.0[0][0], t.0[0][1], t.0[1][0], t.0[1][1])
    }
}

impl Tensor {
    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Ground-truth values of the recovery targets at one probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truth {
    pub k: Tensor,
    pub h2: f64,
    pub c: f64,
    /// Largest entry of either `k1` at the probe.
    pub k_scale: f64,
    /// Largest `|h2|` of either family at the probe.
    pub h2_scale: f64,
}

/// Boundary trace of `exp(Theta((z - probe)) / h)`.
fn cgo_data(
    domain: &Domain,
    phase: &SolutionPhase,
    probe: [f64; 2],
    h: f64,
) -> BoundaryField<Complex64> {
    BoundaryField::from_fn(*domain, |x, y| {
        (phase.value(Complex64::new(x - probe[0], y - probe[1])) / h).exp()
    })
}

fn first_only(lin: &Linearizer, data: &[BoundaryField<Complex64>]) -> Linearizations<Complex64> {
    Linearizations {
        first: data
            .iter()
            .enumerate()
            .map(|(j, f)| lin.first_system(f, j))
            .collect(),
        second: BTreeMap::new(),
        third: BTreeMap::new(),
    }
}

fn add_second(lin: &Linearizer, all: &mut Linearizations<Complex64>, j: usize, k: usize) {
    let mut sys = lin.solve_second(all.v(j), all.v(k));
    sys.indices = vec![j, k];
    all.second.insert([j.min(k), j.max(k)], sys);
}

/// Second-order identity with data `exp(Phi/h)` twice and paired with `exp(-2 conj(Phi)/h)`.
pub fn second_order_report(
    lin: &Linearizer,
    phase: &CgoPhase,
    probe: [f64; 2],
    h: f64,
) -> IdentityReport<Complex64> {
    let [hol, _, anti] = SolutionPhase::second_order_triple(phase);
    let domain = *lin.domain();
    let mut all = first_only(
        lin,
        &[
            cgo_data(&domain, &hol, probe, h),
            cgo_data(&domain, &anti, probe, h),
        ],
    );
    add_second(lin, &mut all, 0, 0);
    second_identity(lin, &all, [0, 0], 1)
}

/// Third-order identity with the quadruple `exp(Phi/h), exp(-conj(Phi)/h)` repeated.
pub fn third_order_report(
    lin: &Linearizer,
    phase: &CgoPhase,
    probe: [f64; 2],
    h: f64,
) -> IdentityReport<Complex64> {
    let [hol, anti, _, _] = SolutionPhase::third_order_quadruple(phase);
    let domain = *lin.domain();
    let mut all = first_only(
        lin,
        &[
            cgo_data(&domain, &hol, probe, h),
            cgo_data(&domain, &anti, probe, h),
        ],
    );
    add_second(lin, &mut all, 0, 0);
    add_second(lin, &mut all, 0, 1);
    let w = [all.w2(1, 0), all.w2(0, 0), all.w2(0, 1)];
    let mut sys = lin.solve_third([all.v(0), all.v(1), all.v(0)], w);
    sys.indices = vec![0, 0, 1];
    all.third.insert([0, 0, 1], sys);
    third_identity(lin, &all, [0, 1, 0], 1)
}
