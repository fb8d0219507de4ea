use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cgo::{CgoConfig, CgoPhase};
use crate::error::{Error, Result};
use crate::forward::NewtonOptions;
use crate::geometry::{BoundaryField, Domain, Family, Profile};
use crate::recovery::{scenarios, OracleMode, TwinExperiment};

/// Registered metric families. `explicit` accepts any closed-form family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Flat,
    /// `g = (1 + s^2 gamma) I` with a Gaussian `gamma`.
    Gamma {
        amplitude: f64,
        width: f64,
    },
    /// `g = (1 + s^3 beta) I` with a flat-topped `beta`.
    Cubic {
        amplitude: f64,
        width: f64,
    },
    /// Balanced trace-free family with flat-topped coefficients.
    TraceFree {
        amplitude: f64,
    },
    /// `g = (1 + amplitude * bump) I`.
    Conformal {
        amplitude: f64,
        width: f64,
    },
    /// Trace-free base with a cubic isotropic layer.
    Layered,
    Explicit {
        family: Family,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Family {
        let center = [0.5, 0.5];
        match self {
            FamilySpec::Flat => Family::Flat,
            FamilySpec::Gamma { amplitude, width } => Family::gamma(Profile::Gaussian {
                center,
                width: *width,
                amplitude: *amplitude,
            }),
            FamilySpec::Cubic { amplitude, width } => {
                Family::cubic(scenarios::flat_top(*amplitude, *width))
            }
            FamilySpec::TraceFree { amplitude } => scenarios::trace_free_family(*amplitude),
            FamilySpec::Conformal { amplitude, width } => Family::conformal(Profile::Sum {
                terms: vec![
                    Profile::constant(1.0),
                    scenarios::flat_top(*amplitude, *width),
                ],
            }),
            FamilySpec::Layered => scenarios::curved_family(),
            FamilySpec::Explicit { family } => family.clone(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FamilySpec::Flat => "flat",
            FamilySpec::Gamma { .. } => "gamma",
            FamilySpec::Cubic { .. } => "cubic",
            FamilySpec::TraceFree { .. } => "trace_free",
            FamilySpec::Conformal { .. } => "conformal",
            FamilySpec::Layered => "layered",
            FamilySpec::Explicit { family } => family.name(),
        }
    }
}

/// Boundary data `f(x, y)` restricted to the boundary nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Recipe {
    /// `slope . (x, y) + offset`.
    Affine { slope: [f64; 2], offset: f64 },
    /// `amplitude * sin(frequency . (x, y))`.
    Sine { amplitude: f64, frequency: [f64; 2] },
    /// `amplitude * cos(frequency . (x, y))`.
    Cosine { amplitude: f64, frequency: [f64; 2] },
    /// `xx x^2 + xy x y + yy y^2`.
    Quadratic { xx: f64, xy: f64, yy: f64 },
    /// `amplitude * Re(exp(i phase + wavenumber z))` with complex `wavenumber` and `z = x + i y`; harmonic, so
    /// the data meet every corner compatibility condition of the Laplacian.
    Holomorphic {
        amplitude: f64,
        wavenumber: [f64; 2],
        phase: f64,
    },
}

impl Recipe {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            Recipe::Affine { slope, offset } => slope[0] * x + slope[1] * y + offset,
            Recipe::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency[0] * x + frequency[1] * y).sin(),
            Recipe::Cosine {
                amplitude,
                frequency,
            } => amplitude * (frequency[0] * x + frequency[1] * y).cos(),
            Recipe::Quadratic { xx, xy, yy } => xx * x * x + xy * x * y + yy * y * y,
            Recipe::Holomorphic {
                amplitude,
                wavenumber,
                phase,
            } => {
                let z = num_complex::Complex64::new(x, y);
                let k = num_complex::Complex64::new(wavenumber[0], wavenumber[1]);
                amplitude * (k * z + num_complex::Complex64::new(0.0, phase)).exp().re
            }
        }
    }

    pub fn field(&self, domain: Domain) -> BoundaryField<f64> {
        BoundaryField::from_fn(domain, |x, y| self.value(x, y))
    }

    fn is_finite(&self) -> bool {
        let values = match *self {
            Recipe::Affine { slope, offset } => vec![slope[0], slope[1], offset],
            Recipe::Sine {
                amplitude,
                frequency,
            }
            | Recipe::Cosine {
                amplitude,
                frequency,
            } => vec![amplitude, frequency[0], frequency[1]],
            Recipe::Quadratic { xx, xy, yy } => vec![xx, xy, yy],
            Recipe::Holomorphic {
                amplitude,
                wavenumber,
                phase,
            } => vec![amplitude, wavenumber[0], wavenumber[1], phase],
        };
        values.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardSection {
    /// Grids of the manufactured-solution convergence study on `[-1, 1]^2`.
    pub scherk_resolutions: Vec<usize>,
    /// Curvature parameter of the Scherk surface `ln(cos(kx) / cos(ky)) / k`.
    pub scherk_kappa: f64,
    /// Grid of the zero and affine checks on `[0, 1]^2`.
    pub trivial_nodes: usize,
    /// Family and grids of the area/DN checks on `[0, 1]^2`.
    pub family: FamilySpec,
    pub first_variation_nodes: usize,
    /// Random `(f, w)` pairs for the first-variation check.
    pub first_variation_pairs: usize,
    pub dn_nodes: usize,
    pub newton: NewtonOptions,
}

impl Default for ForwardSection {
    fn default() -> Self {
        Self {
            scherk_resolutions: vec![65, 129, 257],
            scherk_kappa: 0.7,
            trivial_nodes: 65,
            family: FamilySpec::Explicit {
                family: Family::Scaled {
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
                },
            },
            first_variation_nodes: 33,
            first_variation_pairs: 10,
            dn_nodes: 65,
            newton: NewtonOptions {
                delta_admissible: 2.0,
                ..NewtonOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearizeSection {
    pub nodes: usize,
    /// Families checked against finite differences of the solver.
    pub families: Vec<FamilySpec>,
    /// Three boundary data; derivatives are taken in the directions `(1)`, `(0, 2)` and `(0, 1, 2)`.
    pub data: Vec<Recipe>,
}

impl Default for LinearizeSection {
    fn default() -> Self {
        Self {
            nodes: 129,
            families: vec![
                FamilySpec::Gamma {
                    amplitude: 1.5,
                    width: 0.3,
                },
                FamilySpec::Layered,
            ],
            data: vec![
                Recipe::Affine {
                    slope: [0.5, -0.5],
                    offset: 0.0,
                },
                Recipe::Sine {
                    amplitude: 0.2,
                    frequency: [2.0, 1.0],
                },
                Recipe::Quadratic {
                    xx: 0.25,
                    xy: 0.5,
                    yy: 0.0,
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesSection {
    /// Coarse and fine grid; the residual order is measured between consecutive entries.
    pub resolutions: Vec<usize>,
    pub families: Vec<FamilySpec>,
    /// Four boundary data; the second identity uses `(0, 1)` paired with `2`, the third `(0, 1, 2)` with `3`.
    pub data: Vec<Recipe>,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        Self {
            resolutions: vec![65, 129],
            families: vec![
                FamilySpec::Gamma {
                    amplitude: 1.5,
                    width: 0.3,
                },
                FamilySpec::Layered,
            ],
            data: vec![
                Recipe::Affine {
                    slope: [0.5, -0.5],
                    offset: 0.2,
                },
                Recipe::Holomorphic {
                    amplitude: 1.0,
                    wavenumber: [1.0, 2.0],
                    phase: 0.3,
                },
                Recipe::Holomorphic {
                    amplitude: 0.8,
                    wavenumber: [-1.5, 0.5],
                    phase: 1.1,
                },
                Recipe::Holomorphic {
                    amplitude: 1.0,
                    wavenumber: [0.5, -2.0],
                    phase: -0.7,
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgoSection {
    pub sweep: CgoConfig,
    /// `h`, series length and grid of the residual check.
    pub residual_h: f64,
    pub residual_terms: usize,
    pub residual_nodes: usize,
}

impl Default for CgoSection {
    fn default() -> Self {
        Self {
            sweep: CgoConfig::default(),
            residual_h: 1.0 / 32.0,
            residual_terms: 6,
            residual_nodes: 257,
        }
    }
}

/// Registered twin experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwinName {
    /// One family against a tabulated copy of itself.
    Matched,
    /// Trace-free second fundamental form against the flat family.
    TraceFree,
    /// Flat family against `(1 + amplitude * bump) I`.
    Conformal,
    /// Cubic families whose `h2` differ by 20%.
    H2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverSection {
    pub twins: Vec<TwinName>,
    pub mode: OracleMode,
    pub probes: Vec<[f64; 2]>,
    pub hs: Vec<f64>,
    pub third_order_hs: Vec<f64>,
    pub orientations: Vec<f64>,
    pub conformal_amplitude: f64,
    pub max_nodes: usize,
    /// Random symmetric matrices of the trace-algebra check.
    pub trace_samples: usize,
}

impl Default for RecoverSection {
    fn default() -> Self {
        let reference = scenarios::conformal_twin(OracleMode::DnOnly, 0.3);
        Self {
            twins: vec![
                TwinName::Matched,
                TwinName::TraceFree,
                TwinName::Conformal,
                TwinName::H2,
            ],
            mode: OracleMode::DnOnly,
            probes: reference.probes,
            hs: reference.hs,
            third_order_hs: reference.third_order_hs,
            orientations: reference.orientations,
            conformal_amplitude: 0.3,
            max_nodes: reference.max_nodes,
            trace_samples: 1000,
        }
    }
}

impl RecoverSection {
    fn configure(&self, twin: TwinExperiment) -> TwinExperiment {
        let mut twin = twin.with_hs(self.hs.clone(), self.third_order_hs.clone());
        twin.orientations = self.orientations.clone();
        twin.max_nodes = self.max_nodes;
        twin
    }

    pub fn twin(&self, name: TwinName) -> TwinExperiment {
        let twin = match name {
            TwinName::Matched => scenarios::matched_twins(self.mode),
            TwinName::TraceFree => scenarios::trace_free_twin(self.mode),
            TwinName::Conformal => scenarios::conformal_twin(self.mode, self.conformal_amplitude),
            TwinName::H2 => scenarios::h2_twin(self.mode),
        };
        self.configure(twin.with_probes(self.probes.clone()))
    }

    /// The reference run of the conformal calibration, always at the centre of its bump.
    pub fn calibration_twin(&self) -> TwinExperiment {
        self.configure(scenarios::calibration_twin())
    }
}

/// Everything a run needs; every section has defaults, so an empty file is valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub forward: ForwardSection,
    pub linearize: LinearizeSection,
    pub identities: IdentitiesSection,
    pub cgo: CgoSection,
    pub recover: RecoverSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20240917,
            forward: ForwardSection::default(),
            linearize: LinearizeSection::default(),
            identities: IdentitiesSection::default(),
            cgo: CgoSection::default(),
            recover: RecoverSection::default(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Error {
    Error::ConfigInvalid(message.into())
}

fn check_grid(what: &str, nodes: usize) -> Result<()> {
    if (5..=4097).contains(&nodes) {
        Ok(())
    } else {
        Err(invalid(format!(
            "{what}: {nodes} nodes is outside 5..=4097"
        )))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, so equivalent files share a hash.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.forward;
        if f.scherk_resolutions.len() < 2 {
            return Err(invalid(
                "forward.scherk_resolutions needs at least two grids",
            ));
        }
        for &n in f.scherk_resolutions.iter().chain([
            &f.trivial_nodes,
            &f.first_variation_nodes,
            &f.dn_nodes,
        ]) {
            check_grid("forward", n)?;
        }
        if !(f.scherk_kappa > 0.0 && f.scherk_kappa < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("forward.scherk_kappa must lie in (0, pi/2)"));
        }
        if !(f.newton.tol > 0.0 && f.newton.delta_admissible > 0.0) || f.newton.max_iter == 0 {
            return Err(invalid("forward.newton options must be positive"));
        }

        let l = &self.linearize;
        check_grid("linearize", l.nodes)?;
        if l.families.is_empty() || l.data.len() != 3 {
            return Err(invalid(
                "linearize needs at least one family and exactly three data",
            ));
        }

        let i = &self.identities;
        if i.resolutions.len() < 2 || i.families.is_empty() || i.data.len() != 4 {
            return Err(invalid(
                "identities needs at least two grids, one family and exactly four data",
            ));
        }
        for &n in &i.resolutions {
            check_grid("identities", n)?;
        }
        if !l.data.iter().chain(&i.data).all(Recipe::is_finite) {
            return Err(invalid("boundary data recipes must have finite parameters"));
        }

        let c = &self.cgo;
        c.sweep.validate()?;
        let smallest = |hs: &[f64]| hs.iter().copied().fold(f64::INFINITY, f64::min);
        let phase = CgoPhase::quadratic();
        let guard = |phase: &CgoPhase, h: f64| {
            c.sweep
                .patch
                .domain_for(phase, h)
                .map_err(|e| invalid(format!("cgo grid cannot resolve h = {h}: {e}")))
        };
        guard(&phase, smallest(&c.sweep.hs))?;
        guard(
            &phase.scaled(num_complex::Complex64::new(2.0, 0.0)),
            smallest(&c.sweep.second_order_hs),
        )?;
        if !(c.residual_h > 0.0) || c.residual_terms == 0 {
            return Err(invalid(
                "cgo.residual_h and cgo.residual_terms must be positive",
            ));
        }
        check_grid("cgo.residual_nodes", c.residual_nodes)?;

        let r = &self.recover;
        if r.trace_samples == 0 {
            return Err(invalid("recover.trace_samples must be positive"));
        }
        if !(r.conformal_amplitude > -1.0 && r.conformal_amplitude.is_finite()) {
            return Err(invalid("recover.conformal_amplitude must exceed -1"));
        }
        for name in &r.twins {
            let twin = r.twin(*name);
            twin.validate()?;
            twin.domain_for(smallest(&twin.hs), 2.0)
                .and_then(|_| twin.domain_for(smallest(&twin.third_order_hs), 1.0))
                .map_err(|e| invalid(format!("recover grid too coarse for {name:?}: {e}")))?;
        }
        if !r.twins.is_empty() {
            r.calibration_twin().validate()?;
        }
        Ok(())
    }
}
