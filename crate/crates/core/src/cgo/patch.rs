use serde::{Deserialize, Serialize};

use super::phase::CgoPhase;
use crate::error::{Error, Result};
use crate::geometry::{Domain, RealField};

/// Oscillation guard: grid spacing must not exceed `h / (GUARD_FACTOR * max |grad psi|)`.
pub const GUARD_FACTOR: f64 = 10.0;

/// Square CGO patch `[-half_width, half_width]^2` centred at the critical point.
///
/// The extension cutoff equals one for `|z| <= plateau` and vanishes for `|z| >= support`; the support
/// stays inside the 10% margin that the Cauchy transform requires to be empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub half_width: f64,
    pub plateau: f64,
    pub support: f64,
    /// Coarsest grid used regardless of `h`.
    pub min_nodes: usize,
    /// Finest grid allowed; finer requirements raise `UnderResolved`.
    pub max_nodes: usize,
}

impl Default for Patch {
    fn default() -> Self {
        Self {
            half_width: 0.5,
            plateau: 0.32,
            support: 0.4,
            min_nodes: 129,
            max_nodes: 2049,
        }
    }
}

/// `C^infinity` step: 0 for `t <= 0`, 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    let bump = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (bump(t), bump(1.0 - t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl Patch {
    pub fn validate(&self) -> Result<()> {
        let ok = self.half_width > 0.0
            && 0.0 < self.plateau
            && self.plateau < self.support
            && self.support <= (1.0 - 2.0 * super::MARGIN_FRACTION) * self.half_width
            && self.min_nodes >= 5
            && self.min_nodes <= self.max_nodes;
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "inconsistent CGO patch {self:?}"
            )))
        }
    }

    /// Radial extension cutoff.
    pub fn cutoff(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        1.0 - smooth_step((r - self.plateau) / (self.support - self.plateau))
    }

    pub fn cutoff_field(&self, domain: &Domain) -> RealField {
        RealField::from_fn(*domain, |x, y| self.cutoff(x, y))
    }

    /// Indicator of the plateau, where the constructed solutions are exact.
    pub fn in_plateau(&self, x: f64, y: f64) -> bool {
        x.hypot(y) <= self.plateau
    }

    pub fn domain(&self, nodes: usize) -> Result<Domain> {
        Domain::square(-self.half_width, self.half_width, nodes)
    }

    /// Largest admissible spacing for `phase` at semiclassical parameter `h`.
    pub fn required_spacing(&self, phase: &CgoPhase, h: f64) -> f64 {
        h / (GUARD_FACTOR * phase.max_gradient(self.support))
    }

    /// Grid slaved to `h` by the oscillation guard, clamped below by `min_nodes`.
    pub fn domain_for(&self, phase: &CgoPhase, h: f64) -> Result<Domain> {
        self.validate()?;
        if !(h > 0.0) {
            return Err(Error::ConfigInvalid(format!("h must be positive, got {h}")));
        }
        let required = self.required_spacing(phase, h);
        let cells = if required.is_finite() {
            (self.half_width / required).ceil() as usize
        } else {
            0
        };
        let nodes = (2 * cells + 1).max(self.min_nodes | 1);
        if nodes > self.max_nodes {
            return Err(Error::UnderResolved {
                spacing: self.half_width / ((self.max_nodes - 1) / 2) as f64,
                required,
            });
        }
        self.domain(nodes)
    }

    /// `UnderResolved` unless `domain` meets the guard for `phase` at `h`.
    pub fn check_resolution(&self, domain: &Domain, phase: &CgoPhase, h: f64) -> Result<()> {
        let required = self.required_spacing(phase, h);
        let spacing = domain.dx().max(domain.dy());
        if spacing > required * (1.0 + 1e-12) {
            Err(Error::UnderResolved { spacing, required })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_is_one_on_plateau_and_zero_past_support() {
        let p = Patch::default();
        assert_eq!(p.cutoff(0.1, 0.2), 1.0);
        assert_eq!(p.cutoff(0.0, p.support), 0.0);
        let mid = p.cutoff(0.5 * (p.plateau + p.support), 0.0);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_follows_the_guard() {
        let p = Patch::default();
        let phase = CgoPhase::quadratic();
        let d = p.domain_for(&phase, 1.0 / 64.0).unwrap();
        assert_eq!(d.nx, 257);
        p.check_resolution(&d, &phase, 1.0 / 64.0).unwrap();
        assert!(matches!(
            p.check_resolution(&d, &phase, 1.0 / 128.0),
            Err(Error::UnderResolved { .. })
        ));
        assert!(matches!(
            p.domain_for(&phase, 1.0 / 1024.0),
            Err(Error::UnderResolved { .. })
        ));
    }
}
