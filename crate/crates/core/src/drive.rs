//! Classical drive and mode couplings.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// `A sin²(ω_e t) sin(ω_f t + φ)` on `[0, π/ω_e]`
    Sin2Pulse,
    /// `A sin(ω_f t + φ)` for `t ≥ 0`
    Monochromatic,
}

/// Classical Rabi frequency `Ω(t)` of the drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub omega_e: f64,
    pub omega_f: f64,
    pub phi: f64,
    pub shape: PulseShape,
}

impl Default for DriveConfig {
    /// Ten-cycle resonant pulse with a plateau beyond the 18th harmonic.
    fn default() -> Self {
        Self { amplitude: 12.0, omega_e: 0.05, omega_f: 1.0, phi: PI / 2.0, shape: PulseShape::Sin2Pulse }
    }
}

impl DriveConfig {
    pub fn monochromatic(amplitude: f64, omega: f64, phi: f64) -> Self {
        Self { amplitude, omega_e: 0.0, omega_f: omega, phi, shape: PulseShape::Monochromatic }
    }

    pub fn off() -> Self {
        Self { amplitude: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(field, msg));
        if !self.amplitude.is_finite() {
            return bad("drive.A", "must be finite");
        }
        if !self.phi.is_finite() {
            return bad("drive.phi", "must be finite");
        }
        if !(self.omega_f.is_finite() && self.omega_f > 0.0) {
            return bad("drive.omega_f", "must be positive");
        }
        if self.shape == PulseShape::Sin2Pulse {
            if !(self.omega_e.is_finite() && self.omega_e > 0.0) {
                return bad("drive.omega_e", "must be positive");
            }
            if self.omega_e >= self.omega_f {
                return bad("drive.omega_e", "must be smaller than drive.omega_f");
            }
        }
        Ok(())
    }

    /// End of the pulse support (`None` for a monochromatic drive).
    pub fn support_end(&self) -> Option<f64> {
        match self.shape {
            PulseShape::Sin2Pulse => Some(PI / self.omega_e),
            PulseShape::Monochromatic => None,
        }
    }

    /// Duration of one carrier cycle.
    pub fn cycle(&self) -> f64 {
        2.0 * PI / self.omega_f
    }

    /// `Ω(t)`; exactly zero outside the support.
    pub fn rabi(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Sin2Pulse => {
                let end = PI / self.omega_e;
                if t <= 0.0 || t >= end {
                    return 0.0;
                }
                let s = (self.omega_e * t).sin();
                self.amplitude * s * s * (self.omega_f * t + self.phi).sin()
            }
            PulseShape::Monochromatic => {
                if t < 0.0 {
                    0.0
                } else {
                    self.amplitude * (self.omega_f * t + self.phi).sin()
                }
            }
        }
    }

    /// Pulse area `Φ(t) = ∫_0^t Ω(t') dt'` in closed form.
    pub fn area(&self, t: f64) -> f64 {
        let phi = self.phi;
        // ∫_0^t sin(w t' + φ) dt'
        let s = |w: f64, t: f64| {
            if w == 0.0 {
                t * phi.sin()
            } else {
                (phi.cos() - (w * t + phi).cos()) / w
            }
        };
        match self.shape {
            PulseShape::Sin2Pulse => {
                let tc = t.clamp(0.0, PI / self.omega_e);
                let (wf, we) = (self.omega_f, self.omega_e);
                let a = self.amplitude;
                0.5 * a * s(wf, tc) - 0.25 * a * (s(wf + 2.0 * we, tc) + s(wf - 2.0 * we, tc))
            }
            PulseShape::Monochromatic => self.amplitude * s(self.omega_f, t.max(0.0)),
        }
    }

    /// Time-mirrored pulse `Ω'(t) = Ω(T − t)`, `T` the support end.
    pub fn mirrored(&self) -> Option<DriveConfig> {
        let end = self.support_end()?;
        Some(DriveConfig { phi: PI - self.phi - self.omega_f * end, ..*self })
    }
}

/// Mode coupling `Ω_n` as a function of the mode frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    /// `Ω = c √ω`
    Sqrt { c: f64 },
    /// Explicit `(ω, Ω)` pairs.
    Table(Vec<(f64, f64)>),
}

impl CouplingRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            CouplingRule::Sqrt { c } if !(c.is_finite() && *c >= 0.0) => {
                Err(Error::config("coupling.c", "must be finite and non-negative"))
            }
            CouplingRule::Table(t) if t.iter().any(|(w, o)| !(*w > 0.0 && *o >= 0.0)) => {
                Err(Error::config("coupling.table", "entries need omega > 0 and Omega >= 0"))
            }
            _ => Ok(()),
        }
    }
}

pub fn coupling_for(omega: f64, rule: &CouplingRule) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("mode frequency must be positive, got {omega}")));
    }
    match rule {
        CouplingRule::Sqrt { c } => Ok(c * omega.sqrt()),
        CouplingRule::Table(t) => t
            .iter()
            .find(|(w, _)| (w - omega).abs() <= 1e-9 * omega)
            .map(|(_, o)| *o)
            .ok_or_else(|| Error::InvalidParameter(format!("no coupling listed for omega = {omega}"))),
    }
}
