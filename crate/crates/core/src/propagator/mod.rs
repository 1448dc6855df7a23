//! Model A: classically driven emitter with quantized harmonic modes.
//!
//! `H = ω₀σ_z/2 + Ω(t)σ_x/2 + Σ_j ω_j N_j + Σ_j Ω_j σ_x (a_j + a_j†)/2`.

mod displaced;
mod fock;
mod residuals;
mod scan;

pub use displaced::{propagate_displaced, propagate_displaced_with, propagate_two_mode_joint};
pub use fock::{propagate_fock_direct, propagate_fock_direct_with};
pub use residuals::{appb_equations, appb_residuals, EquationResidual, ResidualReport, ResidualStream};
pub use scan::{scan_modes, ModeRecord, ModeSeries, Spectrogram};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::drive::{coupling_for, CouplingRule, DriveConfig};
use crate::error::{Error, Result};
use crate::hilbert::QuantumState;

/// One quantized mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub coupling: f64,
    pub n_max: usize,
}

impl Mode {
    /// `γ = −Ω/(2ω)`
    pub fn gamma(&self) -> f64 {
        -self.coupling / (2.0 * self.omega)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        for (k, m) in modes.iter().enumerate() {
            if !(m.omega.is_finite() && m.omega > 0.0) {
                return Err(Error::InvalidParameter(format!("mode {k}: frequency must be positive")));
            }
            if !(m.coupling.is_finite() && m.coupling >= 0.0) {
                return Err(Error::InvalidParameter(format!("mode {k}: coupling must be non-negative")));
            }
            if m.n_max < 1 {
                return Err(Error::InvalidParameter(format!("mode {k}: n_max must be at least 1")));
            }
        }
        Ok(Self { modes })
    }

    pub fn from_rule(omegas: &[f64], rule: &CouplingRule, n_max: usize) -> Result<Self> {
        let modes = omegas
            .iter()
            .map(|&omega| Ok(Mode { omega, coupling: coupling_for(omega, rule)?, n_max }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(modes)
    }

    pub fn single(omega: f64, coupling: f64, n_max: usize) -> Result<Self> {
        Self::new(vec![Mode { omega, coupling, n_max }])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_omega(&self) -> f64 {
        self.modes.iter().map(|m| m.omega).fold(0.0, f64::max)
    }

    pub fn n_max(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.n_max).collect()
    }
}

/// Atom, drive and modes of one Model-A run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelA {
    pub omega0: f64,
    pub drive: DriveConfig,
    pub modes: ModeSet,
}

impl ModelA {
    pub fn new(omega0: f64, drive: DriveConfig, modes: ModeSet) -> Result<Self> {
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(Error::InvalidParameter("omega0 must be finite and non-negative".into()));
        }
        drive.validate()?;
        Ok(Self { omega0, drive, modes })
    }

    /// Largest rate in the problem: ω₀, the carrier, the peak Rabi frequency
    /// and the mode frequencies.
    pub fn omega_max(&self) -> f64 {
        self.omega0
            .max(self.drive.omega_f)
            .max(self.drive.amplitude.abs())
            .max(self.modes.max_omega())
    }
}

/// Fixed-step integrator settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Largest RK4 step; default `(2π/ω_max)/200`.
    pub max_step: Option<f64>,
    /// Abort when `|‖Ψ‖ − ‖Ψ₀‖|` exceeds this.
    pub norm_abort: f64,
    /// Warn when the weight on a mode's highest Fock level exceeds this.
    pub truncation_warn: f64,
    /// Largest Hilbert-space dimension of direct Fock propagation.
    pub dim_cap: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self { max_step: None, norm_abort: 1e-6, truncation_warn: 1e-6, dim_cap: 200_000 }
    }
}

impl Settings {
    pub fn step_for(&self, model: &ModelA) -> f64 {
        self.max_step.unwrap_or(2.0 * PI / model.omega_max() / 200.0)
    }
}

/// The highest retained Fock level of a mode carried noticeable weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationWarning {
    pub mode: usize,
    /// First sample time at which the threshold was crossed.
    pub t: f64,
    /// Largest weight seen over the run.
    pub max_weight: f64,
}

/// Diagnostics of a propagation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub step: f64,
    pub steps: usize,
    pub max_norm_drift: f64,
    pub warnings: Vec<TruncationWarning>,
}

impl RunReport {
    fn note_truncation(&mut self, mode: usize, t: f64, weight: f64, threshold: f64) {
        if weight <= threshold {
            return;
        }
        match self.warnings.iter_mut().find(|w| w.mode == mode) {
            Some(w) => w.max_weight = w.max_weight.max(weight),
            None => self.warnings.push(TruncationWarning { mode, t, max_weight: weight }),
        }
    }
}

/// Sampled states of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub model: ModelA,
    pub settings: Settings,
    pub report: RunReport,
}

/// `n + 1` equally spaced times from `t0` to `t1`.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let h = (t1 - t0) / n as f64;
    (0..=n).map(|k| if k == n { t1 } else { t0 + k as f64 * h }).collect()
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite time in grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Weight on `n_j = n_max` for each mode (atom and other modes traced out).
pub(crate) fn top_level_weights(amps: &[C64], dims: &[usize]) -> Vec<f64> {
    let strides = crate::hilbert::strides(dims);
    let block: usize = dims.iter().product();
    let mut out = vec![0.0; dims.len()];
    for (k, c) in amps.iter().enumerate() {
        let idx = k % block;
        let w = c.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for j in 0..dims.len() {
            if (idx / strides[j]) % dims[j] == dims[j] - 1 {
                out[j] += w;
            }
        }
    }
    out
}

use num_complex::Complex64 as C64;

/// Apply a per-mode matrix (row-major `d×d`) along one axis of a block vector.
pub(crate) fn apply_axis(src: &[C64], dst: &mut [C64], dims: &[usize], axis: usize, mat: &[f64]) {
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    for o in 0..outer {
        let base = o * d * inner;
        for r in 0..d {
            let row = &mat[r * d..(r + 1) * d];
            let out = &mut dst[base + r * inner..base + (r + 1) * inner];
            out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for (c, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let inp = &src[base + c * inner..base + (c + 1) * inner];
                for (x, y) in out.iter_mut().zip(inp) {
                    *x += y * m;
                }
            }
        }
    }
}
