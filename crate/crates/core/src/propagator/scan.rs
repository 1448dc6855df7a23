//! Independent single-mode runs over a frequency grid.

use rayon::prelude::*;

use super::{propagate_displaced_with, ModeSet, ModelA, RunReport, Settings};
use crate::drive::{coupling_for, CouplingRule, DriveConfig};
use crate::error::Result;
use crate::hilbert::QuantumState;
use crate::observables::{ModeMoments, NoiseEllipse, Probe};

/// Statistics of one mode at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeRecord {
    pub t: f64,
    pub moments: ModeMoments,
    pub ellipse: NoiseEllipse,
    /// `None` where `⟨N⟩ ≤ ε_N`.
    pub q: Option<f64>,
    pub slope: Option<f64>,
    pub sigma_z: f64,
}

impl ModeRecord {
    pub fn new(t: f64, moments: ModeMoments, coupling: f64, sigma_z: f64) -> Self {
        Self {
            t,
            moments,
            ellipse: moments.ellipse(),
            q: moments.is_excited().then(|| moments.mandel_q()),
            slope: moments.antibunching_slope(coupling).ok(),
            sigma_z,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModeSeries {
    pub omega: f64,
    pub coupling: f64,
    pub records: Vec<ModeRecord>,
    pub report: RunReport,
}

impl ModeSeries {
    /// Single-mode run from `|g⟩ ⊗ |0⟩`.
    pub fn run(model: &ModelA, grid: &[f64], settings: &Settings) -> Result<Self> {
        let mode = model.modes.modes()[0];
        let init = QuantumState::ground_vacuum(&[mode.n_max])?;
        let mut probe: Option<Probe> = None;
        let mut records = Vec::with_capacity(grid.len());
        let report = propagate_displaced_with(&init, model, grid, settings, |t, s| {
            if probe.is_none() {
                probe = Some(Probe::new(s)?);
            }
            let r = probe.as_ref().unwrap().read(s)?;
            records.push(ModeRecord::new(t, r.modes[0], mode.coupling, r.sigma_z));
            Ok(())
        })?;
        Ok(Self { omega: mode.omega, coupling: mode.coupling, records, report })
    }
}

/// Columns over `(t, ω)`; column `k` is the standalone run at `omegas[k]`.
#[derive(Clone, Debug)]
pub struct Spectrogram {
    pub times: Vec<f64>,
    pub columns: Vec<ModeSeries>,
}

pub fn scan_modes(
    omegas: &[f64],
    omega0: f64,
    drive: &DriveConfig,
    rule: &CouplingRule,
    n_max: usize,
    grid: &[f64],
    settings: &Settings,
) -> Result<Spectrogram> {
    let columns = omegas
        .par_iter()
        .map(|&omega| {
            let modes = ModeSet::single(omega, coupling_for(omega, rule)?, n_max)?;
            let model = ModelA::new(omega0, *drive, modes)?;
            ModeSeries::run(&model, grid, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrogram { times: grid.to_vec(), columns })
}
