//! Propagation on the σ_x-branch-displaced Fock basis.
//!
//! In branch `s = ±` the mode Hamiltonian `ω(N + sΩ_j(a+a†)/(2ω))` is diagonal
//! on `|n, sγ⟩`, and `Ω(t)σ_x/2` only adds the phase `sΦ(t)/2`. What is left
//! in the interaction picture is the branch flip by `ω₀σ_z/2`:
//!
//! `i ḃ^s_n = (ω₀/2) e^{isΦ(t)} Σ_m Π_j ⟨n_j|D(−2sγ_j)|m_j⟩ e^{−iω_j(m_j−n_j)t} b^{−s}_m`,
//!
//! with `Φ(t) = ∫_0^t Ω`. Schrödinger amplitudes are
//! `ψ^s_n = b^s_n e^{−iΣ_j ω_j(n_j − γ_j²)t} e^{−isΦ(t)/2}`.

use num_complex::Complex64 as C64;

use super::{apply_axis, check_grid, top_level_weights, ModelA, RunReport, Settings, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{
    convert_basis, displacement_matrix_element, AtomLabel, BasisDescriptor, FockBasis, QuantumState,
};
use crate::integrate::{integrate_interval, Rk4};

pub(crate) fn displaced_basis(model: &ModelA) -> Result<BasisDescriptor> {
    let modes = model
        .modes
        .modes()
        .iter()
        .map(|m| FockBasis::displaced(m.n_max, C64::from(m.gamma())))
        .collect::<Result<Vec<_>>>()?;
    BasisDescriptor::new(AtomLabel::SigmaX, modes)
}

struct Rhs {
    omega0: f64,
    drive: crate::drive::DriveConfig,
    omegas: Vec<f64>,
    dims: Vec<usize>,
    /// `⟨n|D(−2γ)|m⟩` (feeds the + branch) and `⟨n|D(2γ)|m⟩` (feeds −), row-major.
    d_plus: Vec<Vec<f64>>,
    d_minus: Vec<Vec<f64>>,
    block: usize,
    phase: Vec<C64>,
    buf_a: Vec<C64>,
    buf_b: Vec<C64>,
}

impl Rhs {
    fn new(model: &ModelA) -> Self {
        let modes = model.modes.modes();
        let dims: Vec<usize> = modes.iter().map(|m| m.n_max + 1).collect();
        let table = |m: &super::Mode, sign: f64| {
            let d = m.n_max + 1;
            let g = C64::from(sign * 2.0 * m.gamma());
            let mut v = vec![0.0; d * d];
            for r in 0..d {
                for c in 0..d {
                    // real for real γ
                    v[r * d + c] = displacement_matrix_element(r, c, g).re;
                }
            }
            v
        };
        let block = dims.iter().product();
        Self {
            omega0: model.omega0,
            drive: model.drive,
            omegas: modes.iter().map(|m| m.omega).collect(),
            d_plus: modes.iter().map(|m| table(m, -1.0)).collect(),
            d_minus: modes.iter().map(|m| table(m, 1.0)).collect(),
            dims,
            block,
            phase: vec![C64::new(1.0, 0.0); block],
            buf_a: vec![C64::new(0.0, 0.0); block],
            buf_b: vec![C64::new(0.0, 0.0); block],
        }
    }

    /// `phase[idx] = e^{−iΣ_j ω_j n_j t}`
    fn fill_phase(&mut self, t: f64) {
        self.phase.truncate(1);
        self.phase[0] = C64::new(1.0, 0.0);
        for (j, &d) in self.dims.iter().enumerate() {
            let w = self.omegas[j];
            let f: Vec<C64> = (0..d).map(|n| C64::from_polar(1.0, -w * n as f64 * t)).collect();
            let prev = std::mem::take(&mut self.phase);
            self.phase = prev.iter().flat_map(|p| f.iter().map(move |q| p * q)).collect();
        }
    }

    fn apply_product(&mut self, plus: bool) {
        for j in 0..self.dims.len() {
            let mat = if plus { &self.d_plus[j] } else { &self.d_minus[j] };
            apply_axis(&self.buf_a, &mut self.buf_b, &self.dims, j, mat);
            std::mem::swap(&mut self.buf_a, &mut self.buf_b);
        }
    }

    fn eval(&mut self, t: f64, b: &[C64], db: &mut [C64]) {
        self.fill_phase(t);
        let n = self.block;
        let flip = self.drive.area(t);
        let pref = C64::new(0.0, -0.5 * self.omega0);
        for (src, dst, plus) in [(0usize, 1usize, true), (1, 0, false)] {
            for k in 0..n {
                self.buf_a[k] = self.phase[k] * b[src * n + k];
            }
            self.apply_product(plus);
            let s = if plus { 1.0 } else { -1.0 };
            let c = pref * C64::from_polar(1.0, s * flip);
            for k in 0..n {
                db[dst * n + k] = c * self.phase[k].conj() * self.buf_a[k];
            }
        }
    }

    /// Factor relating `ψ` to `b`: `ψ = b · factor(s, idx)`.
    fn frame(&mut self, t: f64, global: f64) -> [C64; 2] {
        self.fill_phase(t);
        let half = 0.5 * self.drive.area(t);
        let g = C64::from_polar(1.0, global * t);
        [g * C64::from_polar(1.0, half), g * C64::from_polar(1.0, -half)]
    }
}

/// Propagate on the displaced basis, handing every grid sample to `observer`.
pub fn propagate_displaced_with<F>(
    init: &QuantumState,
    model: &ModelA,
    grid: &[f64],
    settings: &Settings,
    mut observer: F,
) -> Result<RunReport>
where
    F: FnMut(f64, &QuantumState) -> Result<()>,
{
    check_grid(grid)?;
    if init.n_modes() != model.modes.len() {
        return Err(Error::Dimension(format!(
            "initial state has {} mode(s), model has {}",
            init.n_modes(),
            model.modes.len()
        )));
    }
    let basis = displaced_basis(model)?;
    let mut state = convert_basis(init, &basis)?;
    let global: f64 = model.modes.modes().iter().map(|m| m.omega * m.gamma() * m.gamma()).sum();
    let mut rhs = Rhs::new(model);
    let n = rhs.block;
    let step = settings.step_for(model);
    let mut report = RunReport { step, ..Default::default() };

    let t0 = grid[0];
    let f = rhs.frame(t0, global);
    let mut b: Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, c)| c / (f[k / n] * rhs.phase[k % n]))
        .collect();
    let norm0 = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

    let mut rk = Rk4::new(b.len());
    let dims = rhs.dims.clone();
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            let mut f = |t: f64, y: &[C64], dy: &mut [C64]| rhs.eval(t, y, dy);
            integrate_interval(&mut rk, &mut f, grid[k - 1], t, step, &mut b);
            report.steps += ((t - grid[k - 1]) / step).ceil().max(1.0) as usize;
        }
        let norm = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - norm0).abs();
        report.max_norm_drift = report.max_norm_drift.max(drift);
        if drift > settings.norm_abort {
            return Err(Error::NormDrift { drift, t, limit: settings.norm_abort });
        }
        let f = rhs.frame(t, global);
        for (i, (dst, src)) in state.amplitudes_mut().iter_mut().zip(&b).enumerate() {
            *dst = src * f[i / n] * rhs.phase[i % n];
        }
        for (j, w) in top_level_weights(state.amplitudes(), &dims).into_iter().enumerate() {
            report.note_truncation(j, t, w, settings.truncation_warn);
        }
        observer(t, &state)?;
    }
    Ok(report)
}

/// Propagate on the displaced basis and keep every sample.
pub fn propagate_displaced(
    init: &QuantumState,
    model: &ModelA,
    grid: &[f64],
    settings: &Settings,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.len());
    let report = propagate_displaced_with(init, model, grid, settings, |_, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory { times: grid.to_vec(), states, model: model.clone(), settings: *settings, report })
}

/// Joint propagation of exactly two modes.
pub fn propagate_two_mode_joint(
    init: &QuantumState,
    model: &ModelA,
    grid: &[f64],
    settings: &Settings,
) -> Result<Trajectory> {
    if model.modes.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "two-mode propagation needs exactly 2 modes, got {}",
            model.modes.len()
        )));
    }
    propagate_displaced(init, model, grid, settings)
}
