//! Reference propagation of the full Hamiltonian on plain Fock states.
//!
//! Interaction picture with respect to `Σ_j ω_j N_j`:
//! `i ċ = [ω₀σ_z/2 + Ω(t)σ_x/2 + Σ_j Ω_j σ_x (a_j e^{−iω_j t} + a_j† e^{iω_j t})/2] c`,
//! and `ψ_n = c_n e^{−iΣ_j ω_j n_j t}`.

use num_complex::Complex64 as C64;

use super::{check_grid, top_level_weights, ModelA, RunReport, Settings, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{convert_basis, strides, AtomLabel, BasisDescriptor, QuantumState};
use crate::integrate::{integrate_interval, Rk4};

struct Rhs {
    omega0: f64,
    drive: crate::drive::DriveConfig,
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    block: usize,
    sqrt: Vec<f64>,
}

impl Rhs {
    fn eval(&self, t: f64, c: &[C64], dc: &mut [C64]) {
        let n = self.block;
        let z = 0.5 * self.omega0;
        let x = 0.5 * self.drive.rabi(t);
        let mi = C64::new(0.0, -1.0);
        for a in 0..2 {
            let other = 1 - a;
            let sz = if a == 0 { -z } else { z };
            for k in 0..n {
                dc[a * n + k] = c[a * n + k] * sz + c[other * n + k] * x;
            }
        }
        for (j, (&w, &g)) in self.omegas.iter().zip(&self.couplings).enumerate() {
            if g == 0.0 {
                continue;
            }
            let e_lo = C64::from_polar(0.5 * g, -w * t);
            let e_hi = e_lo.conj();
            let (d, s) = (self.dims[j], self.strides[j]);
            for a in 0..2 {
                let src = &c[(1 - a) * n..(2 - a) * n];
                let dst = &mut dc[a * n..(a + 1) * n];
                for k in 0..n {
                    let nj = (k / s) % d;
                    let mut acc = C64::new(0.0, 0.0);
                    if nj + 1 < d {
                        acc += src[k + s] * (e_lo * self.sqrt[nj + 1]);
                    }
                    if nj > 0 {
                        acc += src[k - s] * (e_hi * self.sqrt[nj]);
                    }
                    dst[k] += acc;
                }
            }
        }
        for v in dc.iter_mut() {
            *v *= mi;
        }
    }

    fn phase(&self, t: f64) -> Vec<C64> {
        let mut occ = vec![0usize; self.dims.len()];
        (0..self.block)
            .map(|k| {
                crate::hilbert::decode(k, &self.dims, &mut occ);
                let e: f64 = occ.iter().zip(&self.omegas).map(|(n, w)| *n as f64 * w).sum();
                C64::from_polar(1.0, -e * t)
            })
            .collect()
    }
}

pub fn propagate_fock_direct_with<F>(
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
    let basis = BasisDescriptor::plain(AtomLabel::Energy, &model.modes.n_max())?;
    if basis.dim() > settings.dim_cap {
        return Err(Error::DimensionCap { dim: basis.dim(), cap: settings.dim_cap });
    }
    let mut state = convert_basis(init, &basis)?;
    let dims = basis.mode_dims();
    let max_d = dims.iter().copied().max().unwrap_or(1);
    let rhs = Rhs {
        omega0: model.omega0,
        drive: model.drive,
        omegas: model.modes.modes().iter().map(|m| m.omega).collect(),
        couplings: model.modes.modes().iter().map(|m| m.coupling).collect(),
        strides: strides(&dims),
        block: basis.mode_block(),
        sqrt: (0..=max_d).map(|k| (k as f64).sqrt()).collect(),
        dims: dims.clone(),
    };
    let n = rhs.block;
    let step = settings.step_for(model);
    let mut report = RunReport { step, ..Default::default() };

    let p0 = rhs.phase(grid[0]);
    let mut c: Vec<C64> =
        state.amplitudes().iter().enumerate().map(|(k, a)| a / p0[k % n]).collect();
    let norm0 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut rk = Rk4::new(c.len());
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            let mut f = |t: f64, y: &[C64], dy: &mut [C64]| rhs.eval(t, y, dy);
            integrate_interval(&mut rk, &mut f, grid[k - 1], t, step, &mut c);
            report.steps += ((t - grid[k - 1]) / step).ceil().max(1.0) as usize;
        }
        let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - norm0).abs();
        report.max_norm_drift = report.max_norm_drift.max(drift);
        if drift > settings.norm_abort {
            return Err(Error::NormDrift { drift, t, limit: settings.norm_abort });
        }
        let p = rhs.phase(t);
        for (i, (dst, src)) in state.amplitudes_mut().iter_mut().zip(&c).enumerate() {
            *dst = src * p[i % n];
        }
        for (j, w) in top_level_weights(state.amplitudes(), &dims).into_iter().enumerate() {
            report.note_truncation(j, t, w, settings.truncation_warn);
        }
        observer(t, &state)?;
    }
    Ok(report)
}

pub fn propagate_fock_direct(
    init: &QuantumState,
    model: &ModelA,
    grid: &[f64],
    settings: &Settings,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.len());
    let report = propagate_fock_direct_with(init, model, grid, settings, |_, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory { times: grid.to_vec(), states, model: model.clone(), settings: *settings, report })
}
