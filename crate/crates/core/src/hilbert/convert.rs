use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{displacement_matrix_element, AtomLabel, BasisDescriptor, FockBasis, QuantumState, ZERO};
use crate::error::{Error, Result};

/// Largest norm fraction a conversion may drop.
pub const LOST_WEIGHT_LIMIT: f64 = 1e-10;

/// `T_kn = ⟨k, γ_t | n, γ_s⟩` for `k ≤ target.n_max`, `n ≤ source.n_max`, with
/// the displacements already multiplied by the branch sign.
pub fn mode_conversion_matrix(source: &FockBasis, target: &FockBasis, sign: f64) -> DMatrix<C64> {
    let gs = source.displacement() * sign;
    let gt = target.displacement() * sign;
    // D(γ_t)† D(γ_s) = e^{i Im(γ_t* γ_s)} D(γ_s − γ_t)
    let phase = C64::from_polar(1.0, (gt.conj() * gs).im);
    let d = gs - gt;
    DMatrix::from_fn(target.dim(), source.dim(), |k, n| phase * displacement_matrix_element(k, n, d))
}

/// Re-express the atomic factor in another labeling (plain Fock modes only,
/// or σ_x → σ_x).
pub fn relabel_atom(state: &QuantumState, target: AtomLabel) -> Result<QuantumState> {
    if state.labeling() == target {
        return Ok(state.clone());
    }
    if !state.basis().is_plain() {
        return Err(Error::InvalidParameter(
            "displaced states must stay in the sigma_x labeling".into(),
        ));
    }
    let block = state.basis().mode_block();
    let amps = state.amplitudes();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = vec![ZERO; amps.len()];
    for k in 0..block {
        let (c0, c1) = (amps[k], amps[block + k]);
        let (o0, o1) = match target {
            // (g, e) -> (−, +)
            AtomLabel::SigmaX => ((c1 - c0) * s, (c0 + c1) * s),
            // (−, +) -> (g, e)
            AtomLabel::Energy => ((c1 - c0) * s, (c1 + c0) * s),
        };
        out[k] = o0;
        out[block + k] = o1;
    }
    let basis = BasisDescriptor { labeling: target, modes: state.basis().modes.clone() };
    QuantumState::new(basis, out)
}

/// Contract mode `axis` with a per-branch matrix (rows index the new basis).
fn transform_axis(
    amps: &[C64],
    dims: &[usize],
    axis: usize,
    mats: [&DMatrix<C64>; 2],
) -> (Vec<C64>, Vec<usize>) {
    let new_dim = mats[0].nrows();
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let old_dim = dims[axis];
    let mut new_dims = dims.to_vec();
    new_dims[axis] = new_dim;
    let block_in = outer * old_dim * inner;
    let block_out = outer * new_dim * inner;
    let mut out = vec![ZERO; 2 * block_out];
    for a in 0..2 {
        let m = mats[a];
        for o in 0..outer {
            for k in 0..new_dim {
                for n in 0..old_dim {
                    let t = m[(k, n)];
                    if t == ZERO {
                        continue;
                    }
                    let src = a * block_in + (o * old_dim + n) * inner;
                    let dst = a * block_out + (o * new_dim + k) * inner;
                    for i in 0..inner {
                        out[dst + i] += t * amps[src + i];
                    }
                }
            }
        }
    }
    (out, new_dims)
}

/// Precomputed change of basis between two fixed descriptors.
#[derive(Clone, Debug)]
pub struct BasisConverter {
    source: BasisDescriptor,
    target: BasisDescriptor,
    displaced: bool,
    /// Per changed mode: `(axis, [matrix for − branch, matrix for + branch])`.
    steps: Vec<(usize, [DMatrix<C64>; 2])>,
}

impl BasisConverter {
    pub fn new(source: &BasisDescriptor, target: &BasisDescriptor) -> Result<Self> {
        let target = BasisDescriptor::new(target.labeling, target.modes.clone())?;
        if target.modes.len() != source.modes.len() {
            return Err(Error::Dimension(format!(
                "target has {} modes, state has {}",
                target.modes.len(),
                source.modes.len()
            )));
        }
        let displaced = !source.is_plain() || !target.is_plain();
        let steps = source
            .modes
            .iter()
            .zip(&target.modes)
            .enumerate()
            .filter(|(_, (s, t))| s != t)
            .map(|(axis, (s, t))| {
                let mats = if displaced {
                    [mode_conversion_matrix(s, t, -1.0), mode_conversion_matrix(s, t, 1.0)]
                } else {
                    let m = mode_conversion_matrix(s, t, 1.0);
                    [m.clone(), m]
                };
                (axis, mats)
            })
            .collect();
        Ok(Self { source: source.clone(), target, displaced, steps })
    }

    pub fn target(&self) -> &BasisDescriptor {
        &self.target
    }

    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.basis() != &self.source {
            return Err(Error::Dimension("state basis differs from the converter source".into()));
        }
        let work = if self.displaced { relabel_atom_any(state, AtomLabel::SigmaX)? } else { state.clone() };
        let mut amps = work.amplitudes().to_vec();
        let mut dims = work.basis().mode_dims();
        for (axis, mats) in &self.steps {
            let (a, d) = transform_axis(&amps, &dims, *axis, [&mats[0], &mats[1]]);
            amps = a;
            dims = d;
        }
        let before = state.norm_sqr();
        let after: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let lost = if before > 0.0 { (before - after) / before } else { 0.0 };
        if lost > LOST_WEIGHT_LIMIT {
            return Err(Error::LostWeight { lost, limit: LOST_WEIGHT_LIMIT });
        }
        let mid = QuantumState::new(
            BasisDescriptor { labeling: work.labeling(), modes: self.target.modes.clone() },
            amps,
        )?;
        relabel_atom_any(&mid, self.target.labeling)
    }
}

/// Change basis (truncation, displacement and atomic labeling).
///
/// Fails with [`Error::LostWeight`] when the target keeps less than
/// `1 − 1e−10` of the norm.
pub fn convert_basis(state: &QuantumState, target: &BasisDescriptor) -> Result<QuantumState> {
    BasisConverter::new(state.basis(), target)?.apply(state)
}

fn relabel_atom_any(state: &QuantumState, label: AtomLabel) -> Result<QuantumState> {
    if state.labeling() == label {
        Ok(state.clone())
    } else {
        relabel_atom(state, label)
    }
}

/// Plain-Fock copy of a (possibly displaced) state, truncation grown until the
/// conversion keeps all but `1e−10` of the norm.
pub fn to_plain(state: &QuantumState, labeling: AtomLabel) -> Result<QuantumState> {
    if state.basis().is_plain() {
        return relabel_atom_any(state, labeling);
    }
    let mut extra: Vec<usize> = state
        .basis()
        .modes
        .iter()
        .map(|m| {
            let g = m.displacement().norm();
            let n = m.n_max() as f64;
            if g == 0.0 {
                0
            } else {
                (g * (2.0 * n.sqrt() + 12.0) + 2.0 * g * g).ceil() as usize + 10
            }
        })
        .collect();
    loop {
        let modes = state
            .basis()
            .modes
            .iter()
            .zip(&extra)
            .map(|(m, e)| FockBasis::plain(m.n_max() + e))
            .collect::<Result<Vec<_>>>()?;
        let target = BasisDescriptor::new(labeling, modes)?;
        match convert_basis(state, &target) {
            Err(Error::LostWeight { .. }) if extra.iter().all(|&e| e < 400) => {
                for e in extra.iter_mut() {
                    *e = (*e).max(5) * 2;
                }
            }
            r => return r,
        }
    }
}
