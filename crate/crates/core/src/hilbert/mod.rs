//! Truncated atom ⊗ modes Hilbert spaces.
//!
//! Amplitudes are stored row-major over `(atom, mode_1, ..., mode_M)`, the
//! atom index being the slowest. The atomic index runs over `[g, e]` in the
//! energy labeling and over `[-, +]` in the σ_x labeling, with
//! `|±⟩ = (|g⟩ ± |e⟩)/√2` up to the sign convention `|−⟩ = (|e⟩ − |g⟩)/√2`.

mod convert;
mod displacement;
mod operator;
mod snapshot;

pub use convert::{convert_basis, BasisConverter, mode_conversion_matrix, relabel_atom, to_plain, LOST_WEIGHT_LIMIT};
pub use displacement::{displacement_matrix, displacement_matrix_element};
pub use operator::{CompiledOp, Ladder, OperatorSpec, Pauli, Term};
pub use snapshot::{read_snapshot, write_snapshot};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Atomic basis labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLabel {
    /// `[|g⟩, |e⟩]`
    Energy,
    /// `[|−⟩, |+⟩]`
    SigmaX,
}

/// Single-mode truncated (possibly displaced) Fock basis `|n, γ⟩ = D(γ)|n⟩`.
///
/// In a σ_x-labeled state the displacement of branch `±` is `±γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockBasis {
    n_max: usize,
    displacement: C64,
}

impl FockBasis {
    pub fn plain(n_max: usize) -> Result<Self> {
        Self::displaced(n_max, ZERO)
    }

    pub fn displaced(n_max: usize, gamma: C64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !gamma.re.is_finite() || !gamma.im.is_finite() {
            return Err(Error::InvalidParameter("non-finite displacement".into()));
        }
        Ok(Self { n_max, displacement: gamma })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn displacement(&self) -> C64 {
        self.displacement
    }

    pub fn is_plain(&self) -> bool {
        self.displacement == ZERO
    }
}

/// Complete description of an atom ⊗ modes basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub labeling: AtomLabel,
    pub modes: Vec<FockBasis>,
}

impl BasisDescriptor {
    pub fn new(labeling: AtomLabel, modes: Vec<FockBasis>) -> Result<Self> {
        if labeling == AtomLabel::Energy && modes.iter().any(|m| !m.is_plain()) {
            return Err(Error::InvalidParameter(
                "displaced mode bases are branch-conditioned and need the sigma_x labeling".into(),
            ));
        }
        Ok(Self { labeling, modes })
    }

    pub fn plain(labeling: AtomLabel, n_max: &[usize]) -> Result<Self> {
        let modes = n_max.iter().map(|&n| FockBasis::plain(n)).collect::<Result<_>>()?;
        Self::new(labeling, modes)
    }

    pub fn mode_dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim()).collect()
    }

    pub fn mode_block(&self) -> usize {
        self.modes.iter().map(|m| m.dim()).product()
    }

    pub fn dim(&self) -> usize {
        2 * self.mode_block()
    }

    pub fn is_plain(&self) -> bool {
        self.modes.iter().all(|m| m.is_plain())
    }

    /// Row-major strides of the mode indices inside one atomic block.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.mode_dims())
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Decode a mode-block index into occupation numbers.
pub(crate) fn decode(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

/// Pure state of the atom and its modes.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    basis: BasisDescriptor,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    pub fn new(basis: BasisDescriptor, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes given for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    /// `|g⟩ ⊗ |0…0⟩` on plain Fock bases, energy labeling.
    pub fn ground_vacuum(n_max: &[usize]) -> Result<Self> {
        let basis = BasisDescriptor::plain(AtomLabel::Energy, n_max)?;
        let mut amps = vec![ZERO; basis.dim()];
        amps[0] = ONE;
        Self::new(basis, amps)
    }

    /// Product state `atom ⊗ mode_1 ⊗ …`; each mode vector has length `n_max+1`.
    pub fn product(basis: BasisDescriptor, atom: [C64; 2], modes: &[Vec<C64>]) -> Result<Self> {
        if modes.len() != basis.modes.len() {
            return Err(Error::Dimension("one amplitude vector per mode expected".into()));
        }
        for (k, (v, b)) in modes.iter().zip(&basis.modes).enumerate() {
            if v.len() != b.dim() {
                return Err(Error::Dimension(format!("mode {k}: expected {} amplitudes", b.dim())));
            }
        }
        let mut amps = Vec::with_capacity(basis.dim());
        for a in atom {
            let mut block = vec![a];
            for v in modes {
                block = block.iter().flat_map(|&x| v.iter().map(move |&y| x * y)).collect();
            }
            amps.extend(block);
        }
        Self::new(basis, amps)
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn labeling(&self) -> AtomLabel {
        self.basis.labeling
    }

    pub fn n_modes(&self) -> usize {
        self.basis.modes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::Dimension("inner product of states on different bases".into()));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Amplitude of `|atom, n_1, …, n_M⟩`.
    pub fn amplitude(&self, atom: usize, occupation: &[usize]) -> C64 {
        let strides = self.basis.strides();
        let idx: usize = occupation.iter().zip(&strides).map(|(n, s)| n * s).sum();
        self.amplitudes[atom * self.basis.mode_block() + idx]
    }

    /// Mode-swapped copy (modes `i` and `j` exchanged).
    pub fn swap_modes(&self, i: usize, j: usize) -> Result<QuantumState> {
        let m = self.n_modes();
        if i >= m || j >= m {
            return Err(Error::Dimension(format!("mode index out of range for {m} modes")));
        }
        let mut modes = self.basis.modes.clone();
        modes.swap(i, j);
        let target = BasisDescriptor { labeling: self.basis.labeling, modes };
        let dims = self.basis.mode_dims();
        let tstrides = target.strides();
        let block = self.basis.mode_block();
        let mut occ = vec![0; m];
        let mut out = vec![ZERO; self.amplitudes.len()];
        for a in 0..2 {
            for idx in 0..block {
                decode(idx, &dims, &mut occ);
                occ.swap(i, j);
                let t: usize = occ.iter().zip(&tstrides).map(|(n, s)| n * s).sum();
                out[a * block + t] = self.amplitudes[a * block + idx];
            }
        }
        QuantumState::new(target, out)
    }
}

/// `⟨Ψ|op|Ψ⟩`. Displaced states are first expanded on a plain Fock basis
/// large enough to keep all but `1e−10` of the norm.
pub fn expectation(state: &QuantumState, op: &OperatorSpec) -> Result<C64> {
    if let Some(k) = op.max_mode() {
        if k >= state.n_modes() {
            return Err(Error::Dimension(format!(
                "operator references mode {k} but the state has {} mode(s)",
                state.n_modes()
            )));
        }
    }
    if state.basis().is_plain() {
        op.compile(state.basis())?.expectation(state)
    } else {
        let plain = to_plain(state, state.labeling())?;
        op.compile(plain.basis())?.expectation(&plain)
    }
}

/// Pauli matrix `[row][col]` in the given labeling.
pub fn pauli_matrix(label: AtomLabel, p: Pauli) -> [[C64; 2]; 2] {
    let o = ZERO;
    let l = ONE;
    match (label, p) {
        (_, Pauli::I) => [[l, o], [o, l]],
        (AtomLabel::Energy, Pauli::X) => [[o, l], [l, o]],
        (AtomLabel::Energy, Pauli::Y) => [[o, I], [-I, o]],
        (AtomLabel::Energy, Pauli::Z) => [[-l, o], [o, l]],
        (AtomLabel::SigmaX, Pauli::X) => [[-l, o], [o, l]],
        (AtomLabel::SigmaX, Pauli::Y) => [[o, -I], [I, o]],
        (AtomLabel::SigmaX, Pauli::Z) => [[o, l], [l, o]],
    }
}

/// Single-mode operator matrices on a plain truncated Fock space.
#[derive(Clone, Debug)]
pub struct ModeOperators {
    pub a: DMatrix<C64>,
    pub ad: DMatrix<C64>,
    pub n: DMatrix<C64>,
    pub a2: DMatrix<C64>,
    pub ad2: DMatrix<C64>,
    /// `X = (a + a†)/2`
    pub x: DMatrix<C64>,
    /// `Y = i(a† − a)/2`
    pub y: DMatrix<C64>,
}

pub fn build_mode_operators(basis: &FockBasis) -> ModeOperators {
    let d = basis.dim();
    let mut a = DMatrix::from_element(d, d, ZERO);
    for n in 1..d {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    let ad = a.adjoint();
    let mut n = DMatrix::from_element(d, d, ZERO);
    for k in 0..d {
        n[(k, k)] = C64::from(k as f64);
    }
    let a2 = &a * &a;
    let ad2 = &ad * &ad;
    let x = (&a + &ad) * C64::from(0.5);
    let y = (&ad - &a) * C64::new(0.0, 0.5);
    ModeOperators { a, ad, n, a2, ad2, x, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowering_operator_smallest_space() {
        let ops = build_mode_operators(&FockBasis::plain(1).unwrap());
        assert_eq!(ops.a[(0, 1)], ONE);
        assert_eq!(ops.a[(0, 0)], ZERO);
        assert_eq!(ops.a[(1, 0)], ZERO);
        assert_eq!(ops.a[(1, 1)], ZERO);
    }

    #[test]
    fn commutator_is_identity_except_corner() {
        for n_max in [1, 3, 8] {
            let ops = build_mode_operators(&FockBasis::plain(n_max).unwrap());
            let c = &ops.a * &ops.ad - &ops.ad * &ops.a;
            for r in 0..=n_max {
                for k in 0..=n_max {
                    let want = if r != k {
                        0.0
                    } else if r == n_max {
                        -(n_max as f64)
                    } else {
                        1.0
                    };
                    assert!((c[(r, k)] - C64::from(want)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn number_operator_spectrum() {
        let ops = build_mode_operators(&FockBasis::plain(8).unwrap());
        let n = &ops.ad * &ops.a;
        assert!((&n - &ops.n).norm() < 1e-14);
        let eig = n.map(|z| z.re).symmetric_eigenvalues();
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, v) in ev.iter().enumerate() {
            assert!((v - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn n_max_zero_rejected() {
        assert!(FockBasis::plain(0).is_err());
    }

    #[test]
    fn energy_labeling_rejects_displacement() {
        let m = FockBasis::displaced(4, C64::new(0.1, 0.0)).unwrap();
        assert!(BasisDescriptor::new(AtomLabel::Energy, vec![m]).is_err());
    }

    #[test]
    fn pauli_algebra_in_both_labelings() {
        for label in [AtomLabel::Energy, AtomLabel::SigmaX] {
            let m = |p| DMatrix::from_fn(2, 2, |r, c| pauli_matrix(label, p)[r][c]);
            let (x, y, z) = (m(Pauli::X), m(Pauli::Y), m(Pauli::Z));
            assert!((&x * &y - &z * I).norm() < 1e-15);
            assert!((&y * &z - &x * I).norm() < 1e-15);
        }
    }
}
