use num_complex::Complex64 as C64;

use super::{decode, pauli_matrix, BasisDescriptor, QuantumState, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// `self · other = phase · result`
    fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (X, X) | (Y, Y) | (Z, Z) => (ONE, I),
            (X, Y) => (super::I, Z),
            (Y, X) => (-super::I, Z),
            (Y, Z) => (super::I, X),
            (Z, Y) => (-super::I, X),
            (Z, X) => (super::I, Y),
            (X, Z) => (-super::I, Y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    /// `a`
    Lower,
    /// `a†`
    Raise,
    /// `N = a†a`
    Number,
}

impl Ladder {
    fn adjoint(self) -> Ladder {
        match self {
            Ladder::Lower => Ladder::Raise,
            Ladder::Raise => Ladder::Lower,
            Ladder::Number => Ladder::Number,
        }
    }
}

/// `coeff · σ ⊗ Π_j w_j(a_j, a_j†)`; each word is written left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub atom: Pauli,
    pub modes: Vec<(usize, Vec<Ladder>)>,
}

impl Term {
    fn normalize(mut self) -> Term {
        self.modes.sort_by_key(|(m, _)| *m);
        let mut merged: Vec<(usize, Vec<Ladder>)> = Vec::with_capacity(self.modes.len());
        for (m, w) in self.modes {
            match merged.last_mut() {
                Some((lm, lw)) if *lm == m => lw.extend(w),
                _ => merged.push((m, w)),
            }
        }
        merged.retain(|(_, w)| !w.is_empty());
        self.modes = merged;
        self
    }
}

/// Symbolic operator: a sum of atom ⊗ mode-monomial products.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OperatorSpec {
    pub terms: Vec<Term>,
}

impl OperatorSpec {
    pub fn zero() -> Self {
        Self { terms: vec![] }
    }

    pub fn identity() -> Self {
        Self::pauli(Pauli::I)
    }

    pub fn pauli(p: Pauli) -> Self {
        Self { terms: vec![Term { coeff: ONE, atom: p, modes: vec![] }] }
    }

    pub fn word(mode: usize, word: &[Ladder]) -> Self {
        Self {
            terms: vec![Term { coeff: ONE, atom: Pauli::I, modes: vec![(mode, word.to_vec())] }]
                .into_iter()
                .map(Term::normalize)
                .collect(),
        }
    }

    pub fn a(mode: usize) -> Self {
        Self::word(mode, &[Ladder::Lower])
    }

    pub fn ad(mode: usize) -> Self {
        Self::word(mode, &[Ladder::Raise])
    }

    pub fn n(mode: usize) -> Self {
        Self::word(mode, &[Ladder::Number])
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        Self { terms: self.terms.iter().map(|t| Term { coeff: t.coeff * c, ..t.clone() }).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(-1.0))
    }

    /// Operator product `self · other`.
    pub fn times(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for l in &self.terms {
            for r in &other.terms {
                let (phase, atom) = l.atom.mul(r.atom);
                let mut modes = l.modes.clone();
                modes.extend(r.modes.iter().cloned());
                terms.push(Term { coeff: l.coeff * r.coeff * phase, atom, modes }.normalize());
            }
        }
        Self { terms }
    }

    /// `{self, other}`
    pub fn anticommutator(&self, other: &Self) -> Self {
        self.times(other).plus(&other.times(self))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    atom: t.atom,
                    modes: t
                        .modes
                        .iter()
                        .map(|(m, w)| (*m, w.iter().rev().map(|l| l.adjoint()).collect()))
                        .collect(),
                })
                .collect(),
        }
    }

    /// Largest mode index referenced, if any.
    pub fn max_mode(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.modes.iter().map(|(m, _)| *m)).max()
    }

    /// Sparse matrix of `P·op·P` on a plain-Fock basis, `P` the truncation projector.
    pub fn compile(&self, basis: &BasisDescriptor) -> Result<CompiledOp> {
        if !basis.is_plain() {
            return Err(Error::InvalidParameter("operators compile on plain Fock bases".into()));
        }
        let m = basis.modes.len();
        if let Some(k) = self.max_mode() {
            if k >= m {
                return Err(Error::Dimension(format!(
                    "operator references mode {k} but the state has {m} mode(s)"
                )));
            }
        }
        let dims = basis.mode_dims();
        let strides = basis.strides();
        let block = basis.mode_block();
        let mut occ = vec![0usize; m];
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        for a in 0..2 {
            for idx in 0..block {
                let col = a * block + idx;
                for t in &self.terms {
                    decode(idx, &dims, &mut occ);
                    let mut coef = t.coeff;
                    let mut alive = true;
                    for (mode, w) in &t.modes {
                        match apply_word(w, occ[*mode]) {
                            Some((c, n)) if n < dims[*mode] => {
                                coef *= c;
                                occ[*mode] = n;
                            }
                            _ => {
                                alive = false;
                                break;
                            }
                        }
                    }
                    if !alive || coef == ZERO {
                        continue;
                    }
                    let target: usize = occ.iter().zip(&strides).map(|(n, s)| n * s).sum();
                    let p = pauli_matrix(basis.labeling, t.atom);
                    for (r, row) in p.iter().enumerate() {
                        let v = row[a];
                        if v != ZERO {
                            triplets.push((r * block + target, col, coef * v));
                        }
                    }
                }
            }
        }
        Ok(CompiledOp::from_triplets(basis.clone(), triplets))
    }
}

/// Apply a word to `|n⟩`: returns `(coefficient, n')`, `None` if annihilated.
fn apply_word(word: &[Ladder], mut n: usize) -> Option<(f64, usize)> {
    let mut c = 1.0;
    for l in word.iter().rev() {
        match l {
            Ladder::Lower => {
                if n == 0 {
                    return None;
                }
                c *= (n as f64).sqrt();
                n -= 1;
            }
            Ladder::Raise => {
                n += 1;
                c *= (n as f64).sqrt();
            }
            Ladder::Number => {
                if n == 0 {
                    return None;
                }
                c *= n as f64;
            }
        }
    }
    Some((c, n))
}

/// Row-compressed sparse operator bound to a basis.
#[derive(Clone, Debug)]
pub struct CompiledOp {
    basis: BasisDescriptor,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CompiledOp {
    fn from_triplets(basis: BasisDescriptor, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let dim = basis.dim();
        let mut row_start = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_start[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_start[r + 1] += row_start[r];
        }
        Self { basis, row_start, cols, vals }
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `⟨ψ|op|ψ⟩` for amplitudes on the compiled basis.
    pub fn expect(&self, psi: &[C64]) -> C64 {
        let mut acc = ZERO;
        for r in 0..psi.len() {
            let pr = psi[r];
            if pr == ZERO {
                continue;
            }
            let mut row = ZERO;
            for k in self.row_start[r]..self.row_start[r + 1] {
                row += self.vals[k] * psi[self.cols[k]];
            }
            acc += pr.conj() * row;
        }
        acc
    }

    /// `out = op · psi`
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        for r in 0..out.len() {
            let mut row = ZERO;
            for k in self.row_start[r]..self.row_start[r + 1] {
                row += self.vals[k] * psi[self.cols[k]];
            }
            out[r] = row;
        }
    }

    pub fn expectation(&self, state: &QuantumState) -> Result<C64> {
        if state.basis() != &self.basis {
            return Err(Error::Dimension("state basis differs from the compiled basis".into()));
        }
        Ok(self.expect(state.amplitudes()))
    }
}
