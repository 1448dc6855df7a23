//! Statistics identities shared by the property tests and the acceptance run.

#![allow(dead_code)]

use num_complex::Complex64 as C64;
use qhhg::hilbert::{expectation, AtomLabel, BasisDescriptor, OperatorSpec, QuantumState};
use qhhg::observables::{cross_correlation, mode_moments};

/// Normalised state on plain Fock bases from raw (re, im) pairs.
pub fn random_state(n_max: &[usize], raw: &[(f64, f64)]) -> QuantumState {
    let basis = BasisDescriptor::plain(AtomLabel::Energy, n_max).unwrap();
    let mut amps: Vec<C64> = raw.iter().take(basis.dim()).map(|&(r, i)| C64::new(r, i)).collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amps {
        *c /= norm;
    }
    QuantumState::new(basis, amps).unwrap()
}

pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Vec<C64> {
    let mut out = vec![C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0)];
    for n in 1..=n_max {
        let prev = out[n - 1];
        out.push(prev * alpha / (n as f64).sqrt());
    }
    out
}

/// `Var X + Var Y` from operator expectations, independent of the ellipse code.
pub fn quadrature_trace(state: &QuantumState, mode: usize) -> f64 {
    let a = OperatorSpec::a(mode);
    let ad = OperatorSpec::ad(mode);
    let x = a.plus(&ad).scale(0.5);
    let y = ad.minus(&a).scale(C64::new(0.0, 0.5));
    let var = |q: &OperatorSpec| {
        let m = expectation(state, q).unwrap().re;
        expectation(state, &q.times(q)).unwrap().re - m * m
    };
    var(&x) + var(&y)
}

/// Checks every single-state identity; returns the first violation.
pub fn check_identities(state: &QuantumState) -> Result<(), String> {
    let modes = state.n_modes();
    for k in 0..modes {
        let m = mode_moments(state, k).map_err(|e| e.to_string())?;
        let e = m.ellipse();
        if m.is_excited() {
            let g2 = m.g2().map_err(|e| e.to_string())?;
            let lhs = m.mandel_q();
            let rhs = m.n * (g2 - 1.0);
            if (lhs - rhs).abs() > 1e-10 {
                return Err(format!("mode {k}: Q {lhs} vs N(g2-1) {rhs}"));
            }
        }
        if e.lambda_plus * e.lambda_minus < 1.0 / 16.0 - 1e-12 {
            return Err(format!("mode {k}: λ+λ− = {}", e.lambda_plus * e.lambda_minus));
        }
        let trace = quadrature_trace(state, k);
        if (e.lambda_plus + e.lambda_minus - trace).abs() > 1e-12 {
            return Err(format!("mode {k}: λ+ + λ− = {} vs trace {trace}", e.lambda_plus + e.lambda_minus));
        }
    }
    for i in 0..modes {
        for j in i + 1..modes {
            let (Ok(g), Ok(h)) = (cross_correlation(state, i, j), cross_correlation(state, j, i)) else { continue };
            let swapped = state.swap_modes(i, j).unwrap();
            let s = cross_correlation(&swapped, j, i).map_err(|e| e.to_string())?;
            if g != h || (g - s).abs() > 1e-12 * g.abs().max(1.0) {
                return Err(format!("g2_{i}{j} = {g}, g2_{j}{i} = {h}, swapped {s}"));
            }
        }
    }
    Ok(())
}

/// λ± = 1/4 and Q = 0 on a coherent (or vacuum) product state.
pub fn check_coherent(alphas: &[C64], n_max: usize) -> Result<(), String> {
    let basis = BasisDescriptor::plain(AtomLabel::Energy, &vec![n_max; alphas.len()]).unwrap();
    let amps: Vec<Vec<C64>> = alphas.iter().map(|&a| coherent_amplitudes(a, n_max)).collect();
    let state = QuantumState::product(basis, [C64::new(0.6, 0.0), C64::new(0.0, 0.8)], &amps).unwrap();
    for k in 0..alphas.len() {
        let m = mode_moments(&state, k).map_err(|e| e.to_string())?;
        let e = m.ellipse();
        let q = m.mandel_q();
        if (e.lambda_plus - 0.25).abs() > 1e-12 || (e.lambda_minus - 0.25).abs() > 1e-12 || q.abs() > 1e-12 {
            return Err(format!("α = {}: λ = ({}, {}), Q = {q}", alphas[k], e.lambda_plus, e.lambda_minus));
        }
    }
    Ok(())
}
