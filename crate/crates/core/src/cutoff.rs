//! Two quantized modes truncated to `{|0⟩, |1⟩}` on top of the dressed atom.
//!
//! `|Ψ⟩ = U(t) Σ_χ C_χ e^{−iε_χ t} |χ̃⟩ ⊗ Σ_k d^χ_k e^{−iω·k t} |k⟩`, `χ ∈ {e, g}`,
//! `k ∈ {00, 01, 10, 11}`. The mode coupling `Σ_j Ω_j σ_x (a_j + a_j†)/2` seen
//! through `U` becomes `σ'_x = σ_x cos ωt − σ_y sin ωt`, so
//!
//! `i ḋ^χ_k = Σ_j Σ_χ' (Ω_j/2) ⟨χ̃|σ'_x|χ̃'⟩ C_χ* C_χ' e^{i(ε_χ−ε_χ')t} e^{i ω·(k−k')t} d^χ'_k'`
//!
//! with `k'` differing from `k` by one photon in mode `j`. `C±` are integrated
//! alongside.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{dressed_elements, CSeries, FloquetSolution};
use crate::integrate::{integrate_interval, Rk4};
use crate::observables::EPS_N;
use crate::spectrum::{dft_at, peak_near, Window};

/// Which `⟨χ̃|σ'_x|χ̃'⟩` elements enter the equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaApprox {
    /// All elements at the actual θ.
    #[default]
    Full,
    /// θ → π/2: diagonal elements dropped, `⟨ẽ|σ'_x|g̃⟩ = e^{−iωt}`.
    StrongField,
    /// Terms carrying `sin θ` dropped literally:
    /// diagonal elements vanish, `⟨ẽ|σ'_x|g̃⟩ = −cos²θ cos ωt − i sin ωt`.
    DropSinTheta,
}

/// Frequencies and couplings of the two modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffModes {
    pub omega1: f64,
    pub omega2: f64,
    pub coupling1: f64,
    pub coupling2: f64,
}

impl CutoffModes {
    pub fn swapped(&self) -> Self {
        Self { omega1: self.omega2, omega2: self.omega1, coupling1: self.coupling2, coupling2: self.coupling1 }
    }
}

/// Coefficients indexed by `k = 2 n₁ + n₂` (`00, 01, 10, 11`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffState {
    pub e: [C64; 4],
    pub g: [C64; 4],
}

impl CutoffState {
    /// `d^e_00 = d^g_00 = 1`, rest zero.
    pub fn both_branches_vacuum() -> Self {
        let mut s = Self { e: [C64::new(0.0, 0.0); 4], g: [C64::new(0.0, 0.0); 4] };
        s.e[0] = C64::new(1.0, 0.0);
        s.g[0] = C64::new(1.0, 0.0);
        s
    }

    pub fn norm_sqr(&self) -> f64 {
        self.e.iter().chain(&self.g).map(|c| c.norm_sqr()).sum()
    }

    /// Exchange the roles of the two modes (`01 ↔ 10`).
    pub fn swapped(&self) -> Self {
        let sw = |v: [C64; 4]| [v[0], v[2], v[1], v[3]];
        Self { e: sw(self.e), g: sw(self.g) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffTrajectory {
    pub times: Vec<f64>,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
    pub states: Vec<CutoffState>,
    /// Largest `|Σ|d|² − Σ|d(0)|²|`.
    pub max_norm_drift: f64,
}

/// `[[s_ee, s_eg], [s_ge, s_gg]]` at `t`.
fn sigma_prime(sol: &FloquetSolution, approx: SigmaApprox, t: f64) -> [[C64; 2]; 2] {
    let (sin, cos) = (sol.omega * t).sin_cos();
    let z = C64::new(0.0, 0.0);
    let eg = match approx {
        SigmaApprox::Full => {
            let el = dressed_elements(sol.theta());
            let mut s = [[z; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    s[r][c] = el.x[r][c] * cos - el.y[r][c] * sin;
                }
            }
            return s;
        }
        SigmaApprox::StrongField => C64::from_polar(1.0, -sol.omega * t),
        SigmaApprox::DropSinTheta => {
            let c = sol.theta().cos();
            C64::new(-c * c * cos, -sin)
        }
    };
    [[z, eg], [eg.conj(), z]]
}

/// Co-integrate `C±` and the eight `d` coefficients.
pub fn propagate_cutoff(
    sol: &FloquetSolution,
    modes: &CutoffModes,
    approx: SigmaApprox,
    c_init: (C64, C64),
    init: &CutoffState,
    grid: &[f64],
    max_step: Option<f64>,
) -> Result<CutoffTrajectory> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be non-empty and increasing".into()));
    }
    let el = dressed_elements(sol.theta());
    let de = sol.delta_eps();
    let eps = [sol.energies.eps_plus, sol.energies.eps_minus];
    let w = [modes.omega1, modes.omega2];
    let g = [modes.coupling1, modes.coupling2];
    let top = w[0].max(w[1]);
    let step = max_step.unwrap_or_else(|| sol.default_step().min(2.0 * std::f64::consts::PI / top / 200.0));

    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let mi = C64::new(0.0, -1.0);
        let wp = sol.perturbation(t, &el);
        let ph = C64::from_polar(1.0, de * t);
        dy[0] = mi * (wp[0][0] * y[0] + wp[0][1] * ph * y[1]);
        dy[1] = mi * (wp[1][1] * y[1] + wp[1][0] * ph.conj() * y[0]);

        let s = sigma_prime(sol, approx, t);
        let c = [y[0], y[1]];
        // mode factors e^{±iω_j t}
        let up = [C64::from_polar(1.0, w[0] * t), C64::from_polar(1.0, w[1] * t)];
        for chi in 0..2 {
            for k in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..2 {
                    if g[j] == 0.0 {
                        continue;
                    }
                    // mode 1 is the high bit
                    let bit = if j == 0 { 2 } else { 1 };
                    let kp = k ^ bit;
                    // ω·(k − k') = +ω_j if k holds the photon
                    let fm = if k & bit != 0 { up[j] } else { up[j].conj() };
                    for chi2 in 0..2 {
                        let sc = s[chi][chi2];
                        if sc == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let pe = C64::from_polar(1.0, (eps[chi] - eps[chi2]) * t);
                        acc += sc * c[chi].conj() * c[chi2] * pe * fm * y[2 + 4 * chi2 + kp] * (0.5 * g[j]);
                    }
                }
                dy[2 + 4 * chi + k] = mi * acc;
            }
        }
    };

    let mut y = vec![c_init.0, c_init.1];
    y.extend_from_slice(&init.e);
    y.extend_from_slice(&init.g);
    let d0 = init.norm_sqr();
    let mut rk = Rk4::new(y.len());
    let mut f = rhs;
    let mut out = CutoffTrajectory {
        times: grid.to_vec(),
        plus: Vec::with_capacity(grid.len()),
        minus: Vec::with_capacity(grid.len()),
        states: Vec::with_capacity(grid.len()),
        max_norm_drift: 0.0,
    };
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            integrate_interval(&mut rk, &mut f, grid[k - 1], t, step, &mut y);
        }
        let st = CutoffState {
            e: [y[2], y[3], y[4], y[5]],
            g: [y[6], y[7], y[8], y[9]],
        };
        let drift = (st.norm_sqr() - d0).abs();
        out.max_norm_drift = out.max_norm_drift.max(drift);
        if drift > 1e-5 {
            return Err(Error::NormDrift { drift, t, limit: 1e-5 });
        }
        out.plus.push(y[0]);
        out.minus.push(y[1]);
        out.states.push(st);
    }
    Ok(out)
}

/// `g²₁₂ = ⟨Ψ|Ψ⟩⟨N₁N₂⟩/(⟨N₁⟩⟨N₂⟩)` of the cutoff wavefunction, branch weights `|C_χ|²`.
pub fn cutoff_cross_correlation(c_plus: C64, c_minus: C64, d: &CutoffState) -> Result<f64> {
    let w = [c_plus.norm_sqr(), c_minus.norm_sqr()];
    let rows = [&d.e, &d.g];
    let mut norm = 0.0;
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    let mut n12 = 0.0;
    for (wt, v) in w.iter().zip(rows) {
        let p: Vec<f64> = v.iter().map(|c| c.norm_sqr() * wt).collect();
        norm += p.iter().sum::<f64>();
        n1 += p[2] + p[3];
        n2 += p[1] + p[3];
        n12 += p[3];
    }
    if norm <= 0.0 {
        return Err(Error::Undefined("cross-correlation of a zero state".into()));
    }
    let (n1, n2, n12) = (n1 / norm, n2 / norm, n12 / norm);
    if n1 <= EPS_N || n2 <= EPS_N {
        return Err(Error::Undefined("cross-correlation with a mode mean at or below eps_N".into()));
    }
    Ok(n12 / (n1 * n2))
}

impl CutoffTrajectory {
    pub fn cross_correlation(&self, k: usize) -> Result<f64> {
        cutoff_cross_correlation(self.plus[k], self.minus[k], &self.states[k])
    }
}

/// First-order `(d^e_0k, d^g_0k)` at `series.times[upto]` by composite Simpson:
/// `d^e = −iΩ/2 ∫ e^{i(ω_k − ω + δε)τ} C⁺*C⁻`, `d^g = −iΩ/2 ∫ e^{i(ω_k + ω − δε)τ} C⁻*C⁺`.
pub fn perturbative_first_order(
    sol: &FloquetSolution,
    series: &CSeries,
    omega_k: f64,
    coupling_k: f64,
    upto: usize,
) -> Result<(C64, C64)> {
    if upto % 2 != 0 || upto >= series.times.len() {
        return Err(Error::InvalidParameter(
            "Simpson quadrature needs an even number of intervals inside the series".into(),
        ));
    }
    let t = &series.times;
    if upto > 0 {
        let h = t[1] - t[0];
        if t[..=upto].windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
            return Err(Error::InvalidParameter("Simpson quadrature needs a uniform grid".into()));
        }
        let per_cycle = 2.0 * std::f64::consts::PI / sol.omega / h;
        if per_cycle < 40.0 - 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "quadrature grid has {per_cycle:.1} points per drive cycle, at least 40 needed"
            )));
        }
    }
    if coupling_k == 0.0 || upto == 0 {
        return Ok((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }
    let h = t[1] - t[0];
    let (xe, xg) = (omega_k - sol.omega + sol.delta_eps(), omega_k + sol.omega - sol.delta_eps());
    let mut se = C64::new(0.0, 0.0);
    let mut sg = C64::new(0.0, 0.0);
    for k in 0..=upto {
        let wgt = if k == 0 || k == upto {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let pm = series.plus[k].conj() * series.minus[k];
        se += pm * C64::from_polar(wgt, xe * t[k]);
        sg += pm.conj() * C64::from_polar(wgt, xg * t[k]);
    }
    let pref = C64::new(0.0, -0.5 * coupling_k) * (h / 3.0);
    Ok((pref * se, pref * sg))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// Nearest harmonic order of `x`; unclassifiable more than `0.25ω` away.
pub fn classify(x: f64, omega: f64) -> Result<(Parity, i64)> {
    let r = x / omega;
    let k = r.round();
    if (r - k).abs() > 0.25 || k < 1.0 {
        return Err(Error::Unclassifiable { omega: x, below: r.floor() * omega, above: r.ceil().max(1.0) * omega });
    }
    let k = k as i64;
    Ok((if k % 2 == 0 { Parity::Even } else { Parity::Odd }, k))
}

/// `½ − ½ Re(c²)/|c|²`.
pub fn even_odd_value(c: C64) -> Result<f64> {
    let n = c.norm_sqr();
    if n == 0.0 {
        return Err(Error::Undefined("vanishing spectral line at the odd frequency".into()));
    }
    Ok(0.5 - 0.5 * (c * c).re / n)
}

/// First-order cross-correlation predictor for the pair `(ω₁, ω₂)`:
/// 1 for two odd harmonics, `½ − ½ Re(c²)/|c|²` with `c = [C⁻*C⁺](ω_odd − ξ_offset)`
/// for an even–odd pair. Even–even pairs have no predictor.
pub fn perturbative_cross_correlation(
    sol: &FloquetSolution,
    series: &CSeries,
    window: Window,
    omega1: f64,
    omega2: f64,
) -> Result<f64> {
    let (p1, _) = classify(omega1, sol.omega)?;
    let (p2, _) = classify(omega2, sol.omega)?;
    let odd = match (p1, p2) {
        (Parity::Odd, Parity::Odd) => return Ok(1.0),
        (Parity::Even, Parity::Even) => {
            return Err(Error::InvalidParameter("no first-order predictor for two even harmonics".into()))
        }
        (Parity::Even, Parity::Odd) => omega2,
        (Parity::Odd, Parity::Even) => omega1,
    };
    let mp: Vec<C64> = series.plus.iter().zip(&series.minus).map(|(p, m)| m.conj() * p).collect();
    let c = dft_at(&series.times, &mp, window, odd - sol.xi_offset())?;
    even_odd_value(c)
}

/// Mode frequency near harmonic `order` that makes the first-order amplitude
/// grow secularly. Even orders lock onto the `C⁺*C⁻` line driving `d^e`,
/// odd orders onto the `C⁻*C⁺` line driving `d^g`.
pub fn resonant_frequency(sol: &FloquetSolution, series: &CSeries, window: Window, order: i64) -> Result<f64> {
    if order < 1 {
        return Err(Error::InvalidParameter("harmonic order must be positive".into()));
    }
    let x = order as f64 * sol.omega;
    let xo = sol.xi_offset();
    let half = 0.25 * sol.omega;
    if order % 2 == 0 {
        let pm: Vec<C64> = series.plus.iter().zip(&series.minus).map(|(p, m)| p.conj() * m).collect();
        let (at, _) = peak_near(&series.times, &pm, window, x, half)?;
        Ok(at - xo)
    } else {
        let mp: Vec<C64> = series.plus.iter().zip(&series.minus).map(|(p, m)| m.conj() * p).collect();
        let (at, _) = peak_near(&series.times, &mp, window, x - xo, half)?;
        Ok(at + xo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify(3.1, 1.0).unwrap(), (Parity::Odd, 3));
        assert_eq!(classify(3.9, 1.0).unwrap(), (Parity::Even, 4));
        assert_eq!(classify(7.0, 0.5).unwrap(), (Parity::Even, 14));
        assert!(matches!(classify(3.5, 1.0), Err(Error::Unclassifiable { .. })));
        assert!(classify(0.1, 1.0).is_err());
    }

    #[test]
    fn predictor_extremes() {
        assert!(even_odd_value(C64::new(2.0, 0.0)).unwrap().abs() < 1e-15);
        assert!((even_odd_value(C64::new(0.0, 3.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((even_odd_value(C64::from_polar(1.0, 0.25 * std::f64::consts::PI)).unwrap() - 0.5).abs() < 1e-15);
        assert!(even_odd_value(C64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn cross_correlation_examples() {
        let one = C64::new(1.0, 0.0);
        let mut d = CutoffState::both_branches_vacuum();
        d.e[1] = C64::new(0.1, 0.0);
        d.e[2] = C64::new(0.0, 0.2);
        d.g[1] = C64::new(0.05, 0.0);
        d.g[2] = C64::new(0.1, 0.0);
        assert_eq!(cutoff_cross_correlation(one, one, &d).unwrap(), 0.0);
        // product form in a single branch
        let mut p = CutoffState::both_branches_vacuum();
        p.g = [C64::new(0.0, 0.0); 4];
        p.e = [one, C64::new(0.3, 0.1), C64::new(-0.2, 0.4), C64::new(0.3, 0.1) * C64::new(-0.2, 0.4)];
        let g2 = cutoff_cross_correlation(one, C64::new(0.0, 0.0), &p).unwrap();
        assert!((g2 - 1.0).abs() < 1e-14);
        assert!(cutoff_cross_correlation(one, one, &CutoffState::both_branches_vacuum()).is_err());
    }
}
