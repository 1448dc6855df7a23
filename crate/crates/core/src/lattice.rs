//! Quantized multi-mode pulse on a finite von Neumann lattice of coherent states.
//!
//! `H = ω₀σ_z/2 + Σ_j ω_j a_j†a_j + Σ_j Ω_j σ_x(a_j + a_j†)/2`. In the σ_x branch
//! `s = ±1` every lattice product state `e^{iδ}|s⟩ ⊗_j |β_j⟩` solves the
//! Schrödinger equation without the `ω₀` term exactly:
//! `β(t) = sγ + (α − sγ)e^{−iωt}`, `δ(t) = sγ Im[α − (α − sγ)e^{−iωt}]`,
//! `γ = −Ω/(2ω)`, up to a phase common to all states. The coefficients obey
//! `i G ċ^s = (ω₀/2)⟨s|σ_z|−s⟩ M^{s,−s}(t) c^{−s}` with the constant Gram matrix
//! `G` and the cross-branch overlaps `M`; both factorize over modes.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate_interval, Rk4};
use crate::observables::{ratio, ModeMoments};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Largest tolerated drift of the physical norm.
pub const NORM_ABORT: f64 = 1e-6;

/// Default lattice spacing, `0.9√π`.
pub fn default_spacing() -> f64 {
    0.9 * std::f64::consts::PI.sqrt()
}

/// One quantized mode and its square lattice of coherent amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeMode {
    pub omega: f64,
    pub coupling: f64,
    pub center: C64,
    /// Points per axis (odd).
    pub side: usize,
    pub spacing: f64,
}

impl LatticeMode {
    pub fn gamma(&self) -> f64 {
        -self.coupling / (2.0 * self.omega)
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Lattice amplitudes, real part running fastest.
    pub fn points(&self) -> Vec<C64> {
        let h = (self.side as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.side {
            for i in 0..self.side {
                out.push(self.center + C64::new(i as f64 - h, j as f64 - h) * self.spacing);
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.coupling.is_finite() {
            return Err(Error::InvalidParameter("lattice mode needs ω > 0 and a finite coupling".into()));
        }
        if self.side == 0 || self.side % 2 == 0 {
            return Err(Error::InvalidParameter(format!("lattice side must be odd, got {}", self.side)));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::InvalidParameter("lattice spacing must be positive".into()));
        }
        if self.spacing > std::f64::consts::PI.sqrt() + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "lattice spacing {} is sparser than completeness (√π)",
                self.spacing
            )));
        }
        Ok(())
    }
}

/// Initial coherent amplitudes of the three-mode pulse
/// `(ω_f, ω_f + 2ω_e, ω_f − 2ω_e)`: `iA/2·e^{−iφ}`, `−iA/4·e^{−iφ}`, `−iA/4·e^{−iφ}`.
pub fn pulse_amplitudes(a: f64, phi: f64) -> [C64; 3] {
    let p = C64::from_polar(1.0, -phi);
    [C64::new(0.0, 0.5 * a) * p, C64::new(0.0, -0.25 * a) * p, C64::new(0.0, -0.25 * a) * p]
}

/// Mean field of the uncoupled pulse:
/// `(A/2)[sin(ω_f t + φ) − ½sin((ω_f−2ω_e)t + φ) − ½sin((ω_f+2ω_e)t + φ)]`.
pub fn free_mean_field(a: f64, phi: f64, omega_f: f64, omega_e: f64, t: f64) -> f64 {
    0.5 * a
        * ((omega_f * t + phi).sin()
            - 0.5 * ((omega_f - 2.0 * omega_e) * t + phi).sin()
            - 0.5 * ((omega_f + 2.0 * omega_e) * t + phi).sin())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub omega0: f64,
    pub modes: Vec<LatticeMode>,
    /// Lattice points required beyond an initial amplitude on each side.
    pub padding: usize,
    /// Cap on the condition number of the full overlap matrix.
    pub condition_cap: f64,
}

impl LatticeSpec {
    /// Three-mode pulse with lattices centred on the initial amplitudes.
    #[allow(clippy::too_many_arguments)]
    pub fn pulse(
        omega0: f64,
        a: f64,
        phi: f64,
        omega_f: f64,
        omega_e: f64,
        couplings: [f64; 3],
        side: usize,
        spacing: f64,
    ) -> Self {
        let omegas = [omega_f, omega_f + 2.0 * omega_e, omega_f - 2.0 * omega_e];
        let amps = pulse_amplitudes(a, phi);
        let modes = (0..3)
            .map(|j| LatticeMode { omega: omegas[j], coupling: couplings[j], center: amps[j], side, spacing })
            .collect();
        Self { omega0, modes, padding: 1, condition_cap: 1e8 }
    }
}

/// Coefficients `c^±` on the lattice product index (first mode slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    pub t: f64,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
struct Square {
    n: usize,
    v: Vec<C64>,
}

impl Square {
    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut v = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                v.push(f(r, c));
            }
        }
        Self { n, v }
    }

    fn mul(&self, o: &Square) -> Square {
        let n = self.n;
        let mut v = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.v[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    v[r * n + c] += a * o.v[k * n + c];
                }
            }
        }
        Square { n, v }
    }

    fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.n, self.n, &self.v)
    }

    fn from_dmatrix(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        Self::from_fn(n, |r, c| m[(r, c)])
    }
}

/// `out = (I ⊗ … ⊗ K ⊗ … ⊗ I) input` with `K` on `axis`.
fn apply_axis(k: &Square, dims: &[usize], axis: usize, input: &[C64], out: &mut [C64]) {
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    out.fill(ZERO);
    for o in 0..outer {
        for i in 0..d {
            let dst = (o * d + i) * inner;
            for ip in 0..d {
                let kv = k.v[i * d + ip];
                if kv == ZERO {
                    continue;
                }
                let src = (o * d + ip) * inner;
                for x in 0..inner {
                    out[dst + x] += kv * input[src + x];
                }
            }
        }
    }
}

/// `Σ conj(a[l, rest]) b[l', rest]` over all axes but `axis`.
fn reduce_axis(a: &[C64], b: &[C64], dims: &[usize], axis: usize) -> Square {
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut r = Square { n: d, v: vec![ZERO; d * d] };
    for o in 0..outer {
        for l in 0..d {
            let ra = (o * d + l) * inner;
            for lp in 0..d {
                let rb = (o * d + lp) * inner;
                let mut acc = ZERO;
                for x in 0..inner {
                    acc += a[ra + x].conj() * b[rb + x];
                }
                r.v[l * d + lp] += acc;
            }
        }
    }
    r
}

fn trace_product(r: &Square, o: &Square) -> C64 {
    r.v.iter().zip(&o.v).map(|(a, b)| a * b).sum()
}

/// `⟨α|β⟩` of coherent states.
fn overlap(a: C64, b: C64) -> C64 {
    (a.conj() * b - 0.5 * (a.norm_sqr() + b.norm_sqr())).exp()
}

/// Moving amplitudes and phases of one mode in branch `s` at time `t`.
fn carriers(mode: &LatticeMode, points: &[C64], s: f64, t: f64) -> Vec<(C64, C64)> {
    let g = s * mode.gamma();
    let rot = C64::from_polar(1.0, -mode.omega * t);
    points
        .iter()
        .map(|&a| {
            let moved = (a - g) * rot;
            let delta = g * (a - moved).im;
            (g + moved, C64::from_polar(1.0, delta))
        })
        .collect()
}

/// Work buffers for [`LatticeModel::apply_all`].
#[derive(Clone, Debug)]
struct Planar {
    re: Vec<f64>,
    im: Vec<f64>,
    tre: Vec<f64>,
    tim: Vec<f64>,
}

impl Planar {
    fn new(d: usize) -> Self {
        Self { re: vec![0.0; d], im: vec![0.0; d], tre: vec![0.0; d], tim: vec![0.0; d] }
    }
}

/// Physical expectation values of one lattice state.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeReading {
    pub t: f64,
    /// `⟨Ψ|Ψ⟩` through the overlap matrix.
    pub norm: f64,
    pub sigma_x: f64,
    pub modes: Vec<ModeMoments>,
    /// `Σ_j Re⟨a_j⟩`
    pub e_mean: f64,
    /// `⟨N₁N₂N₃⟩/(⟨N₁⟩⟨N₂⟩⟨N₃⟩)` for three modes with nonzero means.
    pub g3: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeTrajectory {
    pub readings: Vec<LatticeReading>,
    pub max_norm_drift: f64,
    pub condition: f64,
    pub final_state: LatticeState,
}

/// Lattice, overlap matrices and their inverses.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub spec: LatticeSpec,
    points: Vec<Vec<C64>>,
    gram: Vec<Square>,
    gram_inv: Vec<Square>,
    dims: Vec<usize>,
    /// Condition number of the full overlap matrix (product over modes).
    pub condition: f64,
}

impl LatticeModel {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        if spec.modes.is_empty() {
            return Err(Error::InvalidParameter("lattice needs at least one mode".into()));
        }
        if !(spec.omega0 >= 0.0) {
            return Err(Error::InvalidParameter("ω₀ must be non-negative".into()));
        }
        for m in &spec.modes {
            m.validate()?;
        }
        let points: Vec<Vec<C64>> = spec.modes.iter().map(|m| m.points()).collect();
        let mut gram = Vec::new();
        let mut gram_inv = Vec::new();
        let mut condition = 1.0;
        for p in &points {
            let g = Square::from_fn(p.len(), |r, c| overlap(p[r], p[c]));
            let dm = g.to_dmatrix();
            let eig = nalgebra::SymmetricEigen::new(dm.clone()).eigenvalues;
            let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
            condition *= if lo > 0.0 { hi / lo } else { f64::INFINITY };
            if !(condition <= spec.condition_cap) {
                return Err(Error::ConditionCap { cond: condition, cap: spec.condition_cap });
            }
            let inv = dm.try_inverse().ok_or(Error::ConditionCap { cond: f64::INFINITY, cap: spec.condition_cap })?;
            gram.push(g);
            gram_inv.push(Square::from_dmatrix(&inv));
        }
        let dims = points.iter().map(|p| p.len()).collect();
        Ok(Self { spec, points, gram, gram_inv, dims, condition })
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Expand `atom ⊗_j |α_j⟩` (`atom` as `[g, e]` amplitudes) on the lattice
    /// through the dual frame. Returns the state and the retained weight.
    pub fn project(&self, atom: [C64; 2], amplitudes: &[C64]) -> Result<(LatticeState, f64)> {
        if amplitudes.len() != self.spec.modes.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} lattice modes",
                amplitudes.len(),
                self.spec.modes.len()
            )));
        }
        let mut factors = Vec::new();
        let mut kept = 1.0;
        for (j, (&alpha, mode)) in amplitudes.iter().zip(&self.spec.modes).enumerate() {
            let half = (mode.side - 1) / 2;
            let reach = half.saturating_sub(self.spec.padding) as f64 * mode.spacing;
            let off = alpha - mode.center;
            let worst = off.re.abs().max(off.im.abs());
            if worst > reach + 1e-9 * mode.spacing.max(1.0) {
                let need = (worst / mode.spacing).ceil() as usize + self.spec.padding;
                return Err(Error::Coverage {
                    mode: j,
                    amplitude: format!("{alpha}"),
                    extra: need.saturating_sub(half),
                });
            }
            let b: Vec<C64> = self.points[j].iter().map(|&p| overlap(p, alpha)).collect();
            let gi = &self.gram_inv[j];
            let n = gi.n;
            let coef: Vec<C64> = (0..n).map(|r| (0..n).map(|c| gi.v[r * n + c] * b[c]).sum()).collect();
            let f: C64 = b.iter().zip(&coef).map(|(x, y)| x.conj() * y).sum();
            kept *= f.re;
            factors.push(coef);
        }
        let lost = 1.0 - kept;
        if lost > 1e-6 {
            return Err(Error::LostWeight { lost, limit: 1e-6 });
        }
        let mut prod = vec![C64::new(1.0, 0.0)];
        for f in &factors {
            prod = prod.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ap = (atom[0] + atom[1]) * h;
        let am = (atom[0] - atom[1]) * h;
        let state = LatticeState {
            t: 0.0,
            plus: prod.iter().map(|c| c * ap).collect(),
            minus: prod.iter().map(|c| c * am).collect(),
        };
        Ok((state, kept))
    }

    /// `|g⟩ ⊗_j |center_j⟩`.
    pub fn ground_at_centers(&self) -> Result<LatticeState> {
        let amps: Vec<C64> = self.spec.modes.iter().map(|m| m.center).collect();
        Ok(self.project([C64::new(1.0, 0.0), ZERO], &amps)?.0)
    }

    /// Largest single rate: `ω₀`, the mode frequencies and the classical-equivalent
    /// Rabi amplitude `Σ_j 2Ω_j|α_j|` at the lattice centres.
    pub fn omega_max(&self) -> f64 {
        let rabi: f64 = self.spec.modes.iter().map(|m| 2.0 * m.coupling.abs() * m.center.norm()).sum();
        self.spec.modes.iter().map(|m| m.omega).fold(self.spec.omega0.max(rabi), f64::max)
    }

    pub fn default_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_max() / 200.0
    }

    /// Per-mode matrices of the moving states in branch `s` (`s_l`) and the
    /// cross-branch overlaps to branch `−s` (`−s` on the right).
    fn moving(&self, s: f64, t: f64) -> Vec<Vec<(C64, C64)>> {
        self.spec.modes.iter().zip(&self.points).map(|(m, p)| carriers(m, p, s, t)).collect()
    }

    /// `G_j^{-1} M_j^{s,−s}(t)` for every mode.
    fn coupling_blocks(&self, s: f64, t: f64) -> Vec<Square> {
        let left = self.moving(s, t);
        let right = self.moving(-s, t);
        (0..self.dims.len())
            .map(|j| {
                let (l, r) = (&left[j], &right[j]);
                let m = Square::from_fn(l.len(), |a, b| l[a].1.conj() * r[b].1 * overlap(l[a].0, r[b].0));
                self.gram_inv[j].mul(&m)
            })
            .collect()
    }

    /// `(⊗_j K_j) input`: each factor acts on the leading axis, after which the
    /// axes are rotated so the next mode leads. Works on split real/imaginary
    /// parts so the inner loop vectorizes.
    fn apply_all(&self, blocks: &[Square], input: &[C64], out: &mut [C64], scratch: &mut Planar) {
        let total = input.len();
        let Planar { re, im, tre, tim } = scratch;
        for (k, c) in input.iter().enumerate() {
            re[k] = c.re;
            im[k] = c.im;
        }
        for m in blocks {
            let d = m.n;
            let rest = total / d;
            tre.fill(0.0);
            tim.fill(0.0);
            for i in 0..d {
                let (dr, di) = (&mut tre[i * rest..(i + 1) * rest], &mut tim[i * rest..(i + 1) * rest]);
                for ip in 0..d {
                    let kv = m.v[i * d + ip];
                    if kv == ZERO {
                        continue;
                    }
                    let (xr, xi) = (&re[ip * rest..(ip + 1) * rest], &im[ip * rest..(ip + 1) * rest]);
                    for r in 0..rest {
                        dr[r] += kv.re * xr[r] - kv.im * xi[r];
                        di[r] += kv.re * xi[r] + kv.im * xr[r];
                    }
                }
            }
            for i in 0..d {
                for r in 0..rest {
                    re[r * d + i] = tre[i * rest + r];
                    im[r * d + i] = tim[i * rest + r];
                }
            }
        }
        for (k, c) in out.iter_mut().enumerate() {
            *c = C64::new(re[k], im[k]);
        }
    }

    /// Expectation values at `state.t`.
    pub fn observe(&self, state: &LatticeState) -> Result<LatticeReading> {
        let d = self.dim();
        if state.plus.len() != d || state.minus.len() != d {
            return Err(Error::Dimension(format!("lattice state of length {} for dimension {d}", state.plus.len())));
        }
        let nm = self.dims.len();
        let mut tmp = vec![ZERO; d];
        let mut acc_norm = [0.0; 2];
        let mut moments = vec![[ZERO; 7]; nm];
        let mut joint = 0.0;
        for (bi, (s, c)) in [(1.0, &state.plus), (-1.0, &state.minus)].into_iter().enumerate() {
            let mv = self.moving(s, state.t);
            // phased single-mode operator matrices: 1, a, a², N, N², aN − Na†, a − a†
            let ops: Vec<[Square; 7]> = mv
                .iter()
                .map(|m| {
                    let el = |f: &dyn Fn(C64, C64) -> C64| {
                        Square::from_fn(m.len(), |a, b| {
                            let (x, y) = (m[a].0, m[b].0);
                            m[a].1.conj() * m[b].1 * overlap(x, y) * f(x, y)
                        })
                    };
                    [
                        el(&|_, _| C64::new(1.0, 0.0)),
                        el(&|_, y| y),
                        el(&|_, y| y * y),
                        el(&|x, y| x.conj() * y),
                        el(&|x, y| x.conj() * x.conj() * y * y + x.conj() * y),
                        el(&|x, y| x.conj() * y * y + y - x.conj() * x.conj() * y - x.conj()),
                        el(&|x, y| y - x.conj()),
                    ]
                })
                .collect();
            // reduced matrices per mode
            for j in 0..nm {
                let mut v = c.clone();
                for k in 0..nm {
                    if k != j {
                        apply_axis(&ops[k][0], &self.dims, k, &v, &mut tmp);
                        v.copy_from_slice(&tmp);
                    }
                }
                let r = reduce_axis(c, &v, &self.dims, j);
                if j == 0 {
                    acc_norm[bi] = trace_product(&r, &ops[0][0]).re;
                }
                for (q, op) in ops[j].iter().enumerate().skip(1) {
                    let val = trace_product(&r, op);
                    moments[j][q - 1] += if q >= 5 { val * s } else { val };
                }
            }
            if nm == 3 {
                let mut v = c.clone();
                for (k, op) in ops.iter().enumerate() {
                    apply_axis(&op[3], &self.dims, k, &v, &mut tmp);
                    v.copy_from_slice(&tmp);
                }
                joint += c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().re;
            }
        }
        let norm = acc_norm[0] + acc_norm[1];
        if !(norm > 0.0) {
            return Err(Error::Undefined("lattice state has zero norm".into()));
        }
        let modes: Vec<ModeMoments> = moments
            .iter()
            .map(|m| ModeMoments {
                a: m[0] / norm,
                a2: m[1] / norm,
                n: m[2].re / norm,
                n2: m[3].re / norm,
                // iσ_x(aN − Na†), iσ_x(a − a†)
                u_n_minus: (C64::new(0.0, 1.0) * m[4]).re / norm,
                u_minus: (C64::new(0.0, 1.0) * m[5]).re / norm,
            })
            .collect();
        let g3 = if nm == 3 {
            let means: Vec<f64> = modes.iter().map(|m| m.n).collect();
            ratio(joint / norm, &means).ok()
        } else {
            None
        };
        Ok(LatticeReading {
            t: state.t,
            norm,
            sigma_x: (acc_norm[0] - acc_norm[1]) / norm,
            e_mean: modes.iter().map(|m| m.a.re).sum(),
            modes,
            g3,
        })
    }

    /// Integrate the coefficients over `grid` (starting at `init.t = grid[0]`),
    /// calling `visit` with each sampled state.
    pub fn evolve_with<F>(&self, init: &LatticeState, grid: &[f64], max_step: Option<f64>, mut visit: F) -> Result<(f64, LatticeState)>
    where
        F: FnMut(&LatticeState) -> Result<()>,
    {
        if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("time grid must be non-empty and increasing".into()));
        }
        if (init.t - grid[0]).abs() > 1e-12 * grid[0].abs().max(1.0) {
            return Err(Error::InvalidParameter("initial state time must equal the first grid point".into()));
        }
        let d = self.dim();
        if init.plus.len() != d || init.minus.len() != d {
            return Err(Error::Dimension(format!("lattice state of length {} for dimension {d}", init.plus.len())));
        }
        let step = max_step.unwrap_or_else(|| self.default_step());
        let half = 0.5 * self.spec.omega0;
        let mut scratch = Planar::new(d);
        // ⟨s|σ_z|−s⟩ = −1 with |±⟩ = (|g⟩ ± |e⟩)/√2, σ_z|g⟩ = −|g⟩
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
            if half == 0.0 {
                dy.fill(ZERO);
                return;
            }
            let (yp, ym) = y.split_at(d);
            let (dp, dm) = dy.split_at_mut(d);
            let kp = self.coupling_blocks(1.0, t);
            self.apply_all(&kp, ym, dp, &mut scratch);
            let km = self.coupling_blocks(-1.0, t);
            self.apply_all(&km, yp, dm, &mut scratch);
            let f = C64::new(0.0, half);
            for v in dy.iter_mut() {
                *v *= f;
            }
        };
        let mut f = rhs;
        let mut y: Vec<C64> = init.plus.iter().chain(&init.minus).copied().collect();
        let mut rk = Rk4::new(2 * d);
        let mut state = init.clone();
        let norm0 = self.norm(&state);
        let mut drift = 0.0f64;
        for (k, &t) in grid.iter().enumerate() {
            if k > 0 {
                integrate_interval(&mut rk, &mut f, grid[k - 1], t, step, &mut y);
            }
            state = LatticeState { t, plus: y[..d].to_vec(), minus: y[d..].to_vec() };
            let dn = (self.norm(&state) - norm0).abs();
            drift = drift.max(dn);
            if dn > NORM_ABORT {
                return Err(Error::NormDrift { drift: dn, t, limit: NORM_ABORT });
            }
            visit(&state)?;
        }
        Ok((drift, state))
    }

    pub fn evolve(&self, init: &LatticeState, grid: &[f64], max_step: Option<f64>) -> Result<LatticeTrajectory> {
        let mut readings = Vec::with_capacity(grid.len());
        let (max_norm_drift, final_state) = self.evolve_with(init, grid, max_step, |s| {
            readings.push(self.observe(s)?);
            Ok(())
        })?;
        Ok(LatticeTrajectory { readings, max_norm_drift, condition: self.condition, final_state })
    }

    /// `Σ_s c^s† G c^s`.
    pub fn norm(&self, state: &LatticeState) -> f64 {
        let d = self.dim();
        let mut a = vec![ZERO; d];
        let mut scratch = Planar::new(d);
        let mut total = 0.0;
        for c in [&state.plus, &state.minus] {
            self.apply_all(&self.gram, c, &mut a, &mut scratch);
            total += c.iter().zip(&a).map(|(x, y)| x.conj() * y).sum::<C64>().re;
        }
        total
    }
}
