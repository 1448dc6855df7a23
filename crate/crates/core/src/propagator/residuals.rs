//! Exact operator equations of motion checked against sampled trajectories.
//!
//! Each equation `d⟨O⟩/dt = ⟨R_const⟩ + Ω(t)⟨R_drive⟩` is tested by comparing a
//! central difference of `⟨O⟩` with the right-hand side at the middle sample.
//! Notation: `U = σ_x`, `V = −σ_y`, `W = σ_z`; for `X ∈ {U, V, W}`:
//! `X^+ = X(a+a†)`, `X^− = iX(a−a†)`, `X^{++} = X(a²+a†²)`, `X^{−−} = iX(a²−a†²)`,
//! `X^{N+} = X(aN+Na†)`, `X^{N−} = iX(aN−Na†)`.

use std::collections::VecDeque;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{ModelA, Trajectory};
use crate::drive::DriveConfig;
use crate::error::{Error, Result};
use crate::hilbert::{to_plain, BasisConverter, CompiledOp, Ladder, OperatorSpec, Pauli, QuantumState};

/// `d⟨lhs⟩/dt = ⟨constant⟩ + Ω(t)⟨drive⟩`
#[derive(Clone, Debug)]
pub struct AppBEquation {
    pub name: String,
    pub lhs: OperatorSpec,
    pub constant: OperatorSpec,
    pub drive: OperatorSpec,
}

struct Ops {
    n: usize,
    modes: Vec<(f64, f64)>,
}

impl Ops {
    fn i() -> C64 {
        C64::new(0.0, 1.0)
    }
    fn id() -> OperatorSpec {
        OperatorSpec::identity()
    }
    fn u() -> OperatorSpec {
        OperatorSpec::pauli(Pauli::X)
    }
    fn v() -> OperatorSpec {
        OperatorSpec::pauli(Pauli::Y).scale(-1.0)
    }
    fn w() -> OperatorSpec {
        OperatorSpec::pauli(Pauli::Z)
    }
    fn word(&self, w: &[Ladder]) -> OperatorSpec {
        OperatorSpec::word(self.n, w)
    }
    fn num(&self) -> OperatorSpec {
        self.word(&[Ladder::Number])
    }
    /// `a + a†` of mode `j`
    fn qx_of(j: usize) -> OperatorSpec {
        OperatorSpec::a(j).plus(&OperatorSpec::ad(j))
    }
    fn qx(&self) -> OperatorSpec {
        Self::qx_of(self.n)
    }
    /// `i(a† − a)`
    fn qy(&self) -> OperatorSpec {
        OperatorSpec::ad(self.n).minus(&OperatorSpec::a(self.n)).scale(Self::i())
    }
    fn a2(&self) -> OperatorSpec {
        self.word(&[Ladder::Lower, Ladder::Lower])
    }
    fn ad2(&self) -> OperatorSpec {
        self.word(&[Ladder::Raise, Ladder::Raise])
    }
    /// `a†² + a²`
    fn q2x(&self) -> OperatorSpec {
        self.ad2().plus(&self.a2())
    }
    /// `i(a†² − a²)`
    fn q2y(&self) -> OperatorSpec {
        self.ad2().minus(&self.a2()).scale(Self::i())
    }
    fn pm(&self, x: &OperatorSpec, plus: bool) -> OperatorSpec {
        if plus {
            x.times(&self.qx())
        } else {
            x.times(&OperatorSpec::a(self.n).minus(&OperatorSpec::ad(self.n))).scale(Self::i())
        }
    }
    fn pm2(&self, x: &OperatorSpec, plus: bool) -> OperatorSpec {
        if plus {
            x.times(&self.a2().plus(&self.ad2()))
        } else {
            x.times(&self.a2().minus(&self.ad2())).scale(Self::i())
        }
    }
    fn pmn(&self, x: &OperatorSpec, plus: bool) -> OperatorSpec {
        use Ladder::*;
        let an = self.word(&[Lower, Number]);
        let nad = self.word(&[Number, Raise]);
        if plus {
            x.times(&an.plus(&nad))
        } else {
            x.times(&an.minus(&nad)).scale(Self::i())
        }
    }
    fn xn(&self, x: &OperatorSpec) -> OperatorSpec {
        x.times(&self.num())
    }
    /// `Σ_{j≠n} Ω_j X (a_j + a_j†)`: partner of every `Ω(t) X` term.
    fn cross(&self, x: &OperatorSpec) -> OperatorSpec {
        let mut out = OperatorSpec::zero();
        for (j, &(_, g)) in self.modes.iter().enumerate() {
            if j != self.n && g != 0.0 {
                out = out.plus(&x.times(&Self::qx_of(j)).scale(g));
            }
        }
        out
    }
}

fn eq(name: String, lhs: OperatorSpec, constant: OperatorSpec, drive: OperatorSpec) -> AppBEquation {
    AppBEquation { name, lhs, constant, drive }
}

/// The full equation set for every mode of `model`.
pub fn appb_equations(model: &ModelA) -> Vec<AppBEquation> {
    let w0 = model.omega0;
    let modes: Vec<(f64, f64)> = model.modes.modes().iter().map(|m| (m.omega, m.coupling)).collect();
    let (u, v, w) = (Ops::u(), Ops::v(), Ops::w());
    let mut out = Vec::new();

    let sum_plus = |x: &OperatorSpec| {
        let mut s = OperatorSpec::zero();
        for (j, &(_, g)) in modes.iter().enumerate() {
            s = s.plus(&x.times(&Ops::qx_of(j)).scale(g));
        }
        s
    };
    out.push(eq("U".into(), u.clone(), v.scale(w0), OperatorSpec::zero()));
    out.push(eq("V".into(), v.clone(), u.scale(-w0).plus(&sum_plus(&w)), w.clone()));
    out.push(eq("W".into(), w.clone(), sum_plus(&v).scale(-1.0), v.scale(-1.0)));

    let multi = modes.len() > 1;
    for (n, &(wn, g)) in modes.iter().enumerate() {
        let o = Ops { n, modes: modes.clone() };
        let name = |s: &str| if multi { format!("{s}[{n}]") } else { s.to_string() };
        let zero = OperatorSpec::zero();
        let id = Ops::id();
        let nn = o.num();
        let (up, um) = (o.pm(&u, true), o.pm(&u, false));
        let (vp, vm) = (o.pm(&v, true), o.pm(&v, false));
        let (wp, wm) = (o.pm(&w, true), o.pm(&w, false));
        let (upp, umm) = (o.pm2(&u, true), o.pm2(&u, false));
        let (vpp, vmm) = (o.pm2(&v, true), o.pm2(&v, false));
        let (wpp, wmm) = (o.pm2(&w, true), o.pm2(&w, false));
        let (unp, unm) = (o.pmn(&u, true), o.pmn(&u, false));
        let (vnp, vnm) = (o.pmn(&v, true), o.pmn(&v, false));
        let (wnp, wnm) = (o.pmn(&w, true), o.pmn(&w, false));
        let (un, vn, wn_) = (o.xn(&u), o.xn(&v), o.xn(&w));
        let (qx, qy, q2x, q2y) = (o.qx(), o.qy(), o.q2x(), o.q2y());
        let i = Ops::i();
        let nn_nn = nn.times(&nn);
        let n_ad2 = nn.times(&o.ad2());
        let a2_n = o.a2().times(&nn);
        let i_a2_minus = o.a2().minus(&o.ad2()).scale(i);
        let two_ph = n_ad2.plus(&a2_n);
        let two_ph_i = n_ad2.minus(&a2_n).scale(i);

        out.push(eq(name("N"), nn.clone(), um.scale(0.5 * g), zero.clone()));
        out.push(eq(name("U+"), up.clone(), vp.scale(w0).minus(&um.scale(wn)), zero.clone()));
        out.push(eq(
            name("U-"),
            um.clone(),
            vm.scale(w0).plus(&up.scale(wn)).plus(&id.scale(g)),
            zero.clone(),
        ));
        out.push(eq(
            name("V+"),
            vp.clone(),
            up.scale(-w0)
                .minus(&vm.scale(wn))
                .plus(&o.cross(&wp))
                .plus(&w.plus(&wpp).plus(&wn_.scale(2.0)).scale(g)),
            wp.clone(),
        ));
        out.push(eq(
            name("W+"),
            wp.clone(),
            wm.scale(-wn).minus(&o.cross(&vp)).minus(&v.plus(&vpp).plus(&vn.scale(2.0)).scale(g)),
            vp.scale(-1.0),
        ));
        out.push(eq(
            name("V-"),
            vm.clone(),
            um.scale(-w0).plus(&vp.scale(wn)).plus(&o.cross(&wm)).plus(&wmm.scale(g)),
            wm.clone(),
        ));
        out.push(eq(
            name("W-"),
            wm.clone(),
            wp.scale(wn).minus(&o.cross(&vm)).minus(&vmm.scale(g)),
            vm.scale(-1.0),
        ));
        out.push(eq(name("a+a'"), qx.clone(), qy.scale(wn), zero.clone()));
        out.push(eq(name("i(a'-a)"), qy.clone(), u.scale(-g).minus(&qx.scale(wn)), zero.clone()));
        out.push(eq(name("i(a'2-a2)"), q2y.clone(), up.scale(-g).minus(&q2x.scale(2.0 * wn)), zero.clone()));
        out.push(eq(name("a'2+a2"), q2x.clone(), um.scale(-g).plus(&q2y.scale(2.0 * wn)), zero.clone()));
        out.push(eq(name("UN"), un.clone(), vn.scale(w0).minus(&qy.scale(0.5 * g)), zero.clone()));
        out.push(eq(
            name("VN"),
            vn.clone(),
            un.scale(-w0).plus(&o.cross(&wn_)).plus(&wnp.scale(g)).minus(&wp.scale(0.5 * g)),
            wn_.clone(),
        ));
        out.push(eq(
            name("WN"),
            wn_.clone(),
            o.cross(&vn).scale(-1.0).minus(&vnp.scale(g)).plus(&vp.scale(0.5 * g)),
            vn.scale(-1.0),
        ));
        out.push(eq(
            name("U++"),
            upp.clone(),
            vpp.scale(w0).plus(&qy.scale(g)).minus(&umm.scale(2.0 * wn)),
            zero.clone(),
        ));
        out.push(eq(
            name("U--"),
            umm.clone(),
            vmm.scale(w0).plus(&qx.scale(g)).plus(&upp.scale(2.0 * wn)),
            zero.clone(),
        ));
        out.push(eq(
            name("V++"),
            vpp.clone(),
            upp.scale(-w0)
                .plus(&o.cross(&wpp))
                .minus(&vmm.scale(2.0 * wn))
                .plus(&w.times(&qx.anticommutator(&q2x)).scale(0.5 * g)),
            wpp.clone(),
        ));
        out.push(eq(
            name("V--"),
            vmm.clone(),
            umm.scale(-w0)
                .plus(&o.cross(&wmm))
                .plus(&vpp.scale(2.0 * wn))
                .plus(&w.times(&qx.anticommutator(&i_a2_minus)).scale(0.5 * g)),
            wmm.clone(),
        ));
        out.push(eq(
            name("W++"),
            wpp.clone(),
            o.cross(&vpp)
                .scale(-1.0)
                .minus(&wmm.scale(2.0 * wn))
                .minus(&v.times(&qx.anticommutator(&q2x)).scale(0.5 * g)),
            vpp.scale(-1.0),
        ));
        out.push(eq(
            name("W--"),
            wmm.clone(),
            o.cross(&vmm)
                .scale(-1.0)
                .plus(&wpp.scale(2.0 * wn))
                .minus(&v.times(&qx.anticommutator(&i_a2_minus)).scale(0.5 * g)),
            vmm.scale(-1.0),
        ));
        out.push(eq(
            name("UN+"),
            unp.clone(),
            vnp.scale(w0).minus(&unm.scale(wn)).minus(&q2y.scale(0.5 * g)),
            zero.clone(),
        ));
        out.push(eq(
            name("UN-"),
            unm.clone(),
            vnm.scale(w0)
                .plus(&unp.scale(wn))
                .plus(&id.plus(&nn.scale(2.0)).scale(g))
                .minus(&q2x.scale(0.5 * g)),
            zero.clone(),
        ));
        out.push(eq(
            name("VN+"),
            vnp.clone(),
            unp.scale(-w0)
                .plus(&o.cross(&wnp))
                .minus(&vnm.scale(wn))
                .minus(&wpp.scale(0.5 * g))
                .plus(&w.plus(&wn_.scale(2.0)).plus(&w.times(&nn_nn).scale(2.0)).scale(g))
                .plus(&w.times(&two_ph).scale(g)),
            wnp.clone(),
        ));
        out.push(eq(
            name("VN-"),
            vnm.clone(),
            unm.scale(-w0)
                .plus(&o.cross(&wnm))
                .plus(&vnp.scale(wn))
                .minus(&wmm.scale(0.5 * g))
                .minus(&w.times(&two_ph_i).scale(g)),
            wnm.clone(),
        ));
        out.push(eq(
            name("WN+"),
            wnp.clone(),
            o.cross(&vnp)
                .scale(-1.0)
                .minus(&wnm.scale(wn))
                .plus(&vpp.scale(0.5 * g))
                .minus(
                    &v.times(&id.plus(&nn.scale(2.0)).plus(&nn_nn.scale(2.0)).plus(&two_ph)).scale(g),
                ),
            vnp.scale(-1.0),
        ));
        out.push(eq(
            name("WN-"),
            wnm.clone(),
            o.cross(&vnm)
                .scale(-1.0)
                .plus(&wnp.scale(wn))
                .plus(&vmm.scale(0.5 * g))
                .plus(&v.times(&two_ph_i).scale(g)),
            vnm.scale(-1.0),
        ));
    }
    out
}

/// Residuals of one equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationResidual {
    pub name: String,
    /// Largest residual with the central difference over `±h`.
    pub max_residual: f64,
    /// Same with `±2h` on the same samples.
    pub max_residual_double: f64,
    /// `max_residual_double / max_residual`; ≈ 4 when differencing dominates.
    pub ratio: f64,
    pub differencing_dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub spacing: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub equations: Vec<EquationResidual>,
    /// Some residual exceeds the tolerance and scales like the differencing error.
    pub coarse_grid: bool,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.equations.iter().map(|e| e.max_residual).fold(0.0, f64::max)
    }
}

struct Compiled {
    lhs: CompiledOp,
    constant: CompiledOp,
    drive: CompiledOp,
}

/// Incremental residual evaluation over a uniformly sampled run.
pub struct ResidualStream {
    names: Vec<String>,
    drive: DriveConfig,
    tolerance: f64,
    equations: Vec<AppBEquation>,
    compiled: Option<(Option<BasisConverter>, Vec<Compiled>)>,
    window: VecDeque<(f64, Vec<C64>, Vec<C64>)>,
    spacing: Option<f64>,
    samples: usize,
    max_h: Vec<f64>,
    max_2h: Vec<f64>,
}

impl ResidualStream {
    pub fn new(model: &ModelA, tolerance: f64) -> Self {
        let equations = appb_equations(model);
        let k = equations.len();
        Self {
            names: equations.iter().map(|e| e.name.clone()).collect(),
            drive: model.drive,
            tolerance,
            equations,
            compiled: None,
            window: VecDeque::with_capacity(5),
            spacing: None,
            samples: 0,
            max_h: vec![0.0; k],
            max_2h: vec![0.0; k],
        }
    }

    fn prepare(&mut self, state: &QuantumState) -> Result<()> {
        let plain = to_plain(state, state.labeling())?;
        let basis = plain.basis().clone();
        let conv = if &basis == state.basis() { None } else { Some(BasisConverter::new(state.basis(), &basis)?) };
        let ops = self
            .equations
            .iter()
            .map(|e| {
                Ok(Compiled {
                    lhs: e.lhs.compile(&basis)?,
                    constant: e.constant.compile(&basis)?,
                    drive: e.drive.compile(&basis)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.compiled = Some((conv, ops));
        Ok(())
    }

    pub fn push(&mut self, t: f64, state: &QuantumState) -> Result<()> {
        if self.compiled.is_none() {
            self.prepare(state)?;
        }
        if let Some(&(last, _, _)) = self.window.back() {
            let h = t - last;
            match self.spacing {
                None => self.spacing = Some(h),
                Some(s) if (h - s).abs() > 1e-6 * s => {
                    return Err(Error::InvalidParameter(
                        "residual check needs uniformly spaced samples".into(),
                    ))
                }
                _ => {}
            }
        }
        let (conv, ops) = self.compiled.as_ref().unwrap();
        let plain = match conv {
            Some(c) => c.apply(state)?,
            None => state.clone(),
        };
        let psi = plain.amplitudes();
        let rabi = self.drive.rabi(t);
        let lhs: Vec<C64> = ops.iter().map(|c| c.lhs.expect(psi)).collect();
        let rhs: Vec<C64> =
            ops.iter().map(|c| c.constant.expect(psi) + c.drive.expect(psi) * rabi).collect();
        if self.window.len() == 5 {
            self.window.pop_front();
        }
        self.window.push_back((t, lhs, rhs));
        self.samples += 1;
        if self.window.len() == 5 {
            let h = self.spacing.unwrap();
            let w = &self.window;
            for e in 0..self.names.len() {
                let r = w[2].2[e];
                let d1 = (w[3].1[e] - w[1].1[e]) / (2.0 * h);
                let d2 = (w[4].1[e] - w[0].1[e]) / (4.0 * h);
                self.max_h[e] = self.max_h[e].max((d1 - r).norm());
                self.max_2h[e] = self.max_2h[e].max((d2 - r).norm());
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<ResidualReport> {
        if self.samples < 5 {
            return Err(Error::InvalidParameter("residual check needs at least 5 samples".into()));
        }
        let equations: Vec<EquationResidual> = self
            .names
            .into_iter()
            .zip(self.max_h.iter().zip(&self.max_2h))
            .map(|(name, (&h, &h2))| {
                let ratio = if h > 0.0 { h2 / h } else { f64::NAN };
                EquationResidual {
                    name,
                    max_residual: h,
                    max_residual_double: h2,
                    ratio,
                    differencing_dominated: (3.2..=4.8).contains(&ratio),
                }
            })
            .collect();
        let coarse_grid =
            equations.iter().any(|e| e.max_residual > self.tolerance && e.differencing_dominated);
        Ok(ResidualReport {
            spacing: self.spacing.unwrap_or(0.0),
            samples: self.samples,
            tolerance: self.tolerance,
            equations,
            coarse_grid,
        })
    }
}

/// Residual report of a stored trajectory (uniform sampling required).
pub fn appb_residuals(traj: &Trajectory, tolerance: f64) -> Result<ResidualReport> {
    let mut s = ResidualStream::new(&traj.model, tolerance);
    for (t, st) in traj.times.iter().zip(&traj.states) {
        s.push(*t, st)?;
    }
    s.finish()
}
