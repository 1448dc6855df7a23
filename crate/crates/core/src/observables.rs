//! Photon statistics, noise ellipse and correlations of single states.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    to_plain, BasisConverter, BasisDescriptor, CompiledOp, Ladder, OperatorSpec, Pauli, QuantumState,
};

/// Photon numbers at or below this are treated as vacuum by ratio statistics.
pub const EPS_N: f64 = 1e-12;

/// Squeezing margin below the vacuum variance 1/4.
pub const SQUEEZE_MARGIN: f64 = 1e-12;

/// First and second moments of one mode, plus the σ_x-weighted currents
/// entering the antibunching slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMoments {
    pub n: f64,
    pub n2: f64,
    pub a: C64,
    pub a2: C64,
    /// `⟨U^−⟩ = ⟨iσ_x(a − a†)⟩`
    pub u_minus: f64,
    /// `⟨U^{N−}⟩ = ⟨iσ_x(aN − Na†)⟩`
    pub u_n_minus: f64,
}

impl ModeMoments {
    pub fn is_excited(&self) -> bool {
        self.n > EPS_N
    }

    /// `(⟨N²⟩ − ⟨N⟩ − ⟨N⟩²)/⟨N⟩`, or 0 for `⟨N⟩ ≤ ε_N`.
    pub fn mandel_q(&self) -> f64 {
        if !self.is_excited() {
            return 0.0;
        }
        (self.n2 - self.n - self.n * self.n) / self.n
    }

    /// `⟨N(N−1)⟩/⟨N⟩²`
    pub fn g2(&self) -> Result<f64> {
        self.require_excited("g2")?;
        Ok((self.n2 - self.n) / (self.n * self.n))
    }

    pub fn antibunching_slope(&self, coupling: f64) -> Result<f64> {
        self.require_excited("antibunching slope")?;
        let n = self.n;
        Ok(0.5 * coupling * (self.u_n_minus * n - self.n2 * self.u_minus) / (n * n * n))
    }

    pub fn ellipse(&self) -> NoiseEllipse {
        NoiseEllipse::from_moments(self.n, self.a, self.a2)
    }

    fn require_excited(&self, what: &str) -> Result<()> {
        if self.is_excited() {
            Ok(())
        } else {
            Err(Error::Undefined(format!("{what} needs <N> > {EPS_N:e}, got {:e}", self.n)))
        }
    }
}

/// Quadrature noise ellipse of `X = (a+a†)/2`, `Y = i(a†−a)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseEllipse {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub u_plus: [f64; 2],
    pub u_minus: [f64; 2],
    /// Phase of the mean field `⟨X⟩ + i⟨Y⟩`.
    pub phase: f64,
}

impl NoiseEllipse {
    pub fn from_moments(n: f64, a: C64, a2: C64) -> Self {
        let centred = a2 - a * a;
        let mean = 0.25 * (1.0 + 2.0 * (n - a.norm_sqr()));
        let half = 0.5 * centred.norm();
        let lambda_plus = mean + half;
        let lambda_minus = mean - half;

        // cov(X, Y) = mean·1 + ½[[Re c, Im c], [Im c, −Re c]], c = ⟨a²⟩ − ⟨a⟩²
        let (u_plus, u_minus) = if lambda_plus - lambda_minus <= 1e-12 {
            ([1.0, 0.0], [0.0, 1.0])
        } else {
            let angle = 0.5 * centred.im.atan2(centred.re);
            let (s, c) = angle.sin_cos();
            ([c, s], [-s, c])
        };
        Self { lambda_plus, lambda_minus, u_plus, u_minus, phase: field_phase(a.re, a.im) }
    }

    pub fn is_squeezed(&self) -> bool {
        self.lambda_minus < 0.25 - SQUEEZE_MARGIN
    }
}

/// Phase of `⟨X⟩ + i⟨Y⟩` by the half-angle arctangent; `π` on the negative
/// X axis and 0 at the origin.
pub fn field_phase(x: f64, y: f64) -> f64 {
    if x > 0.0 || y != 0.0 {
        2.0 * (y / (x + x.hypot(y))).atan()
    } else if x < 0.0 {
        std::f64::consts::PI
    } else {
        0.0
    }
}

/// Compiled observables for repeated evaluation on states sharing a basis.
pub struct Probe {
    source: BasisDescriptor,
    converter: Option<BasisConverter>,
    modes: Vec<[CompiledOp; 6]>,
    sigma_x: CompiledOp,
    sigma_z: CompiledOp,
}

/// Everything [`Probe`] evaluates on one state.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReading {
    pub sigma_x: f64,
    pub sigma_z: f64,
    pub modes: Vec<ModeMoments>,
}

fn mode_ops(k: usize) -> [OperatorSpec; 6] {
    use Ladder::*;
    let sx = OperatorSpec::pauli(Pauli::X);
    let i = C64::new(0.0, 1.0);
    let u_minus = sx.times(&OperatorSpec::a(k).minus(&OperatorSpec::ad(k))).scale(i);
    let u_n_minus = sx
        .times(&OperatorSpec::word(k, &[Lower, Number]).minus(&OperatorSpec::word(k, &[Number, Raise])))
        .scale(i);
    [
        OperatorSpec::n(k),
        OperatorSpec::word(k, &[Number, Number]),
        OperatorSpec::a(k),
        OperatorSpec::word(k, &[Lower, Lower]),
        u_minus,
        u_n_minus,
    ]
}

impl Probe {
    /// Prepare for states on the basis of `sample`.
    pub fn new(sample: &QuantumState) -> Result<Self> {
        let plain = to_plain(sample, sample.labeling())?;
        let pb = plain.basis().clone();
        let compile = |op: &OperatorSpec| op.compile(&pb);
        let modes = (0..sample.n_modes())
            .map(|k| {
                let ops = mode_ops(k);
                Ok([
                    compile(&ops[0])?,
                    compile(&ops[1])?,
                    compile(&ops[2])?,
                    compile(&ops[3])?,
                    compile(&ops[4])?,
                    compile(&ops[5])?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        let converter = if &pb == sample.basis() {
            None
        } else {
            Some(BasisConverter::new(sample.basis(), &pb)?)
        };
        Ok(Self {
            source: sample.basis().clone(),
            sigma_x: compile(&OperatorSpec::pauli(Pauli::X))?,
            sigma_z: compile(&OperatorSpec::pauli(Pauli::Z))?,
            converter,
            modes,
        })
    }

    pub(crate) fn plain_state(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.basis() != &self.source {
            return Err(Error::Dimension("probe used on a state with a different basis".into()));
        }
        match &self.converter {
            None => Ok(state.clone()),
            Some(c) => c.apply(state),
        }
    }

    /// Plain-Fock basis the probe evaluates on.
    pub fn plain_basis(&self) -> &BasisDescriptor {
        self.converter.as_ref().map_or(&self.source, |c| c.target())
    }

    pub fn read(&self, state: &QuantumState) -> Result<ProbeReading> {
        let p = self.plain_state(state)?;
        let psi = p.amplitudes();
        let modes = self
            .modes
            .iter()
            .map(|ops| ModeMoments {
                n: ops[0].expect(psi).re,
                n2: ops[1].expect(psi).re,
                a: ops[2].expect(psi),
                a2: ops[3].expect(psi),
                u_minus: ops[4].expect(psi).re,
                u_n_minus: ops[5].expect(psi).re,
            })
            .collect();
        Ok(ProbeReading { sigma_x: self.sigma_x.expect(psi).re, sigma_z: self.sigma_z.expect(psi).re, modes })
    }
}

fn check_mode(state: &QuantumState, k: usize) -> Result<()> {
    if k >= state.n_modes() {
        return Err(Error::Dimension(format!("mode {k} requested, state has {} mode(s)", state.n_modes())));
    }
    Ok(())
}

pub fn mode_moments(state: &QuantumState, mode: usize) -> Result<ModeMoments> {
    check_mode(state, mode)?;
    let plain = to_plain(state, state.labeling())?;
    let psi = plain.amplitudes();
    let ops = mode_ops(mode);
    let e = |op: &OperatorSpec| -> Result<C64> { Ok(op.compile(plain.basis())?.expect(psi)) };
    Ok(ModeMoments {
        n: e(&ops[0])?.re,
        n2: e(&ops[1])?.re,
        a: e(&ops[2])?,
        a2: e(&ops[3])?,
        u_minus: e(&ops[4])?.re,
        u_n_minus: e(&ops[5])?.re,
    })
}

pub fn mandel_q(state: &QuantumState, mode: usize) -> Result<f64> {
    Ok(mode_moments(state, mode)?.mandel_q())
}

pub fn g2_equal_time(state: &QuantumState, mode: usize) -> Result<f64> {
    mode_moments(state, mode)?.g2()
}

pub fn antibunching_slope(state: &QuantumState, mode: usize, coupling: f64) -> Result<f64> {
    mode_moments(state, mode)?.antibunching_slope(coupling)
}

pub fn noise_ellipse(state: &QuantumState, mode: usize) -> Result<NoiseEllipse> {
    Ok(mode_moments(state, mode)?.ellipse())
}

/// Occupation-resolved probabilities on a plain basis: returns
/// `(probabilities per mode-block index, mode dims)` with the atom traced out.
fn block_weights(state: &QuantumState) -> Result<(Vec<f64>, Vec<usize>)> {
    let plain = to_plain(state, state.labeling())?;
    let block = plain.basis().mode_block();
    let amps = plain.amplitudes();
    let w = (0..block).map(|k| amps[k].norm_sqr() + amps[block + k].norm_sqr()).collect();
    Ok((w, plain.basis().mode_dims()))
}

/// `⟨Π_k N_{m_k}⟩` together with each `⟨N_{m_k}⟩`, all from one pass.
fn number_products(state: &QuantumState, modes: &[usize]) -> Result<(f64, Vec<f64>)> {
    for &m in modes {
        check_mode(state, m)?;
    }
    let (w, dims) = block_weights(state)?;
    let mut occ = vec![0usize; dims.len()];
    let mut joint = 0.0;
    let mut means = vec![0.0; modes.len()];
    for (idx, p) in w.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        crate::hilbert::decode(idx, &dims, &mut occ);
        let mut prod = *p;
        for (k, &m) in modes.iter().enumerate() {
            means[k] += occ[m] as f64 * p;
            prod *= occ[m] as f64;
        }
        joint += prod;
    }
    Ok((joint, means))
}

/// `g²_ij = ⟨N_iN_j⟩/(⟨N_i⟩⟨N_j⟩)`; bit-exactly symmetric in `(i, j)`.
pub fn cross_correlation(state: &QuantumState, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidParameter("cross-correlation needs two distinct modes".into()));
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let (joint, means) = number_products(state, &[lo, hi])?;
    ratio(joint, &means)
}

/// `g³ = ⟨N_iN_jN_k⟩/(⟨N_i⟩⟨N_j⟩⟨N_k⟩)`; symmetric in the indices.
pub fn three_mode_g3(state: &QuantumState, i: usize, j: usize, k: usize) -> Result<f64> {
    let mut idx = [i, j, k];
    idx.sort_unstable();
    if idx[0] == idx[1] || idx[1] == idx[2] {
        return Err(Error::InvalidParameter("g3 needs three distinct modes".into()));
    }
    let (joint, means) = number_products(state, &idx)?;
    ratio(joint, &means)
}

pub(crate) fn ratio(joint: f64, means: &[f64]) -> Result<f64> {
    if let Some(m) = means.iter().find(|m| **m <= EPS_N) {
        return Err(Error::Undefined(format!("mode mean {m:e} is at or below {EPS_N:e}")));
    }
    Ok(joint / means.iter().product::<f64>())
}

/// ⟨N⟩-weighted time average of Q: `Σ(⟨ΔN²⟩ − ⟨N⟩)/Σ⟨N⟩` over the samples.
pub fn weighted_mean_q(samples: &[ModeMoments]) -> Option<f64> {
    let (num, den) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), m| (a + (m.n2 - m.n - m.n * m.n), b + m.n));
    (den > EPS_N).then(|| num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomLabel, BasisDescriptor, ONE, ZERO};

    fn single(amps: &[f64], n_max: usize) -> QuantumState {
        let basis = BasisDescriptor::plain(AtomLabel::Energy, &[n_max]).unwrap();
        let mut v = vec![ZERO; n_max + 1];
        for (k, a) in amps.iter().enumerate() {
            v[k] = C64::from(*a);
        }
        QuantumState::product(basis, [ONE, ZERO], &[v]).unwrap()
    }

    #[test]
    fn fock_and_superposition_examples() {
        let one = single(&[0.0, 1.0], 4);
        assert!((mandel_q(&one, 0).unwrap() + 1.0).abs() < 1e-15);
        assert!(g2_equal_time(&one, 0).unwrap().abs() < 1e-15);
        let two = single(&[0.0, 0.0, 1.0], 4);
        assert!((g2_equal_time(&two, 0).unwrap() - 0.5).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sup = single(&[s, 0.0, s], 4);
        assert!((g2_equal_time(&sup, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!(mandel_q(&sup, 0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn vacuum_conventions() {
        let vac = single(&[1.0], 3);
        assert_eq!(mandel_q(&vac, 0).unwrap(), 0.0);
        assert!(matches!(g2_equal_time(&vac, 0), Err(Error::Undefined(_))));
        let e = noise_ellipse(&vac, 0).unwrap();
        assert_eq!((e.lambda_plus, e.lambda_minus), (0.25, 0.25));
        assert_eq!(e.u_plus, [1.0, 0.0]);
        assert!(!e.is_squeezed());
        assert_eq!(e.phase, 0.0);
    }

    #[test]
    fn phase_branches() {
        assert!((field_phase(-1.0, 0.0) - std::f64::consts::PI).abs() < 1e-15);
        assert!((field_phase(1.0, 1.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((field_phase(-1.0, -1e-30) + std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn cross_correlation_examples() {
        let basis = BasisDescriptor::plain(AtomLabel::Energy, &[2, 2]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![ZERO; basis.dim()];
        amps[1] = C64::from(s); // |0,1>
        amps[3] = C64::from(s); // |1,0>
        let st = QuantumState::new(basis.clone(), amps).unwrap();
        assert_eq!(cross_correlation(&st, 0, 1).unwrap(), 0.0);
        let mut amps = vec![ZERO; basis.dim()];
        amps[4] = ONE; // |1,1>
        let st = QuantumState::new(basis, amps).unwrap();
        assert_eq!(cross_correlation(&st, 1, 0).unwrap(), 1.0);
        assert!(cross_correlation(&st, 1, 1).is_err());
    }
}
