use num_complex::Complex64 as C64;
use qhhg::drive::{CouplingRule, DriveConfig};
use qhhg::hilbert::{convert_basis, AtomLabel, BasisDescriptor, QuantumState};
use qhhg::observables::Probe;
use qhhg::propagator::*;

fn short_pulse(a: f64) -> DriveConfig {
    DriveConfig { amplitude: a, omega_e: 0.25, ..DriveConfig::default() }
}

fn max_amp_diff(x: &QuantumState, y: &QuantumState) -> f64 {
    x.amplitudes().iter().zip(y.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

#[test]
fn displaced_matches_direct_fock() {
    let w = 4.0;
    let model = ModelA::new(1.0, short_pulse(5.0), ModeSet::single(w, 0.3, 10).unwrap()).unwrap();
    let direct = ModelA { modes: ModeSet::single(w, 0.3, 16).unwrap(), ..model.clone() };
    let grid = uniform_grid(0.0, model.drive.support_end().unwrap(), 40);
    let init = QuantumState::ground_vacuum(&[10]).unwrap();
    let s = Settings::default();
    let a = propagate_displaced(&init, &model, &grid, &s).unwrap();
    let b = propagate_fock_direct(&QuantumState::ground_vacuum(&[16]).unwrap(), &direct, &grid, &s).unwrap();
    let target = b.states[0].basis().clone();
    for (x, y) in a.states.iter().zip(&b.states) {
        let xp = convert_basis(x, &target).unwrap();
        assert!(max_amp_diff(&xp, y) < 1e-7, "{}", max_amp_diff(&xp, y));
    }
    assert!(a.report.max_norm_drift < 1e-9);
    assert!(b.report.max_norm_drift < 1e-9);
}

/// With ω₀ = 0 and no drive, σ_x is conserved and each branch drives the mode
/// into the coherent state `sγ(1 − e^{−iωt})`.
#[test]
fn forced_oscillator_without_atomic_splitting() {
    let (w, g) = (2.0, 0.8);
    let model = ModelA::new(0.0, DriveConfig::off(), ModeSet::single(w, g, 14).unwrap()).unwrap();
    let gamma = -g / (2.0 * w);
    let grid = uniform_grid(0.0, 7.0, 70);
    let init = QuantumState::ground_vacuum(&[14]).unwrap();
    let tr = propagate_displaced(&init, &model, &grid, &Settings::default()).unwrap();
    let probe = Probe::new(&tr.states[0]).unwrap();
    for (t, st) in grid.iter().zip(&tr.states) {
        let r = probe.read(st).unwrap();
        let n = 2.0 * gamma * gamma * (1.0 - (w * t).cos());
        assert!((r.modes[0].n - n).abs() < 1e-10);
        // ⟨a⟩ averages the two branches to zero; ⟨a²⟩ does not.
        assert!(r.modes[0].a.norm() < 1e-10);
        let alpha = C64::from(gamma) * (C64::new(1.0, 0.0) - C64::from_polar(1.0, -w * t));
        assert!((r.modes[0].a2 - alpha * alpha).norm() < 1e-10);
        // σ_z swaps the branches: −⟨−α|α⟩ = −e^{−2|α|²}
        assert!((r.sigma_z + (-2.0 * alpha.norm_sqr()).exp()).abs() < 1e-10);
    }
}

#[test]
fn uncoupled_mode_stays_in_vacuum() {
    let model = ModelA::new(1.0, short_pulse(8.0), ModeSet::single(3.0, 0.0, 6).unwrap()).unwrap();
    let grid = uniform_grid(0.0, 12.0, 24);
    let init = QuantumState::ground_vacuum(&[6]).unwrap();
    let tr = propagate_displaced(&init, &model, &grid, &Settings::default()).unwrap();
    let probe = Probe::new(&tr.states[0]).unwrap();
    for st in &tr.states {
        let r = probe.read(st).unwrap();
        assert_eq!(r.modes[0].n, 0.0);
        assert!((st.norm() - 1.0).abs() < 1e-10);
    }
}

/// `H(t)` is real in the energy basis, so `ψ(T)*` evolved under `Ω(T − t)`
/// returns to `ψ(0)*`.
#[test]
fn time_reversal_with_mirrored_pulse() {
    let model = ModelA::new(1.0, short_pulse(4.0), ModeSet::single(3.0, 0.4, 12).unwrap()).unwrap();
    let t_end = model.drive.support_end().unwrap();
    let grid = uniform_grid(0.0, t_end, 8);
    let s = Settings { max_step: Some(1e-3), ..Default::default() };
    let init = QuantumState::ground_vacuum(&[12]).unwrap();
    let fwd = propagate_fock_direct(&init, &model, &grid, &s).unwrap();
    let end = fwd.states.last().unwrap();
    let conj: Vec<C64> = end.amplitudes().iter().map(|c| c.conj()).collect();
    let back_init = QuantumState::new(end.basis().clone(), conj).unwrap();
    let mirrored = ModelA { drive: model.drive.mirrored().unwrap(), ..model.clone() };
    let back = propagate_fock_direct(&back_init, &mirrored, &grid, &s).unwrap();
    let last = back.states.last().unwrap();
    let want: Vec<C64> = init.amplitudes().iter().map(|c| c.conj()).collect();
    let err = last.amplitudes().iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn norm_is_conserved_at_default_step() {
    let model = ModelA::new(1.0, short_pulse(12.0), ModeSet::single(7.0, 0.2, 8).unwrap()).unwrap();
    let grid = uniform_grid(0.0, model.drive.support_end().unwrap(), 10);
    let init = QuantumState::ground_vacuum(&[8]).unwrap();
    let tr = propagate_displaced(&init, &model, &grid, &Settings::default()).unwrap();
    assert!(tr.report.max_norm_drift <= 1e-9, "{}", tr.report.max_norm_drift);
    assert!(tr.report.warnings.is_empty());
}

#[test]
fn swapping_modes_commutes_with_propagation() {
    let m1 = Mode { omega: 3.0, coupling: 0.3, n_max: 6 };
    let m2 = Mode { omega: 5.0, coupling: 0.2, n_max: 5 };
    let drive = short_pulse(6.0);
    let ab = ModelA::new(1.0, drive, ModeSet::new(vec![m1, m2]).unwrap()).unwrap();
    let ba = ModelA::new(1.0, drive, ModeSet::new(vec![m2, m1]).unwrap()).unwrap();
    let grid = uniform_grid(0.0, 6.0, 6);
    let s = Settings::default();
    let x = propagate_two_mode_joint(&QuantumState::ground_vacuum(&[6, 5]).unwrap(), &ab, &grid, &s).unwrap();
    let y = propagate_two_mode_joint(&QuantumState::ground_vacuum(&[5, 6]).unwrap(), &ba, &grid, &s).unwrap();
    for (p, q) in x.states.iter().zip(&y.states) {
        let ps = p.swap_modes(0, 1).unwrap();
        assert_eq!(ps.basis(), q.basis());
        assert!(max_amp_diff(&ps, q) < 1e-12);
    }
}

#[test]
fn two_mode_joint_needs_two_modes() {
    let model = ModelA::new(1.0, short_pulse(1.0), ModeSet::single(3.0, 0.1, 4).unwrap()).unwrap();
    let init = QuantumState::ground_vacuum(&[4]).unwrap();
    assert!(propagate_two_mode_joint(&init, &model, &[0.0, 1.0], &Settings::default()).is_err());
}

#[test]
fn scan_columns_equal_standalone_runs() {
    let drive = short_pulse(6.0);
    let rule = CouplingRule::Sqrt { c: 0.05 };
    let omegas = [2.0, 3.0, 5.0];
    let grid = uniform_grid(0.0, 12.0, 12);
    let s = Settings::default();
    let spec = scan_modes(&omegas, 1.0, &drive, &rule, 6, &grid, &s).unwrap();
    for (col, &w) in spec.columns.iter().zip(&omegas) {
        let model = ModelA::new(1.0, drive, ModeSet::from_rule(&[w], &rule, 6).unwrap()).unwrap();
        let solo = ModeSeries::run(&model, &grid, &s).unwrap();
        assert_eq!(col.omega, w);
        assert_eq!(col.records, solo.records);
    }
}

#[test]
fn bad_grids_and_mismatched_states_are_rejected() {
    let model = ModelA::new(1.0, short_pulse(1.0), ModeSet::single(3.0, 0.1, 4).unwrap()).unwrap();
    let init = QuantumState::ground_vacuum(&[4]).unwrap();
    let s = Settings::default();
    assert!(propagate_displaced(&init, &model, &[], &s).is_err());
    assert!(propagate_displaced(&init, &model, &[1.0, 0.5], &s).is_err());
    let two = QuantumState::ground_vacuum(&[4, 4]).unwrap();
    assert!(propagate_fock_direct(&two, &model, &[0.0, 1.0], &s).is_err());
    let capped = Settings { dim_cap: 5, ..s };
    assert!(matches!(
        propagate_fock_direct(&init, &model, &[0.0, 1.0], &capped),
        Err(qhhg::Error::DimensionCap { .. })
    ));
}

#[test]
fn energy_labeled_initial_states_are_accepted_by_both_propagators() {
    let basis = BasisDescriptor::plain(AtomLabel::Energy, &[5]).unwrap();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut mode = vec![C64::new(0.0, 0.0); 6];
    mode[1] = C64::new(1.0, 0.0);
    let init = QuantumState::product(basis, [C64::new(s2, 0.0), C64::new(0.0, s2)], &[mode]).unwrap();
    let model = ModelA::new(1.0, short_pulse(2.0), ModeSet::single(2.5, 0.2, 5).unwrap()).unwrap();
    let big = ModelA { modes: ModeSet::single(2.5, 0.2, 12).unwrap(), ..model.clone() };
    let grid = uniform_grid(0.0, 3.0, 3);
    let s = Settings::default();
    let a = propagate_displaced(&init, &model, &grid, &s).unwrap();
    let init_big = convert_basis(&init, &BasisDescriptor::plain(AtomLabel::Energy, &[12]).unwrap()).unwrap();
    let b = propagate_fock_direct(&init_big, &big, &grid, &s).unwrap();
    let pa = Probe::new(&a.states[0]).unwrap();
    let pb = Probe::new(&b.states[0]).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        let (rx, ry) = (pa.read(x).unwrap(), pb.read(y).unwrap());
        assert!((rx.modes[0].n - ry.modes[0].n).abs() < 1e-6);
        assert!((rx.sigma_z - ry.sigma_z).abs() < 1e-6);
    }
}
