use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use qhhg::drive::DriveConfig;
use qhhg::hilbert::{AtomLabel, BasisDescriptor, QuantumState};
use qhhg::lattice::*;
use qhhg::observables::Probe;
use qhhg::propagator::{propagate_fock_direct, uniform_grid, Mode, ModeSet, ModelA, Settings};
use qhhg::Error;

fn coherent(alpha: C64, n_max: usize) -> Vec<C64> {
    let mut out = vec![C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0)];
    for n in 1..=n_max {
        let prev = out[n - 1];
        out.push(prev * alpha / (n as f64).sqrt());
    }
    out
}

fn ground() -> [C64; 2] {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

/// Largest deviation of σ_x and the per-mode moments between a lattice run and
/// direct Fock propagation of the same Hamiltonian.
fn fock_deviation(omega0: f64, modes: &[LatticeMode], t_end: f64, n_max: usize) -> f64 {
    let spec = LatticeSpec { omega0, modes: modes.to_vec(), padding: 1, condition_cap: 1e15 };
    let model = LatticeModel::new(spec).unwrap();
    let grid = uniform_grid(0.0, t_end, 20);
    let tr = model.evolve(&model.ground_at_centers().unwrap(), &grid, None).unwrap();

    let set = ModeSet::new(modes.iter().map(|m| Mode { omega: m.omega, coupling: m.coupling, n_max }).collect()).unwrap();
    let fock = ModelA::new(omega0, DriveConfig::off(), set).unwrap();
    let basis = BasisDescriptor::plain(AtomLabel::Energy, &vec![n_max; modes.len()]).unwrap();
    let amps: Vec<Vec<C64>> = modes.iter().map(|m| coherent(m.center, n_max)).collect();
    let start = QuantumState::product(basis, ground(), &amps).unwrap();
    let direct = propagate_fock_direct(&start, &fock, &grid, &Settings::default()).unwrap();
    let probe = Probe::new(&start).unwrap();

    let mut worst = 0.0f64;
    for (r, s) in tr.readings.iter().zip(&direct.states) {
        let p = probe.read(s).unwrap();
        worst = worst.max((p.sigma_x - r.sigma_x).abs());
        for (x, y) in p.modes.iter().zip(&r.modes) {
            for d in [
                x.n - y.n,
                x.n2 - y.n2,
                (x.a - y.a).norm(),
                (x.a2 - y.a2).norm(),
                x.u_minus - y.u_minus,
                x.u_n_minus - y.u_n_minus,
            ] {
                worst = worst.max(d.abs());
            }
        }
    }
    worst
}

#[test]
fn single_mode_matches_fock_propagation() {
    let m = LatticeMode { omega: 1.0, coupling: 0.3, center: C64::new(0.0, 1.0), side: 5, spacing: 0.7 * PI.sqrt() };
    let dev = fock_deviation(1.0, &[m], 4.0 * PI, 20);
    assert!(dev < 1e-5, "{dev}");
}

#[test]
fn two_coupled_modes_match_fock_propagation() {
    let modes = [
        LatticeMode { omega: 1.0, coupling: 0.1, center: C64::new(0.0, 1.0), side: 5, spacing: 0.7 * PI.sqrt() },
        LatticeMode { omega: 1.3, coupling: 0.1, center: C64::new(0.5, -0.5), side: 5, spacing: 0.7 * PI.sqrt() },
    ];
    let dev = fock_deviation(1.0, &modes, 2.0 * PI, 14);
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn lattice_error_shrinks_as_the_lattice_grows() {
    let dev = |side| {
        let m = LatticeMode { omega: 1.0, coupling: 0.1, center: C64::new(0.0, 1.0), side, spacing: default_spacing() };
        fock_deviation(1.0, &[m], 2.0 * PI, 20)
    };
    let (a, b) = (dev(3), dev(5));
    assert!(b < a / 5.0, "{a} {b}");
}

#[test]
fn vacuum_pulse_has_no_field() {
    let spec = LatticeSpec::pulse(1.0, 0.0, PI, 1.0, 0.05, [0.0; 3], 3, default_spacing());
    let model = LatticeModel::new(spec).unwrap();
    let tr = model.evolve(&model.ground_at_centers().unwrap(), &uniform_grid(0.0, 5.0, 10), None).unwrap();
    for r in &tr.readings {
        assert!(r.e_mean.abs() < 1e-14);
        assert!(r.modes.iter().all(|m| m.n.abs() < 1e-14));
        assert!(r.g3.is_none());
    }
}

#[test]
fn free_field_reproduces_three_term_mean_field() {
    for phi in [PI, PI / 2.0, 0.3] {
        let (a, wf, we) = (12.0, 1.0, 0.05);
        let spec = LatticeSpec::pulse(1.0, a, phi, wf, we, [0.0; 3], 3, default_spacing());
        let model = LatticeModel::new(spec).unwrap();
        let grid = uniform_grid(0.0, PI / we, 200);
        let init = model.ground_at_centers().unwrap();
        let mut worst = 0.0f64;
        let mut n0 = None;
        model
            .evolve_with(&init, &grid, None, |s| {
                let r = model.observe(s)?;
                worst = worst.max((r.e_mean - free_mean_field(a, phi, wf, we, s.t)).abs());
                let n: Vec<f64> = r.modes.iter().map(|m| m.n).collect();
                let first = n0.get_or_insert_with(|| n.clone());
                for (x, y) in n.iter().zip(first.iter()) {
                    assert!((x - y).abs() < 1e-9);
                }
                assert!(r.sigma_x.abs() < 1e-12);
                Ok(())
            })
            .unwrap();
        // relative to the peak field A
        assert!(worst / a <= 1e-6, "{phi}: {worst}");
    }
}

#[test]
fn resonant_mode_starts_with_coherent_statistics() {
    let a = 12.0;
    let spec = LatticeSpec::pulse(1.0, a, PI, 1.0, 0.05, [0.03; 3], 5, default_spacing());
    let model = LatticeModel::new(spec).unwrap();
    assert!(model.condition < 1e8);
    let r = model.observe(&model.ground_at_centers().unwrap()).unwrap();
    assert!((r.modes[0].n - (a / 2.0) * (a / 2.0)).abs() < 1e-9);
    assert!((r.modes[1].n - (a / 4.0) * (a / 4.0)).abs() < 1e-9);
    assert!(r.modes.iter().all(|m| m.mandel_q().abs() < 1e-9));
    assert!((r.g3.unwrap() - 1.0).abs() < 1e-12);
    assert!((r.norm - 1.0).abs() < 1e-12);
    assert!(r.sigma_x.abs() < 1e-12);
}

#[test]
fn decoupled_atom_freezes_coefficients() {
    let spec = LatticeSpec::pulse(0.0, 4.0, PI, 1.0, 0.05, [0.2; 3], 3, default_spacing());
    let model = LatticeModel::new(spec).unwrap();
    let init = model.ground_at_centers().unwrap();
    let (drift, last) = model.evolve_with(&init, &uniform_grid(0.0, 7.0, 7), None, |_| Ok(())).unwrap();
    assert_eq!(last.plus, init.plus);
    assert_eq!(last.minus, init.minus);
    assert_eq!(drift, 0.0);
}

#[test]
fn single_point_lattice_stays_coherent() {
    let spec = LatticeSpec { padding: 0, ..LatticeSpec::pulse(1.0, 6.0, PI / 2.0, 1.0, 0.05, [1e-7; 3], 1, default_spacing()) };
    let model = LatticeModel::new(spec).unwrap();
    let tr = model.evolve(&model.ground_at_centers().unwrap(), &uniform_grid(0.0, 10.0, 20), None).unwrap();
    for r in &tr.readings {
        for m in &r.modes {
            assert!(m.mandel_q().abs() < 1e-8, "{}", m.mandel_q());
        }
    }
}

/// A single lattice element with frozen coefficients moves on the exact orbit
/// `γ + (α − γ)e^{−iωt}`.
#[test]
fn carriers_follow_the_displaced_orbit() {
    let m = LatticeMode { omega: 1.7, coupling: 0.6, center: C64::new(0.4, -0.2), side: 3, spacing: default_spacing() };
    let model = LatticeModel::new(LatticeSpec { omega0: 0.0, modes: vec![m], padding: 1, condition_cap: 1e8 }).unwrap();
    let points = m.points();
    for (s, k) in [(1.0, 2), (-1.0, 7)] {
        let mut c = vec![C64::new(0.0, 0.0); 9];
        c[k] = C64::new(1.0, 0.0);
        let zero = vec![C64::new(0.0, 0.0); 9];
        let init = if s > 0.0 {
            LatticeState { t: 0.0, plus: c, minus: zero }
        } else {
            LatticeState { t: 0.0, plus: zero, minus: c }
        };
        let g = s * m.gamma();
        model
            .evolve_with(&init, &uniform_grid(0.0, 9.0, 30), None, |st| {
                let r = model.observe(st)?;
                let want = g + (points[k] - g) * C64::from_polar(1.0, -m.omega * st.t);
                assert!((r.modes[0].a - want).norm() < 1e-13, "{} {}", r.modes[0].a, want);
                assert!((r.modes[0].n - want.norm_sqr()).abs() < 1e-12);
                assert!((r.sigma_x - s).abs() < 1e-14);
                Ok(())
            })
            .unwrap();
    }
}

#[test]
fn carrier_envelope_phase_changes_the_dipole() {
    let run = |phi| {
        let spec = LatticeSpec::pulse(1.0, 12.0, phi, 1.0, 0.05, [0.1; 3], 3, default_spacing());
        let model = LatticeModel::new(spec).unwrap();
        model.evolve(&model.ground_at_centers().unwrap(), &uniform_grid(0.0, 20.0, 80), None).unwrap()
    };
    let (a, b) = (run(PI), run(PI / 2.0));
    assert!(a.max_norm_drift <= 1e-6 && b.max_norm_drift <= 1e-6);
    let diff = a.readings.iter().zip(&b.readings).map(|(x, y)| (x.sigma_x - y.sigma_x).abs()).fold(0.0, f64::max);
    assert!(diff > 1e-2, "{diff}");
}

#[test]
fn projection_reports_required_extension() {
    let spec = LatticeSpec::pulse(1.0, 4.0, PI, 1.0, 0.05, [0.1; 3], 5, default_spacing());
    let model = LatticeModel::new(spec.clone()).unwrap();
    let mut amps: Vec<C64> = spec.modes.iter().map(|m| m.center).collect();
    // one spacing inside the padded reach is fine
    amps[1] += C64::new(spec.modes[1].spacing, 0.0);
    let (_, kept) = model.project(ground(), &amps).unwrap();
    assert!(kept >= 1.0 - 1e-6);
    amps[1] += C64::new(0.0, 2.5 * spec.modes[1].spacing);
    match model.project(ground(), &amps) {
        Err(Error::Coverage { mode, extra, .. }) => {
            assert_eq!(mode, 1);
            assert_eq!(extra, 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn guards_reject_bad_lattices() {
    let base = LatticeSpec::pulse(1.0, 4.0, PI, 1.0, 0.05, [0.1; 3], 5, default_spacing());
    let tight = LatticeSpec { condition_cap: 1e3, ..base.clone() };
    assert!(matches!(LatticeModel::new(tight), Err(Error::ConditionCap { .. })));
    let mut even = base.clone();
    even.modes[0].side = 4;
    assert!(LatticeModel::new(even).is_err());
    let mut sparse = base.clone();
    sparse.modes[2].spacing = 1.01 * PI.sqrt();
    assert!(LatticeModel::new(sparse).is_err());
    let model = LatticeModel::new(base).unwrap();
    let init = model.ground_at_centers().unwrap();
    assert!(model.evolve(&init, &[0.5, 1.0], None).is_err());
    assert!(model.evolve(&init, &[0.0, 0.0], None).is_err());
}
