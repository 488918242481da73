use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::SystemSpec;

fn spec(n_ta: usize, n_ca: usize, kappa: f64, t_max: f64) -> SystemSpec {
    SystemSpec::resonant(0.1, 0.0, 0.15, kappa, 2, 7, n_ta, n_ca, t_max)
}

fn settings(dt: f64, t_max: f64, stride: usize) -> IntegratorSettings {
    IntegratorSettings {
        dt,
        t_max,
        sample_stride: stride,
        ..Default::default()
    }
}

#[test]
fn sampled_spins_are_discrete_corners() {
    let spec = spec(2, 3, 0.01, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mean_x = 0.0;
    let draws = 20_000;
    for _ in 0..draws {
        let s = sample_initial(&spec, 0.25, &mut rng);
        for t in &s.ta {
            assert_eq!(t.z, 1.0);
            assert_eq!(t.x.abs(), 1.0);
            assert_eq!(t.y.abs(), 1.0);
            assert_eq!(t.norm_sqr(), 3.0);
        }
        for c in &s.ca {
            assert_eq!(c.z, -1.0);
            assert_eq!(c.norm_sqr(), 3.0);
        }
        mean_x += s.ta[0].x;
    }
    assert!((mean_x / draws as f64).abs() < 0.03);
}

#[test]
fn no_control_atoms_means_empty_list() {
    let spec = spec(4, 0, 0.01, 5.0);
    let s = sample_initial(&spec, 0.25, &mut ChaCha8Rng::seed_from_u64(0));
    assert!(s.ca.is_empty());
    assert_eq!(s.field.len(), spec.n_sites());
}

#[test]
fn field_quadrature_variance_is_a_quarter() {
    let mut spec = spec(0, 0, 0.0, 0.0);
    spec.m_min = -1;
    spec.m_max = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let n = 100_000;
    for _ in 0..n {
        let a = sample_initial(&spec, 0.25, &mut rng).field[4].re;
        sum += a;
        sum2 += a * a;
    }
    let mean = sum / n as f64;
    let var = sum2 / n as f64 - mean * mean;
    assert!((var - 0.25).abs() < 0.01, "variance {var}");
}

#[test]
fn ground_and_excited_poles_are_fixed_points() {
    let spec = spec(3, 2, 0.01, 5.0);
    let state = TrajectoryState::classical(&spec, 1.0, -1.0);
    let d = drift(&state, &spec).unwrap();
    assert!(d.ta.iter().chain(&d.ca).all(|s| s.norm_sqr() == 0.0));
    assert!(d.field.iter().all(|a| a.norm_sqr() == 0.0));
}

#[test]
fn single_spin_drift_by_hand() {
    let mut spec = spec(1, 0, 0.0, 5.0);
    spec.g_ca_right = 0.0;
    let mut state = TrajectoryState::classical(&spec, 1.0, -1.0);
    state.ta[0] = BlochVector::new(1.0, 0.0, 1.0);
    state.field[spec.site_index(2).unwrap()] = Complex64::new(0.1, 0.0);
    let d = drift(&state, &spec).unwrap();
    assert!((d.ta[0].x - 0.0).abs() < 1e-15);
    assert!((d.ta[0].y - (-0.02)).abs() < 1e-15);
    assert!((d.ta[0].z - 0.0).abs() < 1e-15);
}

#[test]
fn collective_source_term_by_hand() {
    let spec = spec(30, 0, 0.0, 5.0);
    let mut state = TrajectoryState::classical(&spec, 1.0, -1.0);
    for s in state.ta.iter_mut() {
        *s = BlochVector::new(1.0, -1.0, 1.0);
    }
    let d = drift(&state, &spec).unwrap();
    let expected = Complex64::new(0.0, -0.05) * 30.0 * Complex64::new(1.0, 1.0);
    let got = d.field[spec.site_index(2).unwrap()];
    assert!((got - expected).norm() < 1e-12, "{got}");
    // other sites see no source
    assert_eq!(d.field[spec.site_index(3).unwrap()], Complex64::default());
}

#[test]
fn coincident_sites_add_sources() {
    let mut spec = SystemSpec::resonant(0.1, 0.2, 0.3, 0.0, 0, 0, 1, 1, 5.0);
    spec.kappa = 0.0;
    let mut state = TrajectoryState::classical(&spec, 1.0, -1.0);
    state.ta[0] = BlochVector::new(1.0, 0.0, 1.0);
    state.ca[0] = BlochVector::new(0.0, 1.0, -1.0);
    let d = drift(&state, &spec).unwrap();
    let expected =
        Complex64::new(0.0, -0.05) * Complex64::new(1.0, 0.0) + Complex64::new(0.0, -0.25) * Complex64::new(0.0, -1.0);
    assert!((d.field[spec.site_index(0).unwrap()] - expected).norm() < 1e-15);
}

#[test]
fn drift_rejects_wrong_dimensions() {
    let spec = spec(3, 2, 0.0, 5.0);
    let mut state = TrajectoryState::classical(&spec, 1.0, -1.0);
    state.field.pop();
    assert_eq!(drift(&state, &spec).unwrap_err(), DtwaError::DimensionMismatch);
}

#[test]
fn lossless_step_is_deterministic() {
    let spec = spec(3, 2, 0.0, 5.0);
    let s = settings(0.005, 5.0, 1);
    let init = sample_initial(&spec, 0.25, &mut ChaCha8Rng::seed_from_u64(1));
    let a = step(&init, &spec, &s, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let b = step(&init, &spec, &s, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
    assert_eq!(a, b);
}

fn evolve(spec: &SystemSpec, dt: f64, t_max: f64, init: &TrajectoryState) -> TrajectoryState {
    let s = settings(dt, t_max, 1);
    let mut stepper = Stepper::new(spec, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut state = init.clone();
    for _ in 0..s.n_steps().unwrap() {
        stepper.step(&mut state, &mut rng).unwrap();
    }
    state
}

fn distance(a: &TrajectoryState, b: &TrajectoryState) -> f64 {
    let spins =
        a.ta.iter()
            .chain(&a.ca)
            .zip(b.ta.iter().chain(&b.ca))
            .map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2))
            .sum::<f64>();
    let field = a
        .field
        .iter()
        .zip(&b.field)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>();
    (spins + field).sqrt()
}

#[test]
fn heun_is_second_order() {
    let mut spec = spec(1, 1, 0.0, 4.0);
    spec.g_ta = 0.5;
    spec.g_ca_right = 0.4;
    let init = sample_initial(&spec, 0.25, &mut ChaCha8Rng::seed_from_u64(5));
    let reference = evolve(&spec, 0.0025 / 8.0, 4.0, &init);
    let coarse = distance(&evolve(&spec, 0.02, 4.0, &init), &reference);
    let fine = distance(&evolve(&spec, 0.01, 4.0, &init), &reference);
    let ratio = coarse / fine;
    assert!((3.3..4.8).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn lossless_step_conserves_norm_and_charge() {
    let spec = spec(1, 0, 0.0, 30.0);
    let s = settings(0.005, 30.0, 1);
    let mut stepper = Stepper::new(&spec, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // empty waveguide: isolates the atom-field exchange terms
    let mut state = sample_initial(&spec, 0.0, &mut rng);
    let q0 = state.excitation_charge();
    for _ in 0..s.n_steps().unwrap() {
        let before = state.ta[0].norm_sqr();
        let q_before = state.excitation_charge();
        stepper.step(&mut state, &mut rng).unwrap();
        assert!((state.ta[0].norm_sqr() - before).abs() < 1e-8);
        assert!((state.excitation_charge() - q_before).abs() < 1e-8);
    }
    assert!((state.ta[0].norm_sqr() - 3.0).abs() < 1e-6);
    assert!((state.excitation_charge() - q0).abs() < 1e-6);
}

#[test]
fn lossy_empty_waveguide_relaxes_to_vacuum() {
    let mut spec = spec(0, 0, 0.5, 10.0);
    spec.g_ta = 0.0;
    spec.g_ca_right = 0.0;
    let s = IntegratorSettings {
        dt: 0.01,
        t_max: 10.0,
        sample_stride: 1000,
        scheme: Scheme::Heun,
        field_variance: 0.0,
    };
    let rec = run_ensemble(&spec, &s, 8, 64).unwrap();
    let last = rec.n_samples() - 1;
    let occupancy = rec.field_at(last).iter().sum::<f64>() / rec.n_sites as f64;
    assert!((occupancy - 0.5).abs() < 0.02, "occupancy {occupancy}");
    assert_eq!(rec.field_at(0).iter().sum::<f64>(), 0.0);
}

#[test]
fn trajectories_are_reproducible() {
    let spec = spec(4, 2, 0.01, 2.0);
    let s = settings(0.01, 2.0, 10);
    let a = run_trajectory(&spec, &s, 17).unwrap();
    let b = run_trajectory(&spec, &s, 17).unwrap();
    let c = run_trajectory(&spec, &s, 18).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.n_samples(), 21);
    assert!((a.t_grid[20] - 2.0).abs() < 1e-12);
}

#[test]
fn single_trajectory_ensemble_equals_trajectory() {
    let spec = spec(4, 2, 0.01, 2.0);
    let s = settings(0.01, 2.0, 5);
    let traj = run_trajectory(&spec, &s, TrajectorySeed::for_trajectory(9, 0)).unwrap();
    let rec = run_ensemble(&spec, &s, 9, 1).unwrap();
    assert_eq!(rec.moments, traj);
    assert_eq!(rec.n_traj, 1);
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let spec = spec(5, 3, 0.01, 1.0);
    let s = settings(0.01, 1.0, 10);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_ensemble(&spec, &s, 42, 3 * BLOCK_SIZE + 7).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn pair_moments_exclude_diagonal() {
    let spins = [BlochVector::new(1.0, -1.0, 1.0), BlochVector::new(-1.0, -1.0, 1.0)];
    let p = PairMoments::of(&spins);
    // x1 x2 + x2 x1
    assert_eq!(p.xx, -2.0);
    assert_eq!(p.yy, 2.0);
    // x1 y2 + x2 y1 = -1 + 1
    assert_eq!(p.xy, 0.0);
    assert_eq!(p.xy, p.yx);
}

#[test]
fn gauge_shift_leaves_lossless_trajectory_invariant() {
    let spec = spec(3, 2, 0.0, 5.0);
    let shifted = spec.shifted_frequencies(0.7);
    let s = settings(0.005, 5.0, 50);
    let a = run_trajectory(&spec, &s, 5).unwrap();
    let b = run_trajectory(&shifted, &s, 5).unwrap();
    for (x, y) in a.field_abs2.iter().zip(&b.field_abs2) {
        assert!((x - y).abs() < 1e-10);
    }
    for (p, q) in a.ta.iter().zip(&b.ta) {
        assert!((p.z - q.z).abs() < 1e-10);
    }
}

#[test]
fn runaway_step_is_reported() {
    let mut spec = spec(50, 0, 0.0, 200.0);
    spec.g_ta = 40.0;
    let s = settings(1.0, 200.0, 1);
    let err = run_trajectory(&spec, &s, 1).unwrap_err();
    assert_eq!(err.code(), "NONFINITE_STATE");
    assert!(matches!(err, DtwaError::Trajectory { seed, .. } if seed.key == 1));
}

#[test]
fn settings_must_tile_the_horizon() {
    assert!(settings(0.007, 1.0, 1).n_steps().is_err());
    assert_eq!(settings(0.005, 30.0, 1).n_steps().unwrap(), 6000);
    assert!(settings(0.0, 1.0, 1).n_steps().is_err());
    assert!(settings(0.01, 1.0, 0).n_steps().is_err());
}
