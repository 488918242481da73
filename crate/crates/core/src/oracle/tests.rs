use super::*;
use crate::minimal::{closed_form_amplitudes, coupling_matrix, integrate_delay_equations, DelaySettings};
use crate::model::derive_geometry;

fn spec(g: f64, g1: f64, g2: f64, n: i64, big_n: i64, t_max: f64) -> SystemSpec {
    SystemSpec::resonant(g, g1, g2, 0.0, n, big_n, 1, 1, t_max)
}

fn small_window(mut s: SystemSpec, lo: i64, hi: i64) -> SystemSpec {
    s.m_min = lo;
    s.m_max = hi;
    s
}

#[test]
fn uncoupled_generator_is_bare_hopping() {
    let s = small_window(spec(0.0, 0.0, 0.0, 2, 7, 1.0), -2, 9);
    let gen = build_generator(&s);
    let off = gen.field_offset();
    let h = gen.hamiltonian();
    for r in 0..gen.dim() {
        for c in 0..gen.dim() {
            let want = if r >= off && c >= off && r.abs_diff(c) == 1 {
                -1.0
            } else {
                0.0
            };
            assert_eq!(h[(r, c)], want, "({r}, {c})");
        }
    }
}

#[test]
fn atom_columns_touch_only_coupling_sites() {
    let s = small_window(spec(0.1, 0.05, 0.15, 2, 7, 1.0), -3, 10);
    let gen = build_generator(&s);
    let h = gen.hamiltonian();
    let off = gen.field_offset();
    let site_of = |row: usize| s.m_min + (row - off) as i64;
    let touched = |col: usize| -> Vec<(i64, f64)> {
        (off..gen.dim())
            .filter(|&r| h[(r, col)] != 0.0)
            .map(|r| (site_of(r), h[(r, col)]))
            .collect()
    };
    assert_eq!(touched(0), vec![(2, 0.1)]);
    assert_eq!(touched(1), vec![(0, 0.05), (7, 0.15)]);
    assert_eq!(gen.hermiticity_defect(), 0.0);
}

#[test]
fn loss_acts_only_on_resonators() {
    let mut s = small_window(spec(0.1, 0.05, 0.15, 2, 7, 1.0), -3, 10);
    s.kappa = 0.3;
    let gen = build_generator(&s);
    let lossless = build_generator(&SystemSpec { kappa: 0.0, ..s });
    let n = gen.dim();
    for i in 0..n {
        let mut e = vec![Complex64::default(); n];
        e[i] = Complex64::new(1.0, 0.0);
        let (mut a, mut b) = (vec![Complex64::default(); n], vec![Complex64::default(); n]);
        gen.apply(&e, &mut a);
        lossless.apply(&e, &mut b);
        let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        for (j, d) in diff.iter().enumerate() {
            let want = if i == j && i >= gen.field_offset() { -0.3 } else { 0.0 };
            assert!((d - want).norm() < 1e-15);
        }
    }
}

#[test]
fn lossless_propagation_is_unitary() {
    let s = spec(0.1, 0.067, 0.15, 2, 7, 50.0);
    let init = SingleExcitationState::target_excited(&s);
    let grid: Vec<f64> = (1..=50).map(|k| k as f64).collect();
    let states = propagate(&s, &init, &grid).unwrap();
    for st in &states {
        assert!((st.norm_sqr() - 1.0).abs() < 1e-9, "t={} norm={}", st.t, st.norm_sqr());
    }
}

#[test]
fn lossy_norm_never_grows() {
    let mut s = spec(0.3, 0.0, 0.2, 2, 7, 20.0);
    s.kappa = 0.05;
    let init = SingleExcitationState::target_excited(&s);
    let grid: Vec<f64> = (1..=80).map(|k| k as f64 * 0.25).collect();
    let states = propagate(&s, &init, &grid).unwrap();
    let mut last = 1.0;
    for st in &states {
        assert!(st.norm_sqr() <= last + 1e-14);
        last = st.norm_sqr();
    }
    assert!(last < 0.99);
}

#[test]
fn rk4_matches_eigenbasis() {
    let s = small_window(spec(0.2, 0.1, 0.15, 2, 7, 1.0), -40, 47);
    let init = SingleExcitationState::target_excited(&s);
    let grid = [0.5, 7.0, 19.0];
    let a = propagate(&s, &init, &grid).unwrap();
    let b = propagate_eigen(&s, &init, &grid).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let dev = x
            .to_vector()
            .iter()
            .zip(y.to_vector())
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9, "t={} dev={dev}", x.t);
    }
}

#[test]
fn photon_spreads_inside_light_cone() {
    let s = small_window(spec(0.0, 0.0, 0.0, 0, 0, 1.0), -80, 80);
    let init = SingleExcitationState::photon_at(&s, 0).unwrap();
    let t = 20.0;
    let st = &propagate(&s, &init, &[t]).unwrap()[0];
    let front = 2.0 * t;
    let beyond: f64 = (s.m_min..=s.m_max)
        .filter(|m| m.abs() as f64 > front + 10.0)
        .map(|m| st.field_at(&s, m).unwrap().norm_sqr())
        .sum();
    assert!(beyond < 1e-6, "{beyond}");
    let peak = (s.m_min..=s.m_max)
        .max_by(|&a, &b| {
            st.field_at(&s, a)
                .unwrap()
                .norm()
                .total_cmp(&st.field_at(&s, b).unwrap().norm())
        })
        .unwrap();
    assert!((peak.abs() as f64 - front).abs() < 5.0, "peak at {peak}");
}

#[test]
fn lone_target_decays_at_golden_rule_rate() {
    let s = spec(0.1, 0.0, 0.0, 2, 7, 30.0);
    let init = SingleExcitationState::target_excited(&s);
    let st = &propagate(&s, &init, &[30.0]).unwrap()[0];
    let want = (-0.01f64 * 30.0).exp();
    assert!(
        (st.target_population() - want).abs() < 0.01,
        "{}",
        st.target_population()
    );
}

#[test]
fn dark_mode_keeps_target_excitation() {
    let (g, g2) = (0.1, 0.15);
    let s = spec(g, 0.0, g2, 2, 6, 400.0);
    let init = SingleExcitationState::target_excited(&s);
    let st = &propagate(&s, &init, &[400.0]).unwrap()[0];
    // the photonic part of the bound state lowers the plateau slightly
    let want = (g2 * g2 / (g * g + g2 * g2)).powi(2);
    assert!(
        (st.target_population() - want).abs() < 0.02,
        "{}",
        st.target_population()
    );
}

#[test]
fn dark_state_detection() {
    let g = 0.1;
    for dr in 0..8 {
        let s = spec(g, 0.0, 0.15, 2, 2 + dr, 30.0);
        assert_eq!(bic_profile(&s).exists, dr % 2 == 0, "dr={dr}");
    }
    assert!(bic_profile(&spec(g, 0.15, 0.15, 2, 4, 30.0)).exists);
    assert!(bic_profile(&spec(g, 0.067, 0.15, 2, 4, 30.0)).exists);
    assert!(!bic_profile(&spec(g, 0.067, 0.15, 2, 7, 30.0)).exists);
}

#[test]
fn dark_state_photons_sit_between_coupling_sites() {
    let s = spec(0.1, 0.0, 0.15, 2, 6, 30.0);
    let bic = bic_profile(&s);
    assert!(bic.exists);
    assert!(bic.energy.unwrap().abs() < BIC_ENERGY_WINDOW);
    let inside: f64 = (2..=6).map(|m| bic.photon[s.site_index(m).unwrap()]).sum();
    assert!((inside - 1.0).abs() < 1e-10);
    // standing wave at k = pi/2: odd offsets from the target only
    for m in [3, 5] {
        assert!(bic.photon[s.site_index(m).unwrap()] > 0.1);
    }
    for m in [2, 4, 6] {
        assert!(bic.photon[s.site_index(m).unwrap()] < 1e-12);
    }
}

#[test]
fn coincident_sites_give_photonless_dark_state() {
    let bic = bic_profile(&spec(0.1, 0.0, 0.15, 2, 2, 30.0));
    assert!(bic.exists);
    assert!(bic.photon.iter().all(|&p| p == 0.0));
    assert!((bic.atomic_weight - 1.0).abs() < 1e-10);
}

#[test]
fn mirrored_lattice_mirrors_fields() {
    let a = small_window(spec(0.1, 0.05, 0.15, 2, 7, 1.0), -30, 35);
    let b = small_window(spec(0.1, 0.15, 0.05, 5, 7, 1.0), 7 - 35, 7 + 30);
    let grid = [3.0, 11.0];
    let sa = propagate(&a, &SingleExcitationState::target_excited(&a), &grid).unwrap();
    let sb = propagate(&b, &SingleExcitationState::target_excited(&b), &grid).unwrap();
    for (x, y) in sa.iter().zip(&sb) {
        for m in a.m_min..=a.m_max {
            let d = (x.field_at(&a, m).unwrap() - y.field_at(&b, 7 - m).unwrap()).norm();
            assert!(d < 1e-12, "m={m}");
        }
        assert!((x.amp_ta[0] - y.amp_ta[0]).norm() < 1e-12);
    }
}

#[test]
fn agrees_with_retarded_minimal_model() {
    for big_n in [6, 7] {
        let mut s = spec(0.1, 0.0, 0.15, 2, big_n, 30.0);
        let pad = (401 - (big_n + 3)) / 2 + 1;
        s.m_min = -1 - pad;
        s.m_max = big_n + 1 + pad;
        assert!(s.n_sites() >= 400);
        let geom = derive_geometry(&s).unwrap();
        let settings = DelaySettings {
            dt: 0.01,
            t_max: 30.0,
            allow_incommensurate: false,
        };
        let delayed = integrate_delay_equations(&s, &geom, &settings).unwrap();
        let grid: Vec<f64> = (0..=300).map(|k| k as f64 * 0.1).collect();
        let exact = propagate(&s, &SingleExcitationState::target_excited(&s), &grid).unwrap();
        let mut worst: f64 = 0.0;
        for st in &exact {
            let (et, ec) = delayed.at(st.t).unwrap();
            worst = worst.max((st.amp_ta[0] - et).norm()).max((st.amp_ca[0] - ec).norm());
        }
        assert!(worst < 0.05, "N={big_n}: {worst}");
        let m = coupling_matrix(&s, &geom);
        let closed = closed_form_amplitudes(&m, geom.v_g, &grid);
        for (st, et) in exact.iter().zip(&closed.eps_t) {
            assert!((st.amp_ta[0].norm() - et.norm()).abs() < 0.05);
        }
    }
}

#[test]
fn rejects_unnormalized_initial_state() {
    let s = spec(0.1, 0.0, 0.15, 2, 7, 5.0);
    let mut init = SingleExcitationState::target_excited(&s);
    init.amp_ta[0] = Complex64::new(2.0, 0.0);
    assert_eq!(propagate(&s, &init, &[1.0]).unwrap_err().code(), "INVALID_INITIAL");
    let short = SingleExcitationState {
        amp_field: vec![],
        ..SingleExcitationState::target_excited(&s)
    };
    assert_eq!(propagate(&s, &short, &[1.0]).unwrap_err().code(), "INVALID_INITIAL");
}

#[test]
fn eigenbasis_path_requires_lossless_system() {
    let mut s = spec(0.1, 0.0, 0.15, 2, 7, 5.0);
    s.kappa = 0.01;
    let init = SingleExcitationState::target_excited(&s);
    assert_eq!(
        propagate_eigen(&s, &init, &[1.0]).unwrap_err().code(),
        "INVALID_SETTINGS"
    );
}

#[test]
fn ensemble_excitation_is_symmetric() {
    let mut s = spec(0.1, 0.0, 0.15, 2, 7, 10.0);
    s.n_ta = 4;
    s.n_ca = 3;
    let init = SingleExcitationState::target_excited(&s);
    assert!((init.norm_sqr() - 1.0).abs() < 1e-15);
    assert!((init.collective_target().norm() - 1.0).abs() < 1e-15);
    let st = &propagate(&s, &init, &[10.0]).unwrap()[0];
    for a in &st.amp_ta {
        assert!((a - st.amp_ta[0]).norm() < 1e-14);
    }
}
