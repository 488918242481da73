//! Single runs: ensemble, minimal-model and exact pipelines.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use superrad_core::dtwa::{run_ensemble, EnsembleRecord};
use superrad_core::minimal::{
    chirality_formulas, closed_form_amplitudes, coupling_matrix, eigen_and_bic, integrate_delay_equations,
    CouplingMatrix, DelaySettings,
};
use superrad_core::observables::{
    collective_inversion, edge_photons, inversion_fraction, observable_series, pair_correlation, radiance, smooth,
};
use superrad_core::oracle::{bic_profile, propagate, SingleExcitationState};
use superrad_core::{classify_control, derive_geometry, SystemSpec};

use crate::config::{ExperimentConfig, Mode, Output};
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt, Artifact, Table};

/// Scalars of one run, keyed by name. Undefined quantities are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub preset: Option<String>,
    pub control_class: String,
    pub n_traj: usize,
    pub master_seed: u64,
    pub window: [i64; 2],
    /// Reasons for missing scalars, e.g. `T_h: NO_CROSSING`.
    pub notes: Vec<String>,
    pub scalars: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.scalars.get(key).copied()
    }

    fn put(&mut self, key: impl Into<String>, value: Option<f64>) {
        if let Some(v) = value.filter(|v| v.is_finite()) {
            self.scalars.insert(key.into(), v);
        }
    }
}

/// Label of a probe time in scalar names: `15` for 15.0, `2p5` for 2.5.
pub fn time_label(t: f64) -> String {
    let s = format!("{t}");
    s.replace('.', "p")
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub artifacts: Vec<Artifact>,
    /// Kept for in-process callers of ensemble runs.
    pub record: Option<EnsembleRecord>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let spec = config.spec()?;
    let mut summary = RunSummary {
        mode: config.mode,
        preset: config.preset.clone(),
        control_class: classify_control(&spec).to_string(),
        n_traj: config.run.n_traj,
        master_seed: config.run.master_seed,
        window: [spec.m_min, spec.m_max],
        ..Default::default()
    };
    let (artifacts, record) = match config.mode {
        Mode::Dtwa => {
            let (a, r) = run_dtwa(config, &spec, &mut summary)?;
            (a, Some(r))
        }
        Mode::Minimal => (run_minimal(config, &spec, &mut summary)?, None),
        Mode::Exact => (run_exact(config, &spec, &mut summary)?, None),
    };
    Ok(RunOutcome {
        summary,
        artifacts,
        record,
    })
}

fn run_dtwa(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    summary: &mut RunSummary,
) -> Result<(Vec<Artifact>, EnsembleRecord), CliError> {
    let rec = run_ensemble(spec, &config.integrator, config.run.master_seed, config.run.n_traj)?;
    let obs = observable_series(&rec);
    let inversion = collective_inversion(&rec);

    match radiance(&inversion) {
        Ok(r) => {
            summary.put("T_h", Some(r.t_h));
            summary.put("I", Some(r.strength));
            if let Ok(c) = pair_correlation(&rec, r.t_h) {
                summary.put("C_TT_Th", Some(c.re));
            }
        }
        Err(e) => summary.notes.push(format!("T_h: {}", e.code())),
    }
    for &t in &config.run.probe_times {
        let label = time_label(t);
        match inversion_fraction(&rec, t) {
            Ok(f) => summary.put(format!("fraction_t{label}"), Some(f)),
            Err(e) => {
                summary.notes.push(format!("probe {t}: {}", e.code()));
                continue;
            }
        }
        summary.put(format!("S_Tz_t{label}"), inversion.at(t).ok());
        if let Ok(c) = pair_correlation(&rec, t) {
            summary.put(format!("C_TT_t{label}"), Some(c.re));
        }
        if let Ok([left, right]) = edge_photons(&rec, t) {
            summary.put(format!("n_left_t{label}"), Some(left));
            summary.put(format!("n_right_t{label}"), Some(right));
            match superrad_core::observables::chirality_of(left, right) {
                Some(eta) => summary.put(format!("eta_t{label}"), Some(eta)),
                None => summary.notes.push(format!("eta at {t}: UNDEFINED")),
            }
        }
    }

    let mut artifacts = Vec::new();
    if config.wants(Output::Inversion) {
        let smoothed = smooth(&inversion);
        let mut t = Table::new(&["t", "S_Tz", "S_Tz_smoothed", "fraction"])?;
        for k in 0..obs.t_grid.len() {
            t.row([
                fmt_f64(obs.t_grid[k]),
                fmt_f64(obs.s_tz[k]),
                fmt_f64(smoothed.values[k]),
                fmt_f64(2.0 * obs.s_tz[k] / spec.n_ta.max(1) as f64),
            ])?;
        }
        artifacts.push(t.finish("inversion.csv")?);
    }
    if config.wants(Output::Correlation) && !obs.c_tt.is_empty() {
        let mut t = Table::new(&["t", "C_TT_re", "C_TT_im"])?;
        for (k, c) in obs.c_tt.iter().enumerate() {
            t.row([fmt_f64(obs.t_grid[k]), fmt_f64(c.re), fmt_f64(c.im)])?;
        }
        artifacts.push(t.finish("correlation.csv")?);
    }
    if config.wants(Output::Chirality) {
        let mut t = Table::new(&["t", "n_left", "n_right", "eta"])?;
        for (k, e) in rec.edge_fields.iter().enumerate() {
            t.row([
                fmt_f64(obs.t_grid[k]),
                fmt_f64((e[0] - 0.5).max(0.0)),
                fmt_f64((e[1] - 0.5).max(0.0)),
                fmt_opt(obs.eta[k]),
            ])?;
        }
        artifacts.push(t.finish("chirality.csv")?);
    }
    if config.wants(Output::Control) && spec.n_ca > 0 {
        let mut t = Table::new(&["t", "S_Cz"])?;
        for k in 0..rec.n_samples() {
            let s: f64 = 0.5 * rec.ca_at(k).iter().map(|b| b.z).sum::<f64>();
            t.row([fmt_f64(obs.t_grid[k]), fmt_f64(s)])?;
        }
        artifacts.push(t.finish("control.csv")?);
    }
    if config.wants(Output::Intensity) {
        let map = &obs.intensity;
        let mut t = Table::new(&["t", "m", "intensity"])?;
        for (k, &time) in map.t_grid.iter().enumerate() {
            for i in 0..map.n_sites {
                let m = map.m_min + i as i64;
                t.row([fmt_f64(time), m.to_string(), fmt_f64(map.values[k * map.n_sites + i])])?;
            }
        }
        artifacts.push(t.finish("intensity.csv")?);
    }
    Ok((artifacts, rec))
}

fn complex_fields(z: Complex64) -> [String; 3] {
    [fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm())]
}

fn spectrum_table(spec: &SystemSpec) -> Result<Artifact, CliError> {
    let mut t = Table::new(&[
        "delta_r",
        "phi_r",
        "lambda_plus_re",
        "lambda_plus_im",
        "lambda_minus_re",
        "lambda_minus_im",
        "bic",
    ])?;
    for dr in 0..=12 {
        let probe = SystemSpec {
            ca_site: spec.ta_site + dr,
            ..*spec
        };
        let geom = derive_geometry(&probe)?;
        let s = eigen_and_bic(&coupling_matrix(&probe, &geom));
        t.row([
            dr.to_string(),
            fmt_f64(geom.phi_r),
            fmt_f64(s.lambda_plus.re),
            fmt_f64(s.lambda_plus.im),
            fmt_f64(s.lambda_minus.re),
            fmt_f64(s.lambda_minus.im),
            (s.bic as u8).to_string(),
        ])?;
    }
    t.finish("spectrum.csv")
}

fn put_matrix(summary: &mut RunSummary, m: &CouplingMatrix) {
    let s = eigen_and_bic(m);
    for (name, z) in [("M11", m.m11), ("M12", m.m12), ("M22", m.m22)] {
        summary.put(format!("{name}_re"), Some(z.re));
        summary.put(format!("{name}_im"), Some(z.im));
    }
    summary.put("lambda_plus_re", Some(s.lambda_plus.re));
    summary.put("lambda_plus_im", Some(s.lambda_plus.im));
    summary.put("lambda_minus_re", Some(s.lambda_minus.re));
    summary.put("lambda_minus_im", Some(s.lambda_minus.im));
    summary.put("bic", Some(if s.bic { 1.0 } else { 0.0 }));
}

fn run_minimal(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    summary: &mut RunSummary,
) -> Result<Vec<Artifact>, CliError> {
    let geom = derive_geometry(spec)?;
    let m = coupling_matrix(spec, &geom);
    put_matrix(summary, &m);
    let settings = DelaySettings {
        dt: config.integrator.dt,
        t_max: config.integrator.t_max,
        allow_incommensurate: false,
    };
    let delayed = integrate_delay_equations(spec, &geom, &settings)?;
    let stride = config.integrator.sample_stride.max(1);
    let t_grid: Vec<f64> = delayed.t_grid.iter().step_by(stride).copied().collect();
    let closed = closed_form_amplitudes(&m, geom.v_g, &t_grid);
    let chir = chirality_formulas(&closed, spec, &geom);

    let mut t = Table::new(&[
        "t",
        "eps_T_re",
        "eps_T_im",
        "eps_T_abs",
        "eps_C_re",
        "eps_C_im",
        "eps_C_abs",
        "delay_eps_T_abs",
        "delay_eps_C_abs",
        "arg_T",
        "arg_C",
        "delta",
        "script_G",
        "eta_exact",
        "eta_approx",
    ])?;
    for (k, &time) in t_grid.iter().enumerate() {
        let (et, ec) = (closed.eps_t[k], closed.eps_c[k]);
        let (dt_, dc_) = delayed.at(time)?;
        let mut row: Vec<String> = vec![fmt_f64(time)];
        row.extend(complex_fields(et));
        row.extend(complex_fields(ec));
        row.push(fmt_f64(dt_.norm()));
        row.push(fmt_f64(dc_.norm()));
        row.push(fmt_f64(et.arg()));
        row.push(fmt_opt((ec.norm() > 0.0).then(|| ec.arg())));
        row.push(fmt_opt(chir[k].delta));
        row.push(fmt_opt(chir[k].script_g));
        row.push(fmt_f64(chir[k].eta_exact));
        row.push(fmt_f64(chir[k].eta_approx));
        t.row(row)?;
    }

    for &time in &config.run.probe_times {
        let label = time_label(time);
        let single = closed_form_amplitudes(&m, geom.v_g, &[time]);
        let est = chirality_formulas(&single, spec, &geom)[0];
        summary.put(format!("eps_T_abs_t{label}"), Some(single.eps_t[0].norm()));
        summary.put(format!("eps_C_abs_t{label}"), Some(single.eps_c[0].norm()));
        summary.put(format!("script_G_t{label}"), est.script_g);
        summary.put(format!("eta_exact_t{label}"), Some(est.eta_exact));
        summary.put(format!("eta_approx_t{label}"), Some(est.eta_approx));
        if let Ok((et, _)) = delayed.at(time) {
            summary.put(format!("delay_eps_T_abs_t{label}"), Some(et.norm()));
        }
    }
    Ok(vec![t.finish("minimal.csv")?, spectrum_table(spec)?])
}

fn run_exact(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    summary: &mut RunSummary,
) -> Result<Vec<Artifact>, CliError> {
    let times = config.integrator.sample_times()?;
    let init = SingleExcitationState::target_excited(spec);
    let states = propagate(spec, &init, &times)?;
    let mut artifacts = Vec::new();

    let mut t = Table::new(&["t", "target", "control", "photons", "norm"])?;
    for st in &states {
        let control: f64 = st.amp_ca.iter().map(|z| z.norm_sqr()).sum();
        let photons: f64 = st.amp_field.iter().map(|z| z.norm_sqr()).sum();
        t.row([
            fmt_f64(st.t),
            fmt_f64(st.target_population()),
            fmt_f64(control),
            fmt_f64(photons),
            fmt_f64(st.norm_sqr()),
        ])?;
    }
    artifacts.push(t.finish("amplitudes.csv")?);
    if config.wants(Output::Intensity) {
        let mut t = Table::new(&["t", "m", "intensity"])?;
        for st in &states {
            for (i, z) in st.amp_field.iter().enumerate() {
                t.row([
                    fmt_f64(st.t),
                    (spec.m_min + i as i64).to_string(),
                    fmt_f64(z.norm_sqr()),
                ])?;
            }
        }
        artifacts.push(t.finish("intensity.csv")?);
    }
    if let Some(last) = states.last() {
        summary.put("target_final", Some(last.target_population()));
        summary.put("norm_final", Some(last.norm_sqr()));
    }
    for &time in &config.run.probe_times {
        if let Some(st) = states.iter().find(|s| (s.t - time).abs() < 1e-9) {
            summary.put(format!("target_t{}", time_label(time)), Some(st.target_population()));
        }
    }

    if spec.kappa == 0.0 {
        let bic = bic_profile(spec);
        summary.put("bic_exists", Some(if bic.exists { 1.0 } else { 0.0 }));
        summary.put("bic_energy", bic.energy);
        summary.put("bic_atomic_weight", bic.exists.then_some(bic.atomic_weight));
        let mut t = Table::new(&["m", "photon"])?;
        for (i, p) in bic.photon.iter().enumerate() {
            t.row([(bic.m_min + i as i64).to_string(), fmt_f64(*p)])?;
        }
        artifacts.push(t.finish("bic.csv")?);
    } else {
        summary.notes.push("bic: skipped for kappa > 0".into());
    }
    if let Ok(geom) = derive_geometry(spec) {
        put_matrix(summary, &coupling_matrix(spec, &geom));
        artifacts.push(spectrum_table(spec)?);
    }
    Ok(artifacts)
}
