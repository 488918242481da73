use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::state::{BlochVector, TrajectoryState};
use super::DtwaError;
use crate::model::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Predictor-corrector on the drift, then one additive noise increment.
    #[default]
    Heun,
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
    /// Variance of each quadrature of the initial resonator amplitudes.
    #[serde(default = "default_field_variance")]
    pub field_variance: f64,
}

fn default_stride() -> usize {
    1
}

fn default_field_variance() -> f64 {
    0.25
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            dt: 0.005,
            t_max: 30.0,
            sample_stride: 20,
            scheme: Scheme::Heun,
            field_variance: 0.25,
        }
    }
}

impl IntegratorSettings {
    /// Number of integration steps; `t_max / dt` must be an integer to within
    /// `1e-9` relative.
    pub fn n_steps(&self) -> Result<usize, DtwaError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DtwaError::InvalidSettings(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(DtwaError::InvalidSettings(format!(
                "t_max must be >= 0, got {}",
                self.t_max
            )));
        }
        if self.sample_stride == 0 {
            return Err(DtwaError::InvalidSettings("sample_stride must be >= 1".into()));
        }
        if !(self.field_variance >= 0.0) {
            return Err(DtwaError::InvalidSettings(format!(
                "field_variance must be >= 0, got {}",
                self.field_variance
            )));
        }
        let ratio = self.t_max / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(DtwaError::InvalidSettings(format!(
                "t_max / dt = {ratio} is not an integer"
            )));
        }
        Ok(steps as usize)
    }

    /// Times at which moments are recorded.
    pub fn sample_times(&self) -> Result<Vec<f64>, DtwaError> {
        let steps = self.n_steps()?;
        Ok((0..=steps / self.sample_stride)
            .map(|k| (k * self.sample_stride) as f64 * self.dt)
            .collect())
    }
}

/// Deterministic time derivative of every component of a trajectory state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub ta: Vec<BlochVector>,
    pub ca: Vec<BlochVector>,
    pub field: Vec<Complex64>,
}

impl StateDerivative {
    fn zeros(spec: &SystemSpec) -> Self {
        StateDerivative {
            ta: vec![BlochVector::default(); spec.n_ta],
            ca: vec![BlochVector::default(); spec.n_ca],
            field: vec![Complex64::default(); spec.n_sites()],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Couplings {
    hopping: f64,
    kappa: f64,
    g: f64,
    g1: f64,
    g2: f64,
    omega_field: f64,
    omega_ta: f64,
    omega_ca: f64,
    site_n: usize,
    site_0: usize,
    site_big_n: usize,
}

impl Couplings {
    /// Couplings in a frame rotating at `omega_ref`.
    fn new(spec: &SystemSpec, omega_ref: f64) -> Result<Self, DtwaError> {
        let index = |m: i64| spec.site_index(m).ok_or(DtwaError::DimensionMismatch);
        Ok(Couplings {
            hopping: spec.hopping,
            kappa: spec.kappa,
            g: spec.g_ta,
            g1: spec.g_ca_left,
            g2: spec.g_ca_right,
            omega_field: spec.omega_res - omega_ref,
            omega_ta: spec.omega_ta - omega_ref,
            omega_ca: spec.omega_ca - omega_ref,
            site_n: index(spec.ta_site)?,
            site_0: index(0)?,
            site_big_n: index(spec.ca_site)?,
        })
    }
}

fn precess(spin: &BlochVector, omega: f64, drive: Complex64) -> BlochVector {
    BlochVector {
        x: -omega * spin.y - 2.0 * drive.im * spin.z,
        y: omega * spin.x - 2.0 * drive.re * spin.z,
        z: 2.0 * (drive.re * spin.y + drive.im * spin.x),
    }
}

fn drift_into(c: &Couplings, ta: &[BlochVector], ca: &[BlochVector], field: &[Complex64], out: &mut StateDerivative) {
    let nf = field.len();
    let loss = Complex64::new(c.kappa, c.omega_field);
    for k in 0..nf {
        let left = if k > 0 { field[k - 1] } else { Complex64::default() };
        let right = if k + 1 < nf { field[k + 1] } else { Complex64::default() };
        let hop = left + right;
        out.field[k] = Complex64::new(-c.hopping * hop.im, c.hopping * hop.re) - loss * field[k];
    }

    let ta_drive = c.g * field[c.site_n];
    let mut ta_sum = Complex64::default();
    for (s, d) in ta.iter().zip(out.ta.iter_mut()) {
        ta_sum += s.lowering();
        *d = precess(s, c.omega_ta, ta_drive);
    }
    let ca_drive = c.g1 * field[c.site_0] + c.g2 * field[c.site_big_n];
    let mut ca_sum = Complex64::default();
    for (s, d) in ca.iter().zip(out.ca.iter_mut()) {
        ca_sum += s.lowering();
        *d = precess(s, c.omega_ca, ca_drive);
    }

    // -(i g / 2) * sum(x - i y)
    let source = |coupling: f64, sum: Complex64| Complex64::new(0.5 * coupling * sum.im, -0.5 * coupling * sum.re);
    out.field[c.site_n] += source(c.g, ta_sum);
    out.field[c.site_0] += source(c.g1, ca_sum);
    out.field[c.site_big_n] += source(c.g2, ca_sum);
}

/// Noise-free right-hand side of the semiclassical equations of motion in the
/// laboratory frame.
pub fn drift(state: &TrajectoryState, spec: &SystemSpec) -> Result<StateDerivative, DtwaError> {
    if !state.matches(spec) {
        return Err(DtwaError::DimensionMismatch);
    }
    let couplings = Couplings::new(spec, 0.0)?;
    let mut out = StateDerivative::zeros(spec);
    drift_into(&couplings, &state.ta, &state.ca, &state.field, &mut out);
    Ok(out)
}

/// Reusable integrator for one system.
///
/// The common carrier `omega` is split off and applied exactly after each
/// step: it commutes with the rest of the dynamics, so only the residual
/// detunings `omega_T - omega` and `omega_C - omega` go through the scheme.
#[derive(Debug, Clone)]
pub struct Stepper {
    couplings: Couplings,
    settings: IntegratorSettings,
    noise_amp: f64,
    carrier: Option<(f64, f64)>,
    k1: StateDerivative,
    k2: StateDerivative,
    trial: TrajectoryState,
}

impl Stepper {
    pub fn new(spec: &SystemSpec, settings: IntegratorSettings) -> Result<Self, DtwaError> {
        settings.n_steps()?;
        let couplings = Couplings::new(spec, spec.omega_res)?;
        let angle = spec.omega_res * settings.dt;
        let carrier = (angle != 0.0).then(|| (angle.cos(), angle.sin()));
        Ok(Stepper {
            couplings,
            settings,
            noise_amp: (0.5 * spec.kappa * settings.dt).sqrt(),
            carrier,
            k1: StateDerivative::zeros(spec),
            k2: StateDerivative::zeros(spec),
            trial: TrajectoryState::classical(spec, 0.0, 0.0),
        })
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    /// Advances `state` by one `dt`. Noise enters the resonators only, and no
    /// random numbers are drawn when `kappa = 0`.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut TrajectoryState, rng: &mut R) -> Result<(), DtwaError> {
        if state.field.len() != self.k1.field.len()
            || state.ta.len() != self.k1.ta.len()
            || state.ca.len() != self.k1.ca.len()
        {
            return Err(DtwaError::DimensionMismatch);
        }
        let dt = self.settings.dt;
        let c = self.couplings;
        drift_into(&c, &state.ta, &state.ca, &state.field, &mut self.k1);

        match self.settings.scheme {
            Scheme::EulerMaruyama => apply(state, &self.k1, dt),
            Scheme::Heun => {
                let trial = &mut self.trial;
                trial.ta.clone_from(&state.ta);
                trial.ca.clone_from(&state.ca);
                trial.field.clone_from(&state.field);
                apply(trial, &self.k1, dt);
                drift_into(&c, &trial.ta, &trial.ca, &trial.field, &mut self.k2);
                apply(state, &self.k1, 0.5 * dt);
                apply(state, &self.k2, 0.5 * dt);
            }
        }

        if self.noise_amp > 0.0 {
            for a in state.field.iter_mut() {
                let u: f64 = rng.sample(StandardNormal);
                let v: f64 = rng.sample(StandardNormal);
                a.re += self.noise_amp * u;
                a.im += self.noise_amp * v;
            }
        }

        if let Some((cos, sin)) = self.carrier {
            let phase = Complex64::new(cos, -sin);
            for a in state.field.iter_mut() {
                *a *= phase;
            }
            for s in state.ta.iter_mut().chain(state.ca.iter_mut()) {
                *s = s.rotated_z(cos, sin);
            }
        }

        state.t += dt;
        if !state.is_finite() {
            return Err(DtwaError::NonfiniteState { t: state.t });
        }
        Ok(())
    }
}

fn apply(state: &mut TrajectoryState, d: &StateDerivative, h: f64) {
    for (s, ds) in state.ta.iter_mut().zip(&d.ta) {
        s.axpy(h, ds);
    }
    for (s, ds) in state.ca.iter_mut().zip(&d.ca) {
        s.axpy(h, ds);
    }
    for (a, da) in state.field.iter_mut().zip(&d.field) {
        *a += h * da;
    }
}

/// One-shot step; builds a [`Stepper`] each call.
pub fn step<R: Rng + ?Sized>(
    state: &TrajectoryState,
    spec: &SystemSpec,
    settings: &IntegratorSettings,
    rng: &mut R,
) -> Result<TrajectoryState, DtwaError> {
    let mut stepper = Stepper::new(spec, *settings)?;
    let mut next = state.clone();
    stepper.step(&mut next, rng)?;
    Ok(next)
}
