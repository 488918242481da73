//! One target atom and one control atom in the single-excitation sector.
//!
//! Eliminating the waveguide gives `d(eps)/dt = -M eps / v_g` in the Markov
//! limit, or a pair of delay equations when the photon travel time between
//! coupling sites is kept. Photon amplitudes anywhere on the lattice follow
//! from the atomic amplitudes at retarded times.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{GeometryInfo, SystemSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinimalError {
    #[error("DT_INCOMMENSURATE: retardation time {lag} is not a multiple of dt = {dt}")]
    DtIncommensurate { lag: f64, dt: f64 },
    #[error("OUT_OF_HISTORY: amplitude needed at t = {t}, solution covers [{start}, {end}]")]
    OutOfHistory { t: f64, start: f64, end: f64 },
    #[error("INVALID_SETTINGS: {0}")]
    InvalidSettings(String),
}

impl MinimalError {
    pub fn code(&self) -> &'static str {
        match self {
            MinimalError::DtIncommensurate { .. } => "DT_INCOMMENSURATE",
            MinimalError::OutOfHistory { .. } => "OUT_OF_HISTORY",
            MinimalError::InvalidSettings(_) => "INVALID_SETTINGS",
        }
    }
}

/// Symmetric (not Hermitian) coupling matrix of the two atomic amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl CouplingMatrix {
    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        CouplingMatrix { m11, m12, m21, m22 }
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.m11.norm_sqr() + self.m12.norm_sqr() + self.m21.norm_sqr() + self.m22.norm_sqr()).sqrt()
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }
}

pub fn coupling_matrix(spec: &SystemSpec, geom: &GeometryInfo) -> CouplingMatrix {
    let (g, g1, g2) = (spec.g_ta, spec.g_ca_left, spec.g_ca_right);
    let left = Complex64::from_polar(1.0, geom.phi_l);
    let right = Complex64::from_polar(1.0, geom.phi_r);
    let cross = g * (g1 * left + g2 * right);
    let both = Complex64::from_polar(1.0, geom.phi_l + geom.phi_r);
    CouplingMatrix {
        m11: Complex64::new(g * g, 0.0),
        m12: cross,
        m21: cross,
        m22: Complex64::new(g1 * g1 + g2 * g2, 0.0) + 2.0 * g1 * g2 * both,
    }
}

/// Eigenvalues of `M` ordered by modulus and whether the smaller one
/// vanishes, i.e. a dark collective mode (bound state in the continuum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub bic: bool,
}

impl Spectrum {
    /// Amplitude decay rates `Re(lambda) / v_g` of the two collective modes.
    pub fn decay_rates(&self, v_g: f64) -> (f64, f64) {
        (self.lambda_plus.re / v_g, self.lambda_minus.re / v_g)
    }
}

/// Relative threshold on `|lambda_-| / ||M||` below which a mode is dark.
pub const BIC_TOLERANCE: f64 = 1e-10;

pub fn eigen_and_bic(m: &CouplingMatrix) -> Spectrum {
    let half_trace = 0.5 * m.trace();
    let disc = (0.25 * (m.m11 - m.m22) * (m.m11 - m.m22) + m.m12 * m.m21).sqrt();
    let (a, b) = (half_trace + disc, half_trace - disc);
    let big = if a.norm() >= b.norm() { a } else { b };
    // small root from the determinant avoids cancellation
    let small = if big.norm() > 0.0 {
        m.det() / big
    } else {
        Complex64::default()
    };
    let norm = m.norm();
    Spectrum {
        lambda_plus: big,
        lambda_minus: small,
        bic: norm > 0.0 && small.norm() < BIC_TOLERANCE * norm,
    }
}

/// Auxiliary quantities of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormAux {
    pub x_plus: Complex64,
    pub x_minus: Complex64,
    pub x_1: Complex64,
}

/// Atomic amplitudes on a time grid, target atom initially excited.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalModelSolution {
    pub t_grid: Vec<f64>,
    pub eps_t: Vec<Complex64>,
    pub eps_c: Vec<Complex64>,
    pub aux: Option<ClosedFormAux>,
}

impl MinimalModelSolution {
    /// Amplitudes at `t`, linearly interpolated; `(0, 0)` before `t = 0`.
    pub fn at(&self, t: f64) -> Result<(Complex64, Complex64), MinimalError> {
        let (start, end) = (self.t_grid[0], *self.t_grid.last().unwrap_or(&self.t_grid[0]));
        let tol = 1e-9 * (1.0 + end.abs());
        if t < 0.0 - tol {
            return Ok((Complex64::default(), Complex64::default()));
        }
        if t < start - tol || t > end + tol {
            return Err(MinimalError::OutOfHistory { t, start, end });
        }
        let n = self.t_grid.len();
        if n == 1 {
            return Ok((self.eps_t[0], self.eps_c[0]));
        }
        let k = self.t_grid.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let w = ((t - self.t_grid[k]) / (self.t_grid[k + 1] - self.t_grid[k])).clamp(0.0, 1.0);
        let mix = |v: &[Complex64]| v[k] + (v[k + 1] - v[k]) * w;
        Ok((mix(&self.eps_t), mix(&self.eps_c)))
    }

    /// `|eps_T|^2 + |eps_C|^2` per sample.
    pub fn atomic_norm(&self) -> Vec<f64> {
        self.eps_t
            .iter()
            .zip(&self.eps_c)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }
}

/// `sinh(z) / z`, with its Taylor series near the origin.
fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        1.0 + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// Markov-limit amplitudes from the closed form. Times are physical; the
/// dynamical equation divides by `v_g`, so the solution is evaluated at `t / v_g`.
///
/// `x_1 = sqrt(x_-^2 + 4 M12 M21)`; the expressions are even in `x_1` and the
/// degenerate point `x_1 = 0` is handled through `sinh(x)/x`.
pub fn closed_form_amplitudes(m: &CouplingMatrix, v_g: f64, t_grid: &[f64]) -> MinimalModelSolution {
    let x_plus = m.m11 + m.m22;
    let x_minus = m.m11 - m.m22;
    let x_1 = (x_minus * x_minus + 4.0 * m.m12 * m.m21).sqrt();
    let mut eps_t = Vec::with_capacity(t_grid.len());
    let mut eps_c = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let s = t / v_g;
        let half = 0.5 * s;
        let envelope = (-x_plus * half).exp();
        let arg = x_1 * half;
        // sinh(x_1 s / 2) / x_1
        let sh = half * sinhc(arg);
        eps_t.push(envelope * (arg.cosh() - x_minus * sh));
        eps_c.push(-2.0 * m.m12 * sh * envelope);
    }
    MinimalModelSolution {
        t_grid: t_grid.to_vec(),
        eps_t,
        eps_c,
        aux: Some(ClosedFormAux { x_plus, x_minus, x_1 }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySettings {
    pub dt: f64,
    pub t_max: f64,
    /// Accept retardation times that are not multiples of `dt`; delayed
    /// values are then interpolated.
    pub allow_incommensurate: bool,
}

impl Default for DelaySettings {
    fn default() -> Self {
        DelaySettings {
            dt: 0.01,
            t_max: 30.0,
            allow_incommensurate: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DelayTerm {
    target: usize,
    source: usize,
    coef: Complex64,
    lag: f64,
}

struct History {
    dt: f64,
    y: Vec<[Complex64; 2]>,
    // derivatives at the two ends of each stored interval
    slopes: Vec<([Complex64; 2], [Complex64; 2])>,
}

impl History {
    fn value(&self, s: f64, var: usize) -> Complex64 {
        let x = s / self.dt;
        let j = x.floor();
        let last = self.y.len() - 1;
        if j < 0.0 {
            return self.y[0][var];
        }
        let j = j as usize;
        let w = x - j as f64;
        if j >= last {
            return self.y[last][var];
        }
        if w < 1e-9 {
            return self.y[j][var];
        }
        if w > 1.0 - 1e-9 {
            return self.y[j + 1][var];
        }
        let Some((f0, f1)) = self.slopes.get(j) else {
            return self.y[last][var];
        };
        // cubic Hermite on [t_j, t_j+1]
        let (y0, y1) = (self.y[j][var], self.y[j + 1][var]);
        let w2 = w * w;
        let w3 = w2 * w;
        let h00 = 2.0 * w3 - 3.0 * w2 + 1.0;
        let h10 = w3 - 2.0 * w2 + w;
        let h01 = -2.0 * w3 + 3.0 * w2;
        let h11 = w3 - w2;
        y0 * h00 + f0[var] * (h10 * self.dt) + y1 * h01 + f1[var] * (h11 * self.dt)
    }
}

fn delay_terms(spec: &SystemSpec, geom: &GeometryInfo) -> Vec<DelayTerm> {
    let v = geom.v_g;
    let (g, g1, g2) = (spec.g_ta, spec.g_ca_left, spec.g_ca_right);
    let phase = |phi: f64| Complex64::from_polar(1.0, phi);
    let lag_l = geom.delta_l as f64 / v;
    let lag_r = geom.delta_r as f64 / v;
    let lag_n = (geom.delta_l + geom.delta_r) as f64 / v;
    let (t, c) = (0, 1);
    let term = |target, source, coef: Complex64, lag| DelayTerm {
        target,
        source,
        coef: -coef / v,
        lag,
    };
    vec![
        term(t, t, Complex64::new(g * g, 0.0), 0.0),
        term(t, c, g * g2 * phase(geom.phi_r), lag_r),
        term(t, c, g * g1 * phase(geom.phi_l), lag_l),
        term(c, c, Complex64::new(g1 * g1 + g2 * g2, 0.0), 0.0),
        term(c, c, 2.0 * g1 * g2 * phase(geom.phi_l + geom.phi_r), lag_n),
        term(c, t, g * g1 * phase(geom.phi_l), lag_l),
        term(c, t, g * g2 * phase(geom.phi_r), lag_r),
    ]
}

/// Method-of-steps RK4 integration of the retarded amplitude equations.
///
/// Delayed arguments are read from a history buffer (cubic Hermite between
/// stored steps) and are zero before `t = 0`. Each retardation time must be a
/// multiple of `dt` unless `allow_incommensurate` is set.
pub fn integrate_delay_equations(
    spec: &SystemSpec,
    geom: &GeometryInfo,
    settings: &DelaySettings,
) -> Result<MinimalModelSolution, MinimalError> {
    let dt = settings.dt;
    if !(dt > 0.0) || !(settings.t_max >= 0.0) {
        return Err(MinimalError::InvalidSettings(format!(
            "need dt > 0 and t_max >= 0, got dt = {dt}, t_max = {}",
            settings.t_max
        )));
    }
    let ratio = settings.t_max / dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(MinimalError::InvalidSettings(format!(
            "t_max / dt = {ratio} is not an integer"
        )));
    }
    let n_steps = ratio.round() as usize;

    let terms: Vec<DelayTerm> = delay_terms(spec, geom)
        .into_iter()
        .filter(|t| t.coef != Complex64::default())
        .collect();
    for term in &terms {
        let steps = term.lag / dt;
        if (steps - steps.round()).abs() > 1e-6 && !settings.allow_incommensurate {
            return Err(MinimalError::DtIncommensurate { lag: term.lag, dt });
        }
    }
    let instant = |term: &DelayTerm| term.lag <= 1e-12 * dt;

    let mut history = History {
        dt,
        y: Vec::with_capacity(n_steps + 1),
        slopes: Vec::with_capacity(n_steps),
    };
    history.y.push([Complex64::new(1.0, 0.0), Complex64::default()]);

    // derivative during the step that starts at t_k, stage time t_k + theta
    let rhs = |history: &History, t_k: f64, theta: f64, y: [Complex64; 2]| {
        let mut out = [Complex64::default(); 2];
        for term in &terms {
            let value = if instant(term) {
                y[term.source]
            } else if t_k - term.lag < -1e-9 * dt {
                // the whole step lies before the retarded signal arrives
                Complex64::default()
            } else {
                history.value(t_k + theta - term.lag, term.source)
            };
            out[term.target] += term.coef * value;
        }
        out
    };
    let axpy = |y: [Complex64; 2], h: f64, k: [Complex64; 2]| [y[0] + h * k[0], y[1] + h * k[1]];

    for k in 0..n_steps {
        let t_k = k as f64 * dt;
        let y = history.y[k];
        let k1 = rhs(&history, t_k, 0.0, y);
        let k2 = rhs(&history, t_k, 0.5 * dt, axpy(y, 0.5 * dt, k1));
        let k3 = rhs(&history, t_k, 0.5 * dt, axpy(y, 0.5 * dt, k2));
        let k4 = rhs(&history, t_k, dt, axpy(y, dt, k3));
        let next = [
            y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        history.y.push(next);
        let end_slope = rhs(&history, t_k, dt, next);
        history.slopes.push((k1, end_slope));
    }

    let t_grid = (0..=n_steps).map(|k| k as f64 * dt).collect();
    let (eps_t, eps_c) = history.y.iter().map(|y| (y[0], y[1])).unzip();
    Ok(MinimalModelSolution {
        t_grid,
        eps_t,
        eps_c,
        aux: None,
    })
}

/// Photon amplitude at site `m` and time `t`, built from the retarded atomic
/// amplitudes of `sol`.
pub fn photon_amplitude(
    m: i64,
    t: f64,
    sol: &MinimalModelSolution,
    spec: &SystemSpec,
    geom: &GeometryInfo,
) -> Result<Complex64, MinimalError> {
    let v = geom.v_g;
    let mut total = Complex64::default();
    let sources = [
        (spec.g_ta, m - spec.ta_site, true),
        (spec.g_ca_left, m, false),
        (spec.g_ca_right, m - spec.ca_site, false),
    ];
    for (coupling, offset, is_target) in sources {
        if coupling == 0.0 {
            continue;
        }
        let distance = offset.unsigned_abs() as f64;
        let retarded = t - distance / v;
        if retarded < 0.0 {
            continue;
        }
        let (eps_t, eps_c) = sol.at(retarded)?;
        let amp = if is_target { eps_t } else { eps_c };
        total += coupling * Complex64::from_polar(1.0, geom.k * distance) * amp;
    }
    Ok(-I / v * total)
}

/// Photon amplitude at site `m` with retardation neglected.
pub fn photon_amplitude_markov(
    m: i64,
    eps_t: Complex64,
    eps_c: Complex64,
    spec: &SystemSpec,
    geom: &GeometryInfo,
) -> Complex64 {
    let phase = |offset: i64| Complex64::from_polar(1.0, geom.k * offset.unsigned_abs() as f64);
    let sum = spec.g_ta * phase(m - spec.ta_site) * eps_t
        + spec.g_ca_left * phase(m) * eps_c
        + spec.g_ca_right * phase(m - spec.ca_site) * eps_c;
    -I / geom.v_g * sum
}

/// Chirality of the minimal model at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralityEstimate {
    /// From the photon amplitudes at `-1` and `N+1` (retardation neglected).
    pub eta_exact: f64,
    /// Small-`|eps_C|` approximation `2 G2 sin(Delta) |eps_C| / (g |eps_T|)`.
    pub eta_approx: f64,
    /// `G2 sin(Delta)`; `None` while the control amplitude vanishes.
    pub script_g: Option<f64>,
    /// `Arg(eps_T) - Arg(eps_C)`, unwrapped along the time grid.
    pub delta: Option<f64>,
}

pub fn chirality_at(
    eps_t: Complex64,
    eps_c: Complex64,
    delta: Option<f64>,
    spec: &SystemSpec,
    geom: &GeometryInfo,
) -> ChiralityEstimate {
    let left = photon_amplitude_markov(-1, eps_t, eps_c, spec, geom).norm_sqr();
    let right = photon_amplitude_markov(spec.ca_site + 1, eps_t, eps_c, spec, geom).norm_sqr();
    let eta_exact = if left + right > 0.0 {
        (left - right) / (left + right)
    } else {
        0.0
    };
    let script_g = delta.map(|d| spec.g_ca_right * d.sin());
    let eta_approx = match script_g {
        None => 0.0,
        Some(gs) => 2.0 * gs * eps_c.norm() / (spec.g_ta * eps_t.norm()),
    };
    ChiralityEstimate {
        eta_exact,
        eta_approx,
        script_g,
        delta,
    }
}

/// Exact and approximate chirality along a solution, with the TA-CA phase
/// difference unwrapped in time.
pub fn chirality_formulas(
    sol: &MinimalModelSolution,
    spec: &SystemSpec,
    geom: &GeometryInfo,
) -> Vec<ChiralityEstimate> {
    let mut previous: Option<f64> = None;
    sol.eps_t
        .iter()
        .zip(&sol.eps_c)
        .map(|(&et, &ec)| {
            let delta = if ec.norm() == 0.0 || et.norm() == 0.0 {
                None
            } else {
                let raw = et.arg() - ec.arg();
                let d = match previous {
                    None => wrap_principal(raw),
                    Some(p) => p + wrap_principal(raw - p),
                };
                previous = Some(d);
                Some(d)
            };
            chirality_at(et, ec, delta, spec, geom)
        })
        .collect()
}

/// Maps an angle to `(-pi, pi]`.
fn wrap_principal(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
