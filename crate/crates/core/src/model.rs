//! System parameters, validation and derived geometry for target atoms (TAs)
//! and control atoms (CAs) coupled to a coupled-resonator waveguide.
//!
//! All rates are in units of the hopping `J` and times in units of `1/J`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Padding (in sites) added beyond the light-cone distance when a default
/// window is constructed.
pub const WINDOW_MARGIN: i64 = 10;

/// Physical parameters and lattice geometry of the atoms-plus-waveguide model.
///
/// The left leg of the control ensemble sits at site 0, the target ensemble
/// at `ta_site` and the right control leg at `ca_site`. Resonators occupy the
/// closed integer window `[m_min, m_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(rename = "J")]
    pub hopping: f64,
    #[serde(rename = "omega", default)]
    pub omega_res: f64,
    #[serde(rename = "omega_T", default)]
    pub omega_ta: f64,
    #[serde(rename = "omega_C", default)]
    pub omega_ca: f64,
    /// Half of the per-resonator photon loss rate.
    #[serde(default)]
    pub kappa: f64,
    #[serde(rename = "g")]
    pub g_ta: f64,
    #[serde(rename = "G1", default)]
    pub g_ca_left: f64,
    #[serde(rename = "G2", default)]
    pub g_ca_right: f64,
    #[serde(rename = "n")]
    pub ta_site: i64,
    #[serde(rename = "N")]
    pub ca_site: i64,
    #[serde(rename = "N_T")]
    pub n_ta: usize,
    #[serde(rename = "N_C", default)]
    pub n_ca: usize,
    pub m_min: i64,
    pub m_max: i64,
}

impl SystemSpec {
    /// Spec on resonance in the global rotating frame (`omega = omega_T = omega_C = 0`),
    /// `J = 1`, with a window wide enough that nothing emitted at `t = 0`
    /// reaches an edge before `t_max`.
    #[allow(clippy::too_many_arguments)]
    pub fn resonant(
        g_ta: f64,
        g_ca_left: f64,
        g_ca_right: f64,
        kappa: f64,
        ta_site: i64,
        ca_site: i64,
        n_ta: usize,
        n_ca: usize,
        t_max: f64,
    ) -> Self {
        let mut spec = SystemSpec {
            hopping: 1.0,
            omega_res: 0.0,
            omega_ta: 0.0,
            omega_ca: 0.0,
            kappa,
            g_ta,
            g_ca_left,
            g_ca_right,
            ta_site,
            ca_site,
            n_ta,
            n_ca,
            m_min: -1,
            m_max: ca_site + 1,
        };
        spec.set_default_window(t_max);
        spec
    }

    /// Number of resonators in the window.
    pub fn n_sites(&self) -> usize {
        (self.m_max - self.m_min + 1).max(0) as usize
    }

    /// Storage index of lattice site `m`, if it lies inside the window.
    pub fn site_index(&self, m: i64) -> Option<usize> {
        (m >= self.m_min && m <= self.m_max).then(|| (m - self.m_min) as usize)
    }

    pub fn group_velocity(&self) -> f64 {
        2.0 * self.hopping
    }

    /// Centres the window on the atomic span `[-1, N+1]` and pads each side
    /// with `ceil(v_g * t_max) + WINDOW_MARGIN` sites.
    pub fn set_default_window(&mut self, t_max: f64) {
        let pad = default_padding(self.group_velocity(), t_max);
        let lo = (-1).min(self.ta_site - 1);
        let hi = (self.ca_site + 1).max(self.ta_site + 1);
        self.m_min = lo - pad;
        self.m_max = hi + pad;
    }

    /// Same system with every transition frequency shifted by `delta`.
    pub fn shifted_frequencies(&self, delta: f64) -> Self {
        SystemSpec {
            omega_res: self.omega_res + delta,
            omega_ta: self.omega_ta + delta,
            omega_ca: self.omega_ca + delta,
            ..*self
        }
    }

    pub fn is_resonant(&self) -> bool {
        self.omega_ta == self.omega_res && self.omega_ca == self.omega_res
    }
}

fn default_padding(v_g: f64, t_max: f64) -> i64 {
    let travel = (v_g * t_max.max(0.0)).ceil();
    if travel.is_finite() {
        travel as i64 + WINDOW_MARGIN
    } else {
        WINDOW_MARGIN
    }
}

/// One broken invariant of a [`SystemSpec`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("NONPOSITIVE_J: hopping must be > 0, got {0}")]
    NonpositiveJ(f64),
    #[error("NEGATIVE_RATE: {name} must be >= 0, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("NONFINITE_PARAMETER: {0} is not finite")]
    NonfiniteParameter(&'static str),
    #[error("SITE_ORDER: need 0 <= n <= N <= m_max and m_min <= -1 (n = {n}, N = {big_n}, window [{m_min}, {m_max}])")]
    SiteOrder { n: i64, big_n: i64, m_min: i64, m_max: i64 },
    #[error("WINDOW_TOO_SMALL: a wavefront needs {required:.1} sites of round trip before t_max but the window allows {available}")]
    WindowTooSmall { required: f64, available: i64 },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NonpositiveJ(_) => "NONPOSITIVE_J",
            Violation::NegativeRate { .. } => "NEGATIVE_RATE",
            Violation::NonfiniteParameter(_) => "NONFINITE_PARAMETER",
            Violation::SiteOrder { .. } => "SITE_ORDER",
            Violation::WindowTooSmall { .. } => "WINDOW_TOO_SMALL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid system spec: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("DETUNED: geometry assumes omega_T = omega_C = omega (got {omega_ta}, {omega_ca}, {omega_res})")]
    Detuned {
        omega_res: f64,
        omega_ta: f64,
        omega_ca: f64,
    },
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Invalid(v) => v.first().map_or("INVALID_SPEC", Violation::code),
            ModelError::Detuned { .. } => "DETUNED",
        }
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            ModelError::Invalid(v) => v,
            ModelError::Detuned { .. } => &[],
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks every invariant of `raw` and that the window is wide enough for a
/// wavefront launched at the target site to reach an edge and come back to
/// the observed region `[-1, N+1]` no earlier than `t_max`.
///
/// All violations are reported together.
pub fn validate_spec(raw: SystemSpec, t_max: f64) -> Result<SystemSpec, ModelError> {
    let mut violations = Vec::new();

    let reals = [
        ("J", raw.hopping),
        ("omega", raw.omega_res),
        ("omega_T", raw.omega_ta),
        ("omega_C", raw.omega_ca),
        ("kappa", raw.kappa),
        ("g", raw.g_ta),
        ("G1", raw.g_ca_left),
        ("G2", raw.g_ca_right),
    ];
    for (name, value) in reals {
        if !value.is_finite() {
            violations.push(Violation::NonfiniteParameter(name));
        }
    }
    if !(raw.hopping > 0.0) {
        violations.push(Violation::NonpositiveJ(raw.hopping));
    }
    for (name, value) in [
        ("kappa", raw.kappa),
        ("g", raw.g_ta),
        ("G1", raw.g_ca_left),
        ("G2", raw.g_ca_right),
    ] {
        if value < 0.0 {
            violations.push(Violation::NegativeRate { name, value });
        }
    }

    let order_ok = 0 <= raw.ta_site && raw.ta_site <= raw.ca_site && raw.ca_site < raw.m_max && raw.m_min <= -1;
    if !order_ok {
        violations.push(Violation::SiteOrder {
            n: raw.ta_site,
            big_n: raw.ca_site,
            m_min: raw.m_min,
            m_max: raw.m_max,
        });
    } else if raw.hopping > 0.0 && t_max.is_finite() {
        let required = raw.group_velocity() * t_max;
        let left = (raw.ta_site - raw.m_min) + (-1 - raw.m_min);
        let right = (raw.m_max - raw.ta_site) + (raw.m_max - (raw.ca_site + 1));
        let available = left.min(right);
        if (available as f64) < required {
            violations.push(Violation::WindowTooSmall { required, available });
        }
    }

    if violations.is_empty() {
        Ok(raw)
    } else {
        Err(ModelError::Invalid(violations))
    }
}

/// Distances and propagation phases between the coupling sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryInfo {
    /// Target site minus left control leg.
    pub delta_l: i64,
    /// Right control leg minus target site.
    pub delta_r: i64,
    /// Resonant wave vector.
    pub k: f64,
    pub phi_l: f64,
    pub phi_r: f64,
    pub v_g: f64,
}

/// Geometry of a resonant system. Off resonance the wave vector is not
/// `pi/2` and the result would be meaningless, so detuned specs are rejected.
pub fn derive_geometry(spec: &SystemSpec) -> Result<GeometryInfo, ModelError> {
    if !spec.is_resonant() {
        return Err(ModelError::Detuned {
            omega_res: spec.omega_res,
            omega_ta: spec.omega_ta,
            omega_ca: spec.omega_ca,
        });
    }
    let delta_l = spec.ta_site;
    let delta_r = spec.ca_site - spec.ta_site;
    let k = FRAC_PI_2;
    Ok(GeometryInfo {
        delta_l,
        delta_r,
        k,
        phi_l: k * delta_l as f64,
        phi_r: k * delta_r as f64,
        v_g: spec.group_velocity(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlClass {
    None,
    Small,
    Giant,
}

impl fmt::Display for ControlClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlClass::None => "NONE",
            ControlClass::Small => "SMALL",
            ControlClass::Giant => "GIANT",
        })
    }
}

pub fn classify_control(spec: &SystemSpec) -> ControlClass {
    let left = spec.g_ca_left != 0.0;
    let right = spec.g_ca_right != 0.0;
    if spec.n_ca == 0 {
        return ControlClass::None;
    }
    match (left, right) {
        (false, false) => ControlClass::None,
        (true, true) => ControlClass::Giant,
        _ => ControlClass::Small,
    }
}
