//! Exact single-excitation dynamics on the finite lattice.
//!
//! With one excitation the state is a vector of amplitudes over the atoms and
//! the resonators of the window, and the dynamics is a linear ODE with a real
//! symmetric Hamiltonian plus a uniform loss `-kappa` on every resonator.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::SystemSpec;

/// Largest internal RK4 step.
pub const PROPAGATION_DT: f64 = 0.005;
/// Energy window (units of `J`) for dark-state candidates.
pub const BIC_ENERGY_WINDOW: f64 = 1e-6;
/// Field amplitude just outside the coupling region, relative to the peak,
/// below which a dark state counts as confined.
pub const BIC_SUPPORT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("NONFINITE_STATE: amplitude diverged at t = {t}")]
    NonfiniteState { t: f64 },
    #[error("INVALID_INITIAL: {0}")]
    InvalidInitial(String),
    #[error("INVALID_SETTINGS: {0}")]
    InvalidSettings(String),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::NonfiniteState { .. } => "NONFINITE_STATE",
            OracleError::InvalidInitial(_) => "INVALID_INITIAL",
            OracleError::InvalidSettings(_) => "INVALID_SETTINGS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    pub t: f64,
    pub amp_ta: Vec<Complex64>,
    pub amp_ca: Vec<Complex64>,
    /// Resonator amplitudes from `m_min` to `m_max`.
    pub amp_field: Vec<Complex64>,
}

impl SingleExcitationState {
    pub fn vacuum(spec: &SystemSpec) -> Self {
        SingleExcitationState {
            t: 0.0,
            amp_ta: vec![Complex64::default(); spec.n_ta],
            amp_ca: vec![Complex64::default(); spec.n_ca],
            amp_field: vec![Complex64::default(); spec.n_sites()],
        }
    }

    /// The symmetric single excitation of the target ensemble.
    pub fn target_excited(spec: &SystemSpec) -> Self {
        let mut s = Self::vacuum(spec);
        let a = 1.0 / (spec.n_ta.max(1) as f64).sqrt();
        s.amp_ta.fill(Complex64::new(a, 0.0));
        s
    }

    /// One photon localized at lattice site `m`.
    pub fn photon_at(spec: &SystemSpec, m: i64) -> Option<Self> {
        let mut s = Self::vacuum(spec);
        *s.amp_field.get_mut(spec.site_index(m)?)? = Complex64::new(1.0, 0.0);
        Some(s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_ta
            .iter()
            .chain(&self.amp_ca)
            .chain(&self.amp_field)
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Excitation probability of the target ensemble.
    pub fn target_population(&self) -> f64 {
        self.amp_ta.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Symmetric-mode amplitude of the target ensemble.
    pub fn collective_target(&self) -> Complex64 {
        collective(&self.amp_ta)
    }

    pub fn collective_control(&self) -> Complex64 {
        collective(&self.amp_ca)
    }

    pub fn field_at(&self, spec: &SystemSpec, m: i64) -> Option<Complex64> {
        spec.site_index(m).and_then(|i| self.amp_field.get(i).copied())
    }

    fn to_vector(&self) -> Vec<Complex64> {
        self.amp_ta
            .iter()
            .chain(&self.amp_ca)
            .chain(&self.amp_field)
            .copied()
            .collect()
    }

    fn from_vector(t: f64, v: &[Complex64], n_ta: usize, n_ca: usize) -> Self {
        SingleExcitationState {
            t,
            amp_ta: v[..n_ta].to_vec(),
            amp_ca: v[n_ta..n_ta + n_ca].to_vec(),
            amp_field: v[n_ta + n_ca..].to_vec(),
        }
    }
}

fn collective(amps: &[Complex64]) -> Complex64 {
    if amps.is_empty() {
        return Complex64::default();
    }
    amps.iter().sum::<Complex64>() / (amps.len() as f64).sqrt()
}

/// Sparse `-i H - kappa P_field` on the ordering (targets, controls, sites).
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub n_ta: usize,
    pub n_ca: usize,
    pub n_sites: usize,
    pub kappa: f64,
    /// Nonzero entries `(row, col, value)` of the real Hamiltonian.
    pub entries: Vec<(usize, usize, f64)>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.n_ta + self.n_ca + self.n_sites
    }

    pub fn field_offset(&self) -> usize {
        self.n_ta + self.n_ca
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            h[(r, c)] += v;
        }
        h
    }

    /// Largest `|H - H^T|` entry; the Hamiltonian is real so this is the
    /// Hermiticity defect.
    pub fn hermiticity_defect(&self) -> f64 {
        let h = self.hamiltonian();
        (&h - h.transpose()).amax()
    }

    /// `out = (-i H - kappa P_field) psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
        for &(r, c, v) in &self.entries {
            out[r] += Complex64::new(psi[c].im * v, -psi[c].re * v);
        }
        if self.kappa != 0.0 {
            let off = self.field_offset();
            for (o, p) in out[off..].iter_mut().zip(&psi[off..]) {
                *o -= self.kappa * p;
            }
        }
    }
}

pub fn build_generator(spec: &SystemSpec) -> Generator {
    let (n_ta, n_ca, n_sites) = (spec.n_ta, spec.n_ca, spec.n_sites());
    let off = n_ta + n_ca;
    let mut entries = Vec::new();
    let mut push = |r: usize, c: usize, v: f64| {
        if v != 0.0 {
            entries.push((r, c, v));
            if r != c {
                entries.push((c, r, v));
            }
        }
    };
    let site = |m: i64| spec.site_index(m).map(|i| off + i);
    for i in 0..n_ta {
        push(i, i, spec.omega_ta);
        if let Some(s) = site(spec.ta_site) {
            push(s, i, spec.g_ta);
        }
    }
    for j in 0..n_ca {
        let a = n_ta + j;
        push(a, a, spec.omega_ca);
        let legs = [(0, spec.g_ca_left), (spec.ca_site, spec.g_ca_right)];
        for (m, coupling) in legs {
            if let Some(s) = site(m) {
                push(s, a, coupling);
            }
        }
    }
    for k in 0..n_sites {
        push(off + k, off + k, spec.omega_res);
        if k + 1 < n_sites {
            push(off + k + 1, off + k, -spec.hopping);
        }
    }
    let generator = Generator {
        n_ta,
        n_ca,
        n_sites,
        kappa: spec.kappa,
        entries,
    };
    debug_assert_eq!(generator.hermiticity_defect(), 0.0);
    generator
}

fn check_initial(spec: &SystemSpec, initial: &SingleExcitationState) -> Result<(), OracleError> {
    if initial.amp_ta.len() != spec.n_ta
        || initial.amp_ca.len() != spec.n_ca
        || initial.amp_field.len() != spec.n_sites()
    {
        return Err(OracleError::InvalidInitial(
            "state does not match the spec dimensions".into(),
        ));
    }
    let norm = initial.norm_sqr();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
        return Err(OracleError::InvalidInitial(format!("norm {norm} is not 1")));
    }
    Ok(())
}

fn check_grid(initial: &SingleExcitationState, t_grid: &[f64]) -> Result<(), OracleError> {
    let mut prev = initial.t;
    for &t in t_grid {
        if !t.is_finite() || t < prev {
            return Err(OracleError::InvalidSettings(format!(
                "time grid must be non-decreasing from t = {}",
                initial.t
            )));
        }
        prev = t;
    }
    Ok(())
}

/// RK4 propagation, sampled at each time of `t_grid` (which must not precede
/// `initial.t`). Each output interval is split into steps no longer than
/// [`PROPAGATION_DT`].
pub fn propagate(
    spec: &SystemSpec,
    initial: &SingleExcitationState,
    t_grid: &[f64],
) -> Result<Vec<SingleExcitationState>, OracleError> {
    check_initial(spec, initial)?;
    check_grid(initial, t_grid)?;
    let gen = build_generator(spec);
    let n = gen.dim();
    let mut psi = initial.to_vector();
    let mut t = initial.t;
    let zero = vec![Complex64::default(); n];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - t;
        let steps = (span / PROPAGATION_DT).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                gen.apply(&psi, &mut k1);
                for i in 0..n {
                    tmp[i] = psi[i] + 0.5 * h * k1[i];
                }
                gen.apply(&tmp, &mut k2);
                for i in 0..n {
                    tmp[i] = psi[i] + 0.5 * h * k2[i];
                }
                gen.apply(&tmp, &mut k3);
                for i in 0..n {
                    tmp[i] = psi[i] + h * k3[i];
                }
                gen.apply(&tmp, &mut k4);
                for i in 0..n {
                    psi[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            if !psi.iter().all(|z| z.is_finite()) {
                return Err(OracleError::NonfiniteState { t: target });
            }
        }
        t = target;
        out.push(SingleExcitationState::from_vector(t, &psi, gen.n_ta, gen.n_ca));
    }
    Ok(out)
}

/// Lossless propagation through the eigenbasis of `H`; exact up to the
/// eigensolver's rounding. Requires `kappa = 0`.
pub fn propagate_eigen(
    spec: &SystemSpec,
    initial: &SingleExcitationState,
    t_grid: &[f64],
) -> Result<Vec<SingleExcitationState>, OracleError> {
    if spec.kappa != 0.0 {
        return Err(OracleError::InvalidSettings(
            "eigenbasis propagation needs kappa = 0".into(),
        ));
    }
    check_initial(spec, initial)?;
    check_grid(initial, t_grid)?;
    let gen = build_generator(spec);
    let eig = SymmetricEigen::new(gen.hamiltonian());
    let v = &eig.eigenvectors;
    let psi0 = initial.to_vector();
    let n = gen.dim();
    // coefficients in the eigenbasis
    let coef: Vec<Complex64> = (0..n).map(|k| (0..n).map(|i| v[(i, k)] * psi0[i]).sum()).collect();
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let dt = t - initial.t;
        let phased: Vec<Complex64> = coef
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * dt))
            .collect();
        let psi: Vec<Complex64> = (0..n).map(|i| (0..n).map(|k| v[(i, k)] * phased[k]).sum()).collect();
        out.push(SingleExcitationState::from_vector(t, &psi, gen.n_ta, gen.n_ca));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicProfile {
    pub exists: bool,
    /// Energy of the dark state in the frame of the spec.
    pub energy: Option<f64>,
    /// First site of `photon`.
    pub m_min: i64,
    /// Photon probability per site, normalized to one; all zero when the
    /// dark state has no photonic part.
    pub photon: Vec<f64>,
    /// Weight of the atomic amplitudes in the dark state.
    pub atomic_weight: f64,
}

/// Looks for a lossless eigenstate at the resonance frequency whose field is
/// confined to the region spanned by the coupling sites.
///
/// Works in the symmetric sector of each ensemble (one collective target and
/// one collective control mode with `sqrt(N)`-enhanced couplings), so the
/// trivially dark antisymmetric atomic combinations are excluded.
pub fn bic_profile(spec: &SystemSpec) -> BicProfile {
    let mut reduced = *spec;
    reduced.kappa = 0.0;
    reduced.g_ta = spec.g_ta * (spec.n_ta as f64).sqrt();
    reduced.n_ta = spec.n_ta.min(1);
    reduced.g_ca_left = spec.g_ca_left * (spec.n_ca as f64).sqrt();
    reduced.g_ca_right = spec.g_ca_right * (spec.n_ca as f64).sqrt();
    reduced.n_ca = spec.n_ca.min(1);
    let none = BicProfile {
        exists: false,
        energy: None,
        m_min: spec.m_min,
        photon: vec![0.0; spec.n_sites()],
        atomic_weight: 0.0,
    };

    let gen = build_generator(&reduced);
    let eig = SymmetricEigen::new(gen.hamiltonian());
    let target = spec.omega_res;
    let candidates: Vec<usize> = (0..gen.dim())
        .filter(|&k| (eig.eigenvalues[k] - target).abs() < BIC_ENERGY_WINDOW * spec.hopping)
        .collect();
    if candidates.is_empty() {
        return none;
    }

    let lo = spec.ta_site.min(0);
    let hi = spec.ta_site.max(spec.ca_site);
    let off = gen.field_offset();
    let outside: Vec<usize> = (spec.m_min..=spec.m_max)
        .filter(|&m| m < lo || m > hi)
        .filter_map(|m| reduced.site_index(m).map(|i| off + i))
        .collect();

    // combinations of the candidates with no weight outside [lo, hi]:
    // null space of W = V_c^T P_out V_c
    let v = eig.eigenvectors.select_columns(&candidates);
    let p_out_v = v.select_rows(&outside);
    let w = p_out_v.transpose() * &p_out_v;
    let inner = SymmetricEigen::new(w);
    let Some((best, &leak)) = inner.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
        return none;
    };
    let state = &v * inner.eigenvectors.column(best);

    let field: Vec<f64> = state.rows(off, gen.n_sites).iter().copied().collect();
    let atomic_weight: f64 = state.rows(0, off).iter().map(|x| x * x).sum();
    let peak = state.amax();
    let edge = [-1, spec.ca_site.max(spec.ta_site) + 1]
        .iter()
        .filter_map(|&m| reduced.site_index(m))
        .map(|i| field[i].abs())
        .fold(0.0, f64::max);
    let confined = leak.max(0.0).sqrt() < BIC_SUPPORT_TOLERANCE * peak && edge < BIC_SUPPORT_TOLERANCE * peak;
    if !confined || atomic_weight < BIC_SUPPORT_TOLERANCE {
        return none;
    }
    let total: f64 = field.iter().map(|x| x * x).sum();
    let photon = if total > BIC_SUPPORT_TOLERANCE * BIC_SUPPORT_TOLERANCE {
        field.iter().map(|x| x * x / total).collect()
    } else {
        vec![0.0; field.len()]
    };
    BicProfile {
        exists: true,
        energy: Some(eig.eigenvalues[candidates[0]]),
        m_min: spec.m_min,
        photon,
        atomic_weight,
    }
}

#[cfg(test)]
mod tests;
