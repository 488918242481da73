use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::SystemSpec;

/// Classical spin components `(x, y, z)` of one atom.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// `x - i y`, twice the classical lowering amplitude.
    pub fn lowering(&self) -> Complex64 {
        Complex64::new(self.x, -self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Counter-clockwise rotation about z, given the cosine and sine of the angle.
    pub fn rotated_z(&self, cos: f64, sin: f64) -> Self {
        BlochVector {
            x: self.x * cos - self.y * sin,
            y: self.x * sin + self.y * cos,
            z: self.z,
        }
    }

    pub(crate) fn axpy(&mut self, a: f64, other: &BlochVector) {
        self.x += a * other.x;
        self.y += a * other.y;
        self.z += a * other.z;
    }
}

/// One phase-space sample: every atom's spin and every resonator's amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub ta: Vec<BlochVector>,
    pub ca: Vec<BlochVector>,
    /// Amplitudes indexed by `m - m_min`.
    pub field: Vec<Complex64>,
}

impl TrajectoryState {
    /// All atoms in `(0, 0, z)` and an empty waveguide.
    pub fn classical(spec: &SystemSpec, ta_z: f64, ca_z: f64) -> Self {
        TrajectoryState {
            t: 0.0,
            ta: vec![BlochVector::new(0.0, 0.0, ta_z); spec.n_ta],
            ca: vec![BlochVector::new(0.0, 0.0, ca_z); spec.n_ca],
            field: vec![Complex64::default(); spec.n_sites()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.ta.iter().all(BlochVector::is_finite)
            && self.ca.iter().all(BlochVector::is_finite)
            && self.field.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Excitation number `sum z/2 + sum |alpha|^2`, conserved when `kappa = 0`.
    pub fn excitation_charge(&self) -> f64 {
        let spins: f64 = self.ta.iter().chain(&self.ca).map(|s| 0.5 * s.z).sum();
        let photons: f64 = self.field.iter().map(|a| a.norm_sqr()).sum();
        spins + photons
    }

    pub(crate) fn matches(&self, spec: &SystemSpec) -> bool {
        self.ta.len() == spec.n_ta && self.ca.len() == spec.n_ca && self.field.len() == spec.n_sites()
    }
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Draws a discrete truncated-Wigner initial condition: target atoms at
/// `(±1, ±1, +1)`, control atoms at `(±1, ±1, -1)`, each sign independent and
/// fair, and every resonator amplitude Gaussian with variance
/// `field_variance` per quadrature (1/4 is the vacuum width).
///
/// Draw order: target spins, control spins, then field sites left to right.
pub fn sample_initial<R: Rng + ?Sized>(spec: &SystemSpec, field_variance: f64, rng: &mut R) -> TrajectoryState {
    let mut draw_spin = |z: f64| {
        let x = random_sign(rng);
        let y = random_sign(rng);
        BlochVector::new(x, y, z)
    };
    let ta: Vec<_> = (0..spec.n_ta).map(|_| draw_spin(1.0)).collect();
    let ca: Vec<_> = (0..spec.n_ca).map(|_| draw_spin(-1.0)).collect();
    let width = field_variance.max(0.0).sqrt();
    let field = (0..spec.n_sites())
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            Complex64::new(width * u, width * v)
        })
        .collect();
    TrajectoryState { t: 0.0, ta, ca, field }
}
