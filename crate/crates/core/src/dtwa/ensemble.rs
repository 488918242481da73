use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{IntegratorSettings, Stepper};
use super::state::{sample_initial, BlochVector, TrajectoryState};
use super::DtwaError;
use crate::model::SystemSpec;

/// Trajectories summed sequentially per block before blocks are merged in
/// index order. Fixed, so the floating-point association never depends on
/// the worker count.
pub const BLOCK_SIZE: usize = 64;

/// Random stream of one trajectory: a ChaCha8 generator keyed by `key` and
/// positioned on stream `stream`.
///
/// Trajectory `i` of an ensemble with master seed `s` uses `{ key: s, stream: i }`,
/// so streams never overlap and any trajectory can be replayed on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrajectorySeed {
    pub key: u64,
    pub stream: u64,
}

impl TrajectorySeed {
    pub fn for_trajectory(master_seed: u64, index: u64) -> Self {
        TrajectorySeed {
            key: master_seed,
            stream: index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for TrajectorySeed {
    fn from(key: u64) -> Self {
        TrajectorySeed { key, stream: 0 }
    }
}

/// Sums over ordered pairs `i != j` of target-spin products.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairMoments {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub yx: f64,
}

impl PairMoments {
    pub fn of(spins: &[BlochVector]) -> Self {
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in spins {
            sx += s.x;
            sy += s.y;
            sxx += s.x * s.x;
            syy += s.y * s.y;
            sxy += s.x * s.y;
        }
        PairMoments {
            xx: sx * sx - sxx,
            yy: sy * sy - syy,
            xy: sx * sy - sxy,
            yx: sy * sx - sxy,
        }
    }

    fn add(&mut self, o: &PairMoments) {
        self.xx += o.xx;
        self.yy += o.yy;
        self.xy += o.xy;
        self.yx += o.yx;
    }

    fn scale(&mut self, f: f64) {
        self.xx *= f;
        self.yy *= f;
        self.xy *= f;
        self.yx *= f;
    }
}

/// Moments sampled on a time grid. Holds either one trajectory's values or,
/// inside an [`EnsembleRecord`], trajectory averages.
///
/// Per-atom and per-site arrays are sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub t_grid: Vec<f64>,
    pub n_ta: usize,
    pub n_ca: usize,
    pub n_sites: usize,
    pub m_min: i64,
    /// Sites whose occupations are tracked as edge fields (`-1` and `N+1`).
    pub edge_sites: [i64; 2],
    pub ta: Vec<BlochVector>,
    pub ca: Vec<BlochVector>,
    pub ta_pair: Vec<PairMoments>,
    pub field_abs2: Vec<f64>,
    pub edge_fields: Vec<[f64; 2]>,
}

impl MomentSeries {
    pub fn zeros(spec: &SystemSpec, t_grid: Vec<f64>) -> Self {
        let ns = t_grid.len();
        MomentSeries {
            n_ta: spec.n_ta,
            n_ca: spec.n_ca,
            n_sites: spec.n_sites(),
            m_min: spec.m_min,
            edge_sites: [-1, spec.ca_site + 1],
            ta: vec![BlochVector::default(); ns * spec.n_ta],
            ca: vec![BlochVector::default(); ns * spec.n_ca],
            ta_pair: vec![PairMoments::default(); ns],
            field_abs2: vec![0.0; ns * spec.n_sites()],
            edge_fields: vec![[0.0; 2]; ns],
            t_grid,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.t_grid.len()
    }

    pub fn ta_at(&self, sample: usize) -> &[BlochVector] {
        &self.ta[sample * self.n_ta..(sample + 1) * self.n_ta]
    }

    pub fn ca_at(&self, sample: usize) -> &[BlochVector] {
        &self.ca[sample * self.n_ca..(sample + 1) * self.n_ca]
    }

    /// `|alpha_m|^2` for every site at one sample, indexed by `m - m_min`.
    pub fn field_at(&self, sample: usize) -> &[f64] {
        &self.field_abs2[sample * self.n_sites..(sample + 1) * self.n_sites]
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n_sites as i64).map(move |k| self.m_min + k)
    }

    fn record(&mut self, sample: usize, state: &TrajectoryState) {
        let ta = &mut self.ta[sample * self.n_ta..(sample + 1) * self.n_ta];
        for (acc, s) in ta.iter_mut().zip(&state.ta) {
            acc.axpy(1.0, s);
        }
        let ca = &mut self.ca[sample * self.n_ca..(sample + 1) * self.n_ca];
        for (acc, s) in ca.iter_mut().zip(&state.ca) {
            acc.axpy(1.0, s);
        }
        self.ta_pair[sample].add(&PairMoments::of(&state.ta));
        let field = &mut self.field_abs2[sample * self.n_sites..(sample + 1) * self.n_sites];
        for (acc, a) in field.iter_mut().zip(&state.field) {
            *acc += a.norm_sqr();
        }
        for (slot, m) in self.edge_sites.iter().enumerate() {
            let k = (m - self.m_min) as usize;
            self.edge_fields[sample][slot] += state.field[k].norm_sqr();
        }
    }

    fn add(&mut self, o: &MomentSeries) {
        let add_spins = |a: &mut [BlochVector], b: &[BlochVector]| {
            for (x, y) in a.iter_mut().zip(b) {
                x.axpy(1.0, y);
            }
        };
        add_spins(&mut self.ta, &o.ta);
        add_spins(&mut self.ca, &o.ca);
        for (x, y) in self.ta_pair.iter_mut().zip(&o.ta_pair) {
            x.add(y);
        }
        for (x, y) in self.field_abs2.iter_mut().zip(&o.field_abs2) {
            *x += y;
        }
        for (x, y) in self.edge_fields.iter_mut().zip(&o.edge_fields) {
            x[0] += y[0];
            x[1] += y[1];
        }
    }

    fn scale(&mut self, f: f64) {
        for s in self.ta.iter_mut().chain(self.ca.iter_mut()) {
            s.x *= f;
            s.y *= f;
            s.z *= f;
        }
        for p in self.ta_pair.iter_mut() {
            p.scale(f);
        }
        for x in self.field_abs2.iter_mut() {
            *x *= f;
        }
        for e in self.edge_fields.iter_mut() {
            e[0] *= f;
            e[1] *= f;
        }
    }
}

/// Trajectory-averaged, symmetrically ordered moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRecord {
    pub moments: MomentSeries,
    pub n_traj: usize,
    pub master_seed: u64,
}

impl std::ops::Deref for EnsembleRecord {
    type Target = MomentSeries;

    fn deref(&self) -> &MomentSeries {
        &self.moments
    }
}

fn accumulate_trajectory(
    spec: &SystemSpec,
    settings: &IntegratorSettings,
    seed: TrajectorySeed,
    stepper: &mut Stepper,
    acc: &mut MomentSeries,
) -> Result<(), DtwaError> {
    let steps = settings.n_steps()?;
    let mut rng = seed.rng();
    let mut state = sample_initial(spec, settings.field_variance, &mut rng);
    acc.record(0, &state);
    let mut sample = 1;
    for k in 1..=steps {
        stepper.step(&mut state, &mut rng)?;
        if k % settings.sample_stride == 0 {
            acc.record(sample, &state);
            sample += 1;
        }
    }
    Ok(())
}

/// Integrates one trajectory and returns its sampled moments. The result is a
/// pure function of `(spec, settings, seed)`.
pub fn run_trajectory(
    spec: &SystemSpec,
    settings: &IntegratorSettings,
    seed: impl Into<TrajectorySeed>,
) -> Result<MomentSeries, DtwaError> {
    let seed = seed.into();
    let mut stepper = Stepper::new(spec, *settings)?;
    let mut acc = MomentSeries::zeros(spec, settings.sample_times()?);
    accumulate_trajectory(spec, settings, seed, &mut stepper, &mut acc).map_err(|e| e.in_trajectory(seed))?;
    Ok(acc)
}

fn run_block(
    spec: &SystemSpec,
    settings: &IntegratorSettings,
    master_seed: u64,
    range: std::ops::Range<usize>,
    t_grid: &[f64],
) -> Result<MomentSeries, DtwaError> {
    let mut stepper = Stepper::new(spec, *settings)?;
    let mut acc = MomentSeries::zeros(spec, t_grid.to_vec());
    for i in range {
        let seed = TrajectorySeed::for_trajectory(master_seed, i as u64);
        accumulate_trajectory(spec, settings, seed, &mut stepper, &mut acc).map_err(|e| e.in_trajectory(seed))?;
    }
    Ok(acc)
}

/// Runs `n_traj` independent trajectories on the current rayon pool and
/// averages their moments.
///
/// Trajectory `i` draws from [`TrajectorySeed::for_trajectory`]`(master_seed, i)`.
/// Sums are formed per fixed block of [`BLOCK_SIZE`] trajectories and merged
/// in block order, so the record is bit-identical for any worker count.
pub fn run_ensemble(
    spec: &SystemSpec,
    settings: &IntegratorSettings,
    master_seed: u64,
    n_traj: usize,
) -> Result<EnsembleRecord, DtwaError> {
    if n_traj == 0 {
        return Err(DtwaError::InvalidSettings("n_traj must be >= 1".into()));
    }
    Stepper::new(spec, *settings)?;
    let t_grid = settings.sample_times()?;
    let n_blocks = n_traj.div_ceil(BLOCK_SIZE);
    // merge a bounded wave of blocks at a time to cap memory
    let wave = (2 * rayon::current_num_threads()).max(4);

    let mut total = MomentSeries::zeros(spec, t_grid.clone());
    for first in (0..n_blocks).step_by(wave) {
        let last = (first + wave).min(n_blocks);
        let partials: Vec<Result<MomentSeries, DtwaError>> = (first..last)
            .into_par_iter()
            .map(|b| {
                let range = b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(n_traj);
                run_block(spec, settings, master_seed, range, &t_grid)
            })
            .collect();
        for partial in partials {
            total.add(&partial?);
        }
    }
    total.scale(1.0 / n_traj as f64);
    Ok(EnsembleRecord {
        moments: total,
        n_traj,
        master_seed,
    })
}
