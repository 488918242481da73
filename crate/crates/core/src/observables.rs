//! Physical observables from trajectory-averaged moments.
//!
//! Photon numbers are symmetric-ordering corrected: `<a^dag a> = <|alpha|^2> - 1/2`.

use thiserror::Error;

use crate::dtwa::MomentSeries;

/// Samples per local quadratic fit when smoothing before differentiation.
pub const SMOOTHING_WINDOW: usize = 11;

/// Below this total edge occupation the chirality is left undefined.
pub const CHIRALITY_MIN_DENOMINATOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("NO_CROSSING: inversion never reaches zero inside the simulated window")]
    NoCrossing,
    #[error("NONPOSITIVE_START: inversion must start positive, got {0}")]
    NonpositiveStart(f64),
    #[error("TOO_FEW_ATOMS: pair correlation needs at least two target atoms, got {0}")]
    TooFewAtoms(usize),
    #[error("OUT_OF_RANGE: t = {t} lies outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

impl ObservableError {
    pub fn code(&self) -> &'static str {
        match self {
            ObservableError::NoCrossing => "NO_CROSSING",
            ObservableError::NonpositiveStart(_) => "NONPOSITIVE_START",
            ObservableError::TooFewAtoms(_) => "TOO_FEW_ATOMS",
            ObservableError::OutOfRange { .. } => "OUT_OF_RANGE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(t.len(), values.len(), "time grid and values differ in length");
        TimeSeries { t, values }
    }

    pub fn from_fn(t: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let values = t.iter().map(|&x| f(x)).collect();
        TimeSeries { t, values }
    }

    /// Linear interpolation at `t`.
    pub fn at(&self, t: f64) -> Result<f64, ObservableError> {
        let (k, w) = locate(&self.t, t)?;
        Ok(lerp(
            self.values[k],
            self.values.get(k + 1).copied().unwrap_or(self.values[k]),
            w,
        ))
    }
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

/// Bracketing index and weight of `t` on an increasing grid.
fn locate(grid: &[f64], t: f64) -> Result<(usize, f64), ObservableError> {
    let out = || ObservableError::OutOfRange {
        t,
        start: grid.first().copied().unwrap_or(f64::NAN),
        end: grid.last().copied().unwrap_or(f64::NAN),
    };
    let (first, last) = match (grid.first(), grid.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(out()),
    };
    let tol = 1e-9 * (1.0 + last.abs());
    if !(t >= first - tol && t <= last + tol) {
        return Err(out());
    }
    if grid.len() == 1 {
        return Ok((0, 0.0));
    }
    let k = grid.partition_point(|&x| x <= t).clamp(1, grid.len() - 1) - 1;
    let w = ((t - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
    Ok((k, w))
}

/// Value of a least-squares polynomial (degree <= 2) through the window
/// centred on each sample; windows are shifted inward at the ends.
pub fn smooth(series: &TimeSeries) -> TimeSeries {
    let n = series.t.len();
    let width = SMOOTHING_WINDOW.min(n);
    let half = width / 2;
    let values = (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - width);
            local_fit(
                &series.t[start..start + width],
                &series.values[start..start + width],
                series.t[i],
            )
        })
        .collect();
    TimeSeries {
        t: series.t.clone(),
        values,
    }
}

fn local_fit(t: &[f64], y: &[f64], at: f64) -> f64 {
    let degree = (t.len().saturating_sub(1)).min(2);
    if degree == 0 {
        return y.first().copied().unwrap_or(f64::NAN);
    }
    let scale = (t[t.len() - 1] - t[0]).abs().max(f64::MIN_POSITIVE);
    // normal equations in the centred, scaled variable
    let dim = degree + 1;
    let mut a = [[0.0f64; 4]; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let u = (ti - at) / scale;
        let powers = [1.0, u, u * u];
        for r in 0..dim {
            for c in 0..dim {
                a[r][c] += powers[r] * powers[c];
            }
            a[r][3] += powers[r] * yi;
        }
    }
    // Gaussian elimination with partial pivoting on the 3x4 (or 2x3) system
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        for row in col + 1..dim {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
        }
    }
    let mut coef = [0.0f64; 3];
    for row in (0..dim).rev() {
        let mut acc = a[row][3];
        for c in row + 1..dim {
            acc -= a[row][c] * coef[c];
        }
        coef[row] = acc / a[row][row];
    }
    coef[0]
}

/// Centred finite differences (one-sided at the ends).
fn derivative(series: &TimeSeries) -> Vec<f64> {
    let (t, y) = (&series.t, &series.values);
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[r] - y[l]) / (t[r] - t[l])
        })
        .collect()
}

/// `<S_Tz>(t) = (1/2) sum_i <T_z^(i)>(t)`.
pub fn collective_inversion(rec: &MomentSeries) -> TimeSeries {
    let values = (0..rec.n_samples())
        .map(|k| 0.5 * rec.ta_at(k).iter().map(|s| s.z).sum::<f64>())
        .collect();
    TimeSeries {
        t: rec.t_grid.clone(),
        values,
    }
}

/// `2 <S_Tz> / N_T` at time `t`.
pub fn inversion_fraction(rec: &MomentSeries, t: f64) -> Result<f64, ObservableError> {
    let s = collective_inversion(rec).at(t)?;
    Ok(2.0 * s / rec.n_ta as f64)
}

/// First down-crossing of zero of the smoothed series, linearly interpolated.
pub fn half_decay_time(series: &TimeSeries) -> Result<f64, ObservableError> {
    let smoothed = smooth(series);
    let v = &smoothed.values;
    match v.first() {
        Some(&v0) if v0 > 0.0 => {}
        Some(&v0) => return Err(ObservableError::NonpositiveStart(v0)),
        None => return Err(ObservableError::NoCrossing),
    }
    for k in 0..v.len() - 1 {
        if v[k] > 0.0 && v[k + 1] <= 0.0 {
            let (t0, t1) = (smoothed.t[k], smoothed.t[k + 1]);
            return Ok(t0 + (t1 - t0) * v[k] / (v[k] - v[k + 1]));
        }
    }
    Err(ObservableError::NoCrossing)
}

/// `|d<S_Tz>/dt|` at `t_h`, from centred differences of the smoothed series.
pub fn radiance_strength(series: &TimeSeries, t_h: f64) -> Result<f64, ObservableError> {
    let smoothed = smooth(series);
    let slope = TimeSeries {
        t: smoothed.t.clone(),
        values: derivative(&smoothed),
    };
    Ok(slope.at(t_h)?.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadianceResult {
    pub t_h: f64,
    pub strength: f64,
    pub valid: bool,
}

impl RadianceResult {
    pub fn invalid() -> Self {
        RadianceResult {
            t_h: f64::NAN,
            strength: f64::NAN,
            valid: false,
        }
    }
}

/// Half-decay time and radiance strength of an inversion series.
pub fn radiance(series: &TimeSeries) -> Result<RadianceResult, ObservableError> {
    let t_h = half_decay_time(series)?;
    let strength = radiance_strength(series, t_h)?;
    Ok(RadianceResult {
        t_h,
        strength,
        valid: true,
    })
}

/// Pair-averaged `<sigma_+^(i) sigma_-^(j)>` over target atoms `i != j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelation {
    pub re: f64,
    /// Diagnostic only; vanishes identically for a symmetric pair sum.
    pub im: f64,
}

pub fn pair_correlation(rec: &MomentSeries, t: f64) -> Result<PairCorrelation, ObservableError> {
    if rec.n_ta < 2 {
        return Err(ObservableError::TooFewAtoms(rec.n_ta));
    }
    let (k, w) = locate(&rec.t_grid, t)?;
    let k1 = (k + 1).min(rec.n_samples() - 1);
    let (p, q) = (rec.ta_pair[k], rec.ta_pair[k1]);
    let pairs = (rec.n_ta * (rec.n_ta - 1)) as f64;
    let re = lerp(p.xx + p.yy, q.xx + q.yy, w) / (4.0 * pairs);
    let im = lerp(p.yx - p.xy, q.yx - q.xy, w) / (4.0 * pairs);
    Ok(PairCorrelation { re, im })
}

/// Photon numbers at sites `-1` and `N+1` at time `t`.
pub fn edge_photons(rec: &MomentSeries, t: f64) -> Result<[f64; 2], ObservableError> {
    let (k, w) = locate(&rec.t_grid, t)?;
    let k1 = (k + 1).min(rec.n_samples() - 1);
    let (a, b) = (rec.edge_fields[k], rec.edge_fields[k1]);
    Ok([
        (lerp(a[0], b[0], w) - 0.5).max(0.0),
        (lerp(a[1], b[1], w) - 0.5).max(0.0),
    ])
}

/// Left-right emission asymmetry `(n_-1 - n_N+1) / (n_-1 + n_N+1)`; `None`
/// when the edges are too dark for the ratio to mean anything.
pub fn chirality(rec: &MomentSeries, t: f64) -> Result<Option<f64>, ObservableError> {
    let [left, right] = edge_photons(rec, t)?;
    Ok(chirality_of(left, right))
}

pub fn chirality_of(left: f64, right: f64) -> Option<f64> {
    let den = left + right;
    (den >= CHIRALITY_MIN_DENOMINATOR).then(|| (left - right) / den)
}

/// Photon occupation per site and sample (sample-major), clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    pub t_grid: Vec<f64>,
    pub m_min: i64,
    pub n_sites: usize,
    pub values: Vec<f64>,
}

impl IntensityMap {
    pub fn at(&self, sample: usize, m: i64) -> Option<f64> {
        let k = usize::try_from(m - self.m_min).ok().filter(|&k| k < self.n_sites)?;
        self.values.get(sample * self.n_sites + k).copied()
    }

    /// Total photon number in sites `lo..=hi` at one sample.
    pub fn window_sum(&self, sample: usize, lo: i64, hi: i64) -> f64 {
        (lo..=hi).filter_map(|m| self.at(sample, m)).sum()
    }
}

pub fn intensity_map(rec: &MomentSeries) -> IntensityMap {
    IntensityMap {
        t_grid: rec.t_grid.clone(),
        m_min: rec.m_min,
        n_sites: rec.n_sites,
        values: rec.field_abs2.iter().map(|&a| (a - 0.5).max(0.0)).collect(),
    }
}

/// Every time-resolved observable of one ensemble record.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub t_grid: Vec<f64>,
    pub s_tz: Vec<f64>,
    /// Empty when fewer than two target atoms are simulated.
    pub c_tt: Vec<PairCorrelation>,
    pub eta: Vec<Option<f64>>,
    pub intensity: IntensityMap,
}

pub fn observable_series(rec: &MomentSeries) -> ObservableSeries {
    let s_tz = collective_inversion(rec).values;
    let c_tt = if rec.n_ta >= 2 {
        rec.t_grid
            .iter()
            .map(|&t| pair_correlation(rec, t).expect("grid time in range"))
            .collect()
    } else {
        Vec::new()
    };
    let eta = rec
        .edge_fields
        .iter()
        .map(|e| chirality_of((e[0] - 0.5).max(0.0), (e[1] - 0.5).max(0.0)))
        .collect();
    ObservableSeries {
        t_grid: rec.t_grid.clone(),
        s_tz,
        c_tt,
        eta,
        intensity: intensity_map(rec),
    }
}
