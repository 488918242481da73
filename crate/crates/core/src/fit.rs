//! Scaling laws and ratios across families of runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("TOO_FEW_POINTS: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("NONPOSITIVE_POINT: ({n}, {value}) cannot be fitted in log space")]
    NonpositivePoint { n: f64, value: f64 },
    #[error("DIVISION_BY_ZERO: reference strength is {0}")]
    DivisionByZero(f64),
    #[error("UNSORTED_POINTS: N values must increase")]
    Unsorted,
}

impl FitError {
    pub fn code(&self) -> &'static str {
        match self {
            FitError::TooFewPoints { .. } => "TOO_FEW_POINTS",
            FitError::NonpositivePoint { .. } => "NONPOSITIVE_POINT",
            FitError::DivisionByZero(_) => "DIVISION_BY_ZERO",
            FitError::Unsorted => "UNSORTED_POINTS",
        }
    }
}

/// `I = c N^alpha`, fitted by least squares on `(ln N, ln I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// RMS residual in natural-log space.
    pub residual: f64,
    /// Standard error of the exponent from the OLS residuals.
    pub exponent_stderr: f64,
    pub points: Vec<(f64, f64)>,
}

impl PowerLawFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.prefactor * n.powf(self.exponent)
    }
}

pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(&(n, value)) = points.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(FitError::NonpositivePoint { n, value });
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::TooFewPoints { needed: 2, got: 1 });
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - alpha * x).powi(2))
        .sum();
    Ok(PowerLawFit {
        prefactor: intercept.exp(),
        exponent: alpha,
        residual: (sse / k).sqrt(),
        exponent_stderr: (sse / (k - 2.0) / sxx).sqrt(),
        points: points.to_vec(),
    })
}

/// `R = I / I_Dicke`.
pub fn dicke_ratio(strength: f64, dicke_strength: f64) -> Result<f64, FitError> {
    if dicke_strength <= 0.0 || !dicke_strength.is_finite() {
        return Err(FitError::DivisionByZero(dicke_strength));
    }
    Ok(strength / dicke_strength)
}

/// Fraction by which the last two points may differ and still count as saturated.
pub const SATURATION_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationEstimate {
    /// Mean over the top quartile of `N` values.
    pub plateau: f64,
    pub saturated: bool,
    pub points: Vec<(f64, f64)>,
}

pub fn saturation_curve(points: &[(f64, f64)]) -> Result<SaturationEstimate, FitError> {
    if points.len() < 4 {
        return Err(FitError::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(FitError::Unsorted);
    }
    let top = points.len().div_ceil(4);
    let tail = &points[points.len() - top..];
    let plateau = tail.iter().map(|p| p.1).sum::<f64>() / top as f64;
    let (a, b) = (points[points.len() - 2].1, points[points.len() - 1].1);
    let scale = a.abs().max(b.abs());
    let saturated = scale == 0.0 || (b - a).abs() < SATURATION_TOLERANCE * scale;
    Ok(SaturationEstimate {
        plateau,
        saturated,
        points: points.to_vec(),
    })
}
