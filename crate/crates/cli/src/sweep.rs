//! Families of runs over one system parameter, and fits across them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use superrad_core::fit::{dicke_ratio, power_law_fit, saturation_curve, FitError, PowerLawFit, SaturationEstimate};
use toml::{Table, Value};

use crate::config::{from_document, merge, ExperimentConfig, Mode};
use crate::error::CliError;
use crate::experiment::{run_experiment, time_label, RunSummary};
use crate::output::{fmt_f64, Artifact, Table as Csv};

const INTEGER_AXES: &[&str] = &["n", "N", "N_T", "N_C", "m_min", "m_max"];
const REAL_AXES: &[&str] = &["J", "omega", "omega_T", "omega_C", "kappa", "g", "G1", "G2"];

/// Seed of the `index`-th axis value: SplitMix64 of `master + index * golden`,
/// kept to 63 bits so it fits a TOML integer.
/// Variants at the same axis value share the seed, so ratios between
/// variants use common random numbers.
pub fn point_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) >> 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub variant: String,
    pub value: Option<f64>,
    pub seed: u64,
    /// `ok` or the error class of a failed run.
    pub status: String,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantAnalysis {
    pub variant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_law: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_law_error: Option<String>,
    /// `I / I_dicke` per axis value, when a `dicke` variant is present.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub dicke_ratio: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub saturation: BTreeMap<String, SaturationEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: Option<String>,
    pub points: Vec<SweepPoint>,
    pub analysis: Vec<VariantAnalysis>,
}

impl SweepSummary {
    pub fn point(&self, variant: &str, value: Option<f64>) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.variant == variant && p.value == value)
    }

    pub fn analysis(&self, variant: &str) -> Option<&VariantAnalysis> {
        self.analysis.iter().find(|a| a.variant == variant)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub artifacts: Vec<Artifact>,
}

fn axis_value(axis: &str, value: f64) -> Result<Value, CliError> {
    if INTEGER_AXES.contains(&axis) {
        if value.fract() != 0.0 {
            return Err(CliError::ConfigInvalid(format!(
                "axis {axis} takes integers, got {value}"
            )));
        }
        Ok(Value::Integer(value as i64))
    } else if REAL_AXES.contains(&axis) {
        Ok(Value::Float(value))
    } else {
        Err(CliError::ConfigInvalid(format!(
            "axis '{axis}' is not a numeric system parameter; choose from {}",
            INTEGER_AXES
                .iter()
                .chain(REAL_AXES)
                .copied()
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}

fn point_name(variant: &str, axis: Option<&str>, value: Option<f64>) -> String {
    match (axis, value) {
        (Some(a), Some(v)) => format!("points/{variant}/{a}-{}", time_label(v)),
        _ => format!("points/{variant}"),
    }
}

/// Runs every (variant, value) point of the configuration's sweep. `axis`
/// and `values` replace the configured ones when given. A failed point is
/// recorded and the sweep carries on.
pub fn run_sweep(
    config: &ExperimentConfig,
    axis: Option<&str>,
    values: Option<&[f64]>,
) -> Result<SweepOutcome, CliError> {
    let section = config.sweep.clone().unwrap_or(crate::config::SweepSection {
        axis: None,
        values: Vec::new(),
        variants: BTreeMap::new(),
    });
    let axis = axis.map(str::to_string).or(section.axis.clone());
    let values: Vec<f64> = values.map(<[f64]>::to_vec).unwrap_or(section.values.clone());
    if axis.is_some() && values.is_empty() {
        return Err(CliError::ConfigInvalid("sweep axis given without values".into()));
    }
    let mut variants = section.variants.clone();
    if variants.is_empty() {
        variants.insert("base".into(), Table::new());
    }
    let points: Vec<Option<f64>> = match &axis {
        Some(_) => values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    if let (Some(a), Some(v)) = (&axis, values.first()) {
        axis_value(a, *v)?;
    }

    let mut base = config.to_table();
    base.remove("sweep");

    let mut results = Vec::new();
    let mut artifacts = Vec::new();
    for (name, overrides) in &variants {
        for (index, value) in points.iter().enumerate() {
            let seed = point_seed(config.run.master_seed, index as u64);
            let mut doc = base.clone();
            let system = doc
                .entry("system")
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("system is a table");
            merge(system, overrides);
            if let (Some(a), Some(v)) = (&axis, value) {
                system.insert(a.clone(), axis_value(a, *v)?);
            }
            doc.entry("run")
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("run is a table")
                .insert("master_seed".into(), Value::Integer(seed as i64));
            let outcome = from_document(doc).and_then(|cfg| run_experiment(&cfg));
            let dir = point_name(name, axis.as_deref(), *value);
            let point = match outcome {
                Ok(out) => {
                    for mut a in out.artifacts {
                        a.name = format!("{dir}/{}", a.name);
                        artifacts.push(a);
                    }
                    SweepPoint {
                        variant: name.clone(),
                        value: *value,
                        seed,
                        status: "ok".into(),
                        summary: Some(out.summary),
                        error: None,
                    }
                }
                Err(e) => SweepPoint {
                    variant: name.clone(),
                    value: *value,
                    seed,
                    status: e.code().into(),
                    summary: None,
                    error: Some(e.to_string()),
                },
            };
            results.push(point);
        }
    }

    let analysis = analyse(
        axis.as_deref(),
        &variants.keys().cloned().collect::<Vec<_>>(),
        &results,
        config,
    );
    let summary = SweepSummary {
        axis: axis.clone(),
        points: results,
        analysis,
    };
    artifacts.push(sweep_table(&summary)?);
    Ok(SweepOutcome { summary, artifacts })
}

fn series(points: &[SweepPoint], variant: &str, key: &str) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter(|p| p.variant == variant)
        .filter_map(|p| Some((p.value?, p.summary.as_ref()?.get(key)?)))
        .collect()
}

fn analyse(
    axis: Option<&str>,
    variants: &[String],
    points: &[SweepPoint],
    config: &ExperimentConfig,
) -> Vec<VariantAnalysis> {
    let dicke = series(points, "dicke", "I");
    variants
        .iter()
        .map(|v| {
            let mut a = VariantAnalysis {
                variant: v.clone(),
                power_law: None,
                power_law_error: None,
                dicke_ratio: BTreeMap::new(),
                saturation: BTreeMap::new(),
            };
            let strength = series(points, v, "I");
            if axis == Some("N_T") {
                match power_law_fit(&strength) {
                    Ok(f) => a.power_law = Some(f),
                    Err(e) => a.power_law_error = Some(e.to_string()),
                }
            }
            if v != "dicke" {
                for &(x, i) in &strength {
                    if let Some(&(_, d)) = dicke.iter().find(|p| p.0 == x) {
                        if let Ok(r) = dicke_ratio(i, d) {
                            a.dicke_ratio.insert(time_label(x), r);
                        }
                    }
                }
            }
            if axis == Some("N_C") {
                let mut keys = vec!["I".to_string()];
                for &t in &config.run.probe_times {
                    keys.push(format!("eta_t{}", time_label(t)));
                    keys.push(format!("fraction_t{}", time_label(t)));
                }
                for key in keys {
                    if let Ok(s) = saturation_curve(&series(points, v, &key)) {
                        a.saturation.insert(key, s);
                    }
                }
            }
            a
        })
        .collect()
}

fn sweep_table(summary: &SweepSummary) -> Result<Artifact, CliError> {
    let mut keys: BTreeSet<&str> = summary
        .points
        .iter()
        .filter_map(|p| p.summary.as_ref())
        .flat_map(|s| s.scalars.keys().map(String::as_str))
        .collect();
    // keep the fit columns even when no point crossed zero
    if summary
        .points
        .iter()
        .any(|p| p.summary.as_ref().is_some_and(|s| s.mode == Mode::Dtwa))
    {
        keys.extend(["T_h", "I"]);
    }
    let mut header = vec!["variant", "value", "seed", "status"];
    header.extend(keys.iter().copied());
    let mut t = Csv::new(&header)?;
    for p in &summary.points {
        let mut row = vec![
            p.variant.clone(),
            p.value.map_or_else(String::new, fmt_f64),
            p.seed.to_string(),
            p.status.clone(),
        ];
        for k in &keys {
            row.push(
                p.summary
                    .as_ref()
                    .and_then(|s| s.get(k))
                    .map_or_else(String::new, fmt_f64),
            );
        }
        t.row(row)?;
    }
    t.finish("sweep.csv")
}

/// Reads a sweep table (columns `value` and `I`, optional `variant`) and fits
/// `I = c N^alpha` per variant.
pub fn fit_table(text: &str) -> Result<BTreeMap<String, PowerLawFit>, CliError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h));
    let x = col(&["value", "N", "N_T"])
        .ok_or_else(|| CliError::ConfigInvalid("fit input needs a 'value' column".into()))?;
    let y = col(&["I"]).ok_or_else(|| CliError::ConfigInvalid("fit input needs an 'I' column".into()))?;
    let variant = col(&["variant"]);
    let status = col(&["status"]);
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        if status.is_some_and(|s| record.get(s) != Some("ok")) {
            continue;
        }
        let parse = |i: usize| record.get(i).and_then(|s| s.trim().parse::<f64>().ok());
        let (Some(n), Some(i)) = (parse(x), parse(y)) else {
            continue;
        };
        let name = variant.and_then(|v| record.get(v)).unwrap_or("all").to_string();
        groups.entry(name).or_default().push((n, i));
    }
    if groups.is_empty() {
        return Err(FitError::TooFewPoints { needed: 2, got: 0 }.into());
    }
    let mut fits = BTreeMap::new();
    for (name, pts) in groups {
        fits.insert(name, power_law_fit(&pts)?);
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{layered_document, Overrides};

    #[test]
    fn point_seeds_differ_and_are_stable() {
        let a: Vec<u64> = (0..5).map(|i| point_seed(1, i)).collect();
        let set: BTreeSet<u64> = a.iter().copied().collect();
        assert_eq!(set.len(), 5);
        assert_eq!(a, (0..5).map(|i| point_seed(1, i)).collect::<Vec<_>>());
        assert_ne!(point_seed(2, 0), point_seed(1, 0));
    }

    #[test]
    fn axis_must_name_a_numeric_field() {
        assert_eq!(axis_value("N_T", 3.0).unwrap(), Value::Integer(3));
        assert_eq!(axis_value("G1", 0.5).unwrap(), Value::Float(0.5));
        assert_eq!(axis_value("N_T", 2.5).unwrap_err().code(), "CONFIG_INVALID");
        assert_eq!(axis_value("colour", 1.0).unwrap_err().code(), "CONFIG_INVALID");
    }

    #[test]
    fn failed_point_is_recorded_and_sweep_continues() {
        let ov = Overrides {
            trajectories: Some(4),
            t_max: Some(3.0),
            ..Default::default()
        };
        let cfg = from_document(layered_document(None, Some("fig2a-dr5"), &ov).unwrap()).unwrap();
        // N = 1 puts the control left of the target
        let out = run_sweep(&cfg, Some("N"), Some(&[1.0, 7.0])).unwrap();
        assert_eq!(out.summary.points.len(), 2);
        assert_eq!(out.summary.points[0].status, "INVALID_SPEC");
        assert_eq!(out.summary.points[1].status, "ok");
        let table = String::from_utf8(out.artifacts.last().unwrap().bytes.clone()).unwrap();
        assert_eq!(table.lines().count(), 3);
    }

    #[test]
    fn fit_reads_sweep_tables() {
        let mut text = String::from("variant,value,status,I\n");
        for n in [10.0f64, 20.0, 30.0, 40.0] {
            text += &format!("a,{n},ok,{}\n", 0.5 * n.powi(2));
            text += &format!("b,{n},ok,{}\n", 2.0 * n.powi(3));
        }
        text += "b,50,NO_CROSSING,\n";
        let fits = fit_table(&text).unwrap();
        assert!((fits["a"].exponent - 2.0).abs() < 1e-12);
        assert!((fits["b"].exponent - 3.0).abs() < 1e-12);
        assert_eq!(fits["b"].points.len(), 4);
    }
}
