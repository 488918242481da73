//! Experiment configuration: a TOML document layered over an optional preset.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use superrad_core::dtwa::IntegratorSettings;
use superrad_core::{validate_spec, SystemSpec};
use toml::{Table, Value};

use crate::error::CliError;
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Trajectory ensemble.
    #[default]
    Dtwa,
    /// One target and one control atom: closed form and delay equations.
    Minimal,
    /// Single-excitation propagation on the lattice plus dark-state search.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Inversion,
    Correlation,
    Chirality,
    Intensity,
    Control,
}

/// System parameters under their model names; the window defaults to one
/// that keeps boundary reflections away from the atoms until `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SystemSection {
    #[serde(default = "one")]
    pub J: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub omega_T: f64,
    #[serde(default)]
    pub omega_C: f64,
    #[serde(default)]
    pub kappa: f64,
    pub g: f64,
    #[serde(default)]
    pub G1: f64,
    #[serde(default)]
    pub G2: f64,
    pub n: i64,
    pub N: i64,
    pub N_T: usize,
    #[serde(default)]
    pub N_C: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<i64>,
}

fn one() -> f64 {
    1.0
}

impl SystemSection {
    pub fn to_spec(&self, t_max: f64) -> SystemSpec {
        let mut spec = SystemSpec {
            hopping: self.J,
            omega_res: self.omega,
            omega_ta: self.omega_T,
            omega_ca: self.omega_C,
            kappa: self.kappa,
            g_ta: self.g,
            g_ca_left: self.G1,
            g_ca_right: self.G2,
            ta_site: self.n,
            ca_site: self.N,
            n_ta: self.N_T,
            n_ca: self.N_C,
            m_min: 0,
            m_max: 0,
        };
        spec.set_default_window(t_max);
        if let Some(lo) = self.m_min {
            spec.m_min = lo;
        }
        if let Some(hi) = self.m_max {
            spec.m_max = hi;
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    /// Times at which scalar observables (chirality, inversion fraction) are
    /// reported in the summary.
    #[serde(default = "default_probe_times")]
    pub probe_times: Vec<f64>,
    /// Spacing of stored samples; overrides `integrator.sample_stride`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
}

fn default_n_traj() -> usize {
    4000
}

fn default_seed() -> u64 {
    1
}

fn default_outputs() -> Vec<Output> {
    vec![Output::Inversion, Output::Correlation, Output::Chirality]
}

fn default_probe_times() -> Vec<f64> {
    vec![15.0, 20.0]
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_traj: default_n_traj(),
            master_seed: default_seed(),
            outputs: default_outputs(),
            probe_times: default_probe_times(),
            sample_interval: None,
        }
    }
}

/// A family of runs: one per value of `axis` (or a single point without an
/// axis) for each named variant. Variants hold partial `[system]` overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub variants: BTreeMap<String, Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub mode: Mode,
    pub system: SystemSection,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

/// Recursively merges `top` into `base`; tables merge key by key, anything
/// else is replaced.
pub fn merge(base: &mut Table, top: &Table) {
    for (key, value) in top {
        match (base.get_mut(key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
}

fn section<'a>(doc: &'a mut Table, name: &str) -> &'a mut Table {
    let entry = doc
        .entry(name.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if !entry.is_table() {
        *entry = Value::Table(Table::new());
    }
    entry.as_table_mut().expect("just made a table")
}

impl Overrides {
    pub fn apply(&self, doc: &mut Table) {
        if let Some(n) = self.trajectories {
            section(doc, "run").insert("n_traj".into(), Value::Integer(n as i64));
        }
        if let Some(s) = self.seed {
            section(doc, "run").insert("master_seed".into(), Value::Integer(s as i64));
        }
        if let Some(dt) = self.dt {
            section(doc, "integrator").insert("dt".into(), Value::Float(dt));
        }
        if let Some(t) = self.t_max {
            section(doc, "integrator").insert("t_max".into(), Value::Float(t));
        }
    }
}

pub fn read_document(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text)
}

pub fn parse_document(text: &str) -> Result<Table, CliError> {
    text.parse::<Table>().map_err(|e| CliError::ConfigParse(e.to_string()))
}

/// Expands the preset named by `preset` (or by the document's own `preset`
/// key), layers the document and then the overrides on top.
pub fn layered_document(
    document: Option<Table>,
    preset: Option<&str>,
    overrides: &Overrides,
) -> Result<Table, CliError> {
    let document = document.unwrap_or_default();
    let name = match preset {
        Some(p) => Some(p.to_string()),
        None => match document.get("preset") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(CliError::ConfigParse("preset must be a string".into())),
            None => None,
        },
    };
    let mut doc = match &name {
        Some(n) => presets::preset(n)?,
        None => Table::new(),
    };
    merge(&mut doc, &document);
    if let Some(n) = name {
        doc.insert("preset".into(), Value::String(n));
    }
    overrides.apply(&mut doc);
    Ok(doc)
}

pub fn from_document(doc: Table) -> Result<ExperimentConfig, CliError> {
    let mut config: ExperimentConfig = Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::ConfigParse(e.to_string()))?;
    if let Some(interval) = config.run.sample_interval {
        let stride = (interval / config.integrator.dt).round();
        if !(stride >= 1.0) {
            return Err(CliError::ConfigInvalid(format!(
                "sample_interval {interval} is shorter than dt {}",
                config.integrator.dt
            )));
        }
        config.integrator.sample_stride = stride as usize;
    }
    Ok(config)
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, preset: Option<&str>, overrides: &Overrides) -> Result<Self, CliError> {
        let document = path.map(read_document).transpose()?;
        from_document(layered_document(document, preset, overrides)?)
    }

    /// The validated system of this configuration.
    pub fn spec(&self) -> Result<SystemSpec, CliError> {
        let t_max = self.integrator.t_max;
        Ok(validate_spec(self.system.to_spec(t_max), t_max)?)
    }

    pub fn wants(&self, output: Output) -> bool {
        self.run.outputs.contains(&output)
    }

    pub fn to_table(&self) -> Table {
        match Value::try_from(self) {
            Ok(Value::Table(t)) => t,
            _ => Table::new(),
        }
    }
}
