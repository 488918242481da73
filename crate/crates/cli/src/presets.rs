//! Named experiments.
//!
//! Every preset is a complete configuration document; expansion is a pure
//! function of the name.

use toml::Table;

use crate::error::CliError;

const COMMON: &str = r#"
[system]
J = 1.0
omega = 0.0
omega_T = 0.0
omega_C = 0.0
g = 0.1
kappa = 0.01

[integrator]
dt = 0.005
t_max = 30.0
scheme = "heun"
field_variance = 0.25

[run]
n_traj = 4000
master_seed = 1
sample_interval = 0.1
probe_times = [15.0, 20.0]
"#;

/// `(name, description, document)`; the document is layered over [`COMMON`].
const PRESETS: &[(&str, &str, &str)] = &[
    (
        "fig2a-dicke",
        "Dicke decay of 30 target atoms with the controls decoupled",
        r#"
[system]
G1 = 0.0
G2 = 0.0
n = 2
N = 7
N_T = 30
N_C = 10
[run]
outputs = ["inversion", "correlation", "chirality"]
"#,
    ),
    (
        "fig2a-dr4",
        "30 targets, 10 small controls at distance 4 (bound state present)",
        r#"
[system]
G1 = 0.0
G2 = 0.15
n = 2
N = 6
N_T = 30
N_C = 10
[run]
outputs = ["inversion", "correlation", "chirality", "control"]
"#,
    ),
    (
        "fig2a-dr5",
        "30 targets, 10 small controls at distance 5 (no bound state)",
        r#"
[system]
G1 = 0.0
G2 = 0.15
n = 2
N = 7
N_T = 30
N_C = 10
[run]
outputs = ["inversion", "correlation", "chirality", "control"]
"#,
    ),
    (
        "fig2b-sweep",
        "radiance strength versus N_T for the Dicke, distance-4 and distance-5 families",
        r#"
[system]
G1 = 0.0
G2 = 0.15
n = 2
N = 7
N_T = 30
N_C = 10
[integrator]
t_max = 50.0
[run]
outputs = ["inversion", "correlation"]
[sweep]
axis = "N_T"
values = [10, 15, 20, 25, 30, 35, 40, 45, 50]
[sweep.variants.dicke]
G2 = 0.0
[sweep.variants.dr4]
N = 6
[sweep.variants.dr5]
N = 7
"#,
    ),
    (
        "fig2cd-maps",
        "photon intensity maps for 30 targets with small controls at distance 4 and 5",
        r#"
[system]
G1 = 0.0
G2 = 0.15
n = 2
N = 7
N_T = 30
N_C = 10
[run]
outputs = ["inversion", "chirality", "intensity"]
[sweep]
[sweep.variants.dr4]
N = 6
[sweep.variants.dr5]
N = 7
"#,
    ),
    (
        "fig3ab-giant",
        "giant controls (Delta_L = 4, Delta_R = 5): inversion and scaling for three left-leg couplings",
        r#"
[system]
G2 = 0.15
n = 4
N = 9
N_T = 30
N_C = 10
[integrator]
t_max = 50.0
[run]
outputs = ["inversion", "correlation"]
[sweep]
axis = "N_T"
values = [10, 15, 20, 25, 30, 35, 40, 45, 50]
[sweep.variants.g1-0]
G1 = 0.0
[sweep.variants.g1-0p067]
G1 = 0.067
[sweep.variants.g1-0p15]
G1 = 0.15
"#,
    ),
    (
        "fig3c-chirality",
        "chirality at Jt = 15 for small and giant controls with matched target dynamics",
        r#"
[system]
G1 = 0.0
G2 = 0.1
n = 2
N = 7
N_T = 30
N_C = 10
[run]
outputs = ["inversion", "chirality"]
probe_times = [15.0]
[sweep]
[sweep.variants.small]
G1 = 0.0
G2 = 0.1
[sweep.variants.giant]
G1 = 0.067
G2 = 0.15
"#,
    ),
    (
        "fig3d-minimal",
        "one target and one control: G sin(Delta) and |eps_C| for small and giant controls",
        r#"
mode = "minimal"
[system]
G1 = 0.0
G2 = 0.1
n = 2
N = 7
N_T = 1
N_C = 1
[integrator]
dt = 0.01
[run]
probe_times = [15.0]
[sweep]
[sweep.variants.small]
G1 = 0.0
G2 = 0.1
[sweep.variants.giant]
G1 = 0.06
G2 = 0.15
"#,
    ),
    (
        "fig4-largeNT",
        "ratio to Dicke and pair correlation up to N_T = 200 with 10 small controls",
        r#"
[system]
G1 = 0.0
G2 = 0.15
n = 2
N = 7
N_T = 200
N_C = 10
[integrator]
t_max = 50.0
[run]
outputs = ["inversion", "correlation", "chirality"]
[sweep]
axis = "N_T"
values = [10, 20, 30, 50, 100, 150, 200]
[sweep.variants.dicke]
G2 = 0.0
[sweep.variants.dr4]
N = 6
[sweep.variants.dr5]
N = 7
"#,
    ),
    (
        "fig5-largeNC",
        "30 targets with a growing small control ensemble at distance 4 and 5",
        r#"
[system]
G1 = 0.0
G2 = 0.15
n = 2
N = 7
N_T = 30
N_C = 10
[run]
outputs = ["inversion", "correlation", "chirality", "control"]
probe_times = [15.0, 20.0]
[sweep]
axis = "N_C"
values = [1, 5, 10, 20, 40]
[sweep.variants.dr4]
N = 6
[sweep.variants.dr5]
N = 7
"#,
    ),
    (
        "sm-fig3-bic",
        "bound-state search and photon profile for small (phi_R = 2 pi) and giant (phi_L = phi_R = pi) controls",
        r#"
mode = "exact"
[system]
kappa = 0.0
G2 = 0.15
n = 2
N = 6
N_T = 1
N_C = 1
[integrator]
t_max = 100.0
[run]
outputs = ["inversion", "intensity"]
sample_interval = 0.5
[sweep]
[sweep.variants.small]
G1 = 0.0
n = 2
N = 6
[sweep.variants.giant]
G1 = 0.15
n = 2
N = 4
"#,
    ),
    (
        "sm-fig4-amplitudes",
        "amplitude and phase of target and control for small and giant controls (Delta_L = 2, Delta_R = 5)",
        r#"
mode = "minimal"
[system]
kappa = 0.0
G2 = 0.15
n = 2
N = 7
N_T = 1
N_C = 1
[integrator]
dt = 0.01
t_max = 100.0
[sweep]
[sweep.variants.small]
G1 = 0.0
[sweep.variants.giant]
G1 = 0.067
"#,
    ),
];

pub fn names() -> Vec<String> {
    PRESETS.iter().map(|p| p.0.to_string()).collect()
}

pub fn describe() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|p| (p.0, p.1)).collect()
}

/// Full configuration document of a preset.
pub fn preset(name: &str) -> Result<Table, CliError> {
    let Some(&(_, _, body)) = PRESETS.iter().find(|p| p.0 == name) else {
        return Err(CliError::UnknownPreset {
            name: name.to_string(),
            available: names(),
        });
    };
    let mut doc: Table = COMMON.parse().expect("common preset block parses");
    let top: Table = body.parse().expect("preset body parses");
    crate::config::merge(&mut doc, &top);
    Ok(doc)
}
