use std::path::Path;
use std::process::{Command, Output};

fn superrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superrad"))
        .args(args)
        .env_remove("SUPERRAD_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_DTWA: &str = r#"
mode = "dtwa"
[system]
J = 1.0
g = 0.1
kappa = 0.01
G1 = 0.0
G2 = 0.15
n = 1
N = 4
N_T = 3
N_C = 2
[integrator]
dt = 0.01
t_max = 4.0
[run]
n_traj = 80
master_seed = 5
sample_interval = 0.1
probe_times = [2.0]
outputs = ["inversion", "correlation", "chirality", "control", "intensity"]
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn presets_are_listed() {
    let out = superrad(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2a-dicke", "fig3c-chirality", "sm-fig3-bic"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn unknown_preset_lists_available() {
    let out = superrad(&["run", "--preset", "fig9-nope"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("UNKNOWN_PRESET"), "{err}");
    assert!(err.contains("fig2a-dicke"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL_DTWA.replace("kappa = 0.01", "kappa = 0.01\nkapa = 1.0"),
    );
    let out = superrad(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(!dir.path().join("o").join("summary.json").exists());
}

#[test]
fn dtwa_run_is_byte_identical_across_reruns_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_DTWA);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out_dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = superrad(&[
            "run",
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for file in [
        "inversion.csv",
        "correlation.csv",
        "chirality.csv",
        "control.csv",
        "intensity.csv",
        "summary.json",
    ] {
        let x = std::fs::read(a.join(file)).unwrap();
        let y = std::fs::read(b.join(file)).unwrap();
        assert!(!x.is_empty(), "{file} empty");
        assert!(x == y, "{file} differs between runs");
    }
    let inversion = std::fs::read_to_string(a.join("inversion.csv")).unwrap();
    assert!(!inversion.contains('\r'));
    let first = inversion.lines().nth(1).unwrap();
    // three fully excited targets at t = 0
    assert!(first.contains("1.5000000000000000e0"), "{first}");
    assert!(a.join("manifest.json").exists());
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_DTWA);
    let read = |seed: &str| {
        let out_dir = dir.path().join(seed);
        let out = superrad(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read(out_dir.join("inversion.csv")).unwrap()
    };
    assert_ne!(read("5"), read("6"));
}

#[test]
fn minimal_and_exact_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let minimal = SMALL_DTWA
        .replace("mode = \"dtwa\"", "mode = \"minimal\"")
        .replace("N_T = 3", "N_T = 1")
        .replace("N_C = 2", "N_C = 1");
    let cfg = write_config(dir.path(), &minimal);
    let out = superrad(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        dir.path().join("m").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("m/minimal.csv").exists());
    assert!(dir.path().join("m/spectrum.csv").exists());

    let exact = minimal
        .replace("mode = \"minimal\"", "mode = \"exact\"")
        .replace("kappa = 0.01", "kappa = 0.0");
    let cfg = write_config(dir.path(), &exact);
    let out = superrad(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        dir.path().join("e").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("e/summary.json")).unwrap()).unwrap();
    let norm = summary["scalars"]["norm_final"].as_f64().unwrap();
    assert!(norm <= 1.0 + 1e-9 && norm > 0.5, "{norm}");
    // distance 3 from the targets: no bound state
    assert_eq!(summary["scalars"]["bic_exists"].as_f64(), Some(0.0));
}

#[test]
fn sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_DTWA);
    let out_dir = dir.path().join("s");
    let out = superrad(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "N_T",
        "--values",
        "2,3,4",
        "--tmax",
        "3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = out_dir.join("sweep.csv");
    assert!(table.exists());
    assert!(out_dir.join("sweep_summary.json").exists());

    let header = std::fs::read_to_string(&table)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert!(header.starts_with("variant,value,seed,status"), "{header}");
    assert!(header.split(',').any(|c| c == "I"), "{header}");

    // nothing crosses zero within Jt = 3, so there is nothing to fit
    let out = superrad(&["fit", "--input", table.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("TOO_FEW_POINTS"), "{}", stderr(&out));
}

#[test]
fn fit_recovers_exact_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.csv");
    let mut text = String::from("N_T,I\n");
    for n in [10.0f64, 20.0, 30.0, 40.0] {
        text.push_str(&format!("{n},{}\n", 2.0 * n * n));
    }
    std::fs::write(&path, text).unwrap();
    let out = superrad(&["fit", "--input", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let fits: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = fits.to_string();
    assert!(
        text.contains("\"exponent\":2.0") || text.contains("\"exponent\":1.9999999999"),
        "{text}"
    );
}

#[test]
fn run_rejects_sweep_documents() {
    let out = superrad(&["run", "--preset", "fig2b-sweep", "--out-dir", "/nonexistent/never"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}
