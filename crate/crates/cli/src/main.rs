use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;
use superrad_cli::config::{ExperimentConfig, Overrides};
use superrad_cli::output::{commit, json_artifact, Artifact};
use superrad_cli::{presets, run_experiment, run_sweep, sweep, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "superrad",
    version,
    about = "Superradiance of target atoms steered by control atoms in a coupled-resonator waveguide"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Number of trajectories per run.
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SUPERRAD_THREADS")]
    threads: Option<usize>,
    /// Output directory (default: out/<preset or run>).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Integration step in units of 1/J.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Final time in units of 1/J.
    #[arg(long, global = true)]
    tmax: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Run a family of experiments over one parameter and its variants.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// System parameter to vary, e.g. N_T or G1.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values of the axis.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Fit I = c N^alpha to a sweep table.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn default_dir(config: &ExperimentConfig) -> PathBuf {
    Path::new("out").join(config.preset.as_deref().unwrap_or("run"))
}

fn manifest(
    command: &str,
    config: &ExperimentConfig,
    threads: usize,
    started: f64,
    wall: f64,
    files: &[Artifact],
) -> Result<Artifact, CliError> {
    let config_json = serde_json::to_value(config.to_table()).map_err(CliError::from)?;
    json_artifact(
        "manifest.json",
        &json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "preset": config.preset,
            "master_seed": config.run.master_seed,
            "n_traj": config.run.n_traj,
            "threads": threads,
            "started_unix_s": started,
            "wall_time_s": wall,
            "files": files.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
            "config": config_json,
        }),
    )
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        trajectories: cli.trajectories,
        seed: cli.seed,
        dt: cli.dt,
        t_max: cli.tmax,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let threads = pool.current_num_threads();
    let started = unix_now();
    let clock = Instant::now();

    match cli.command {
        Command::Presets => {
            for (name, description) in presets::describe() {
                println!("{name:<20} {description}");
            }
            Ok(())
        }
        Command::Run { config, preset } => {
            let cfg = ExperimentConfig::load(config.as_deref(), preset.as_deref(), &overrides)?;
            if cfg
                .sweep
                .as_ref()
                .is_some_and(|s| s.axis.is_some() || !s.variants.is_empty())
            {
                return Err(CliError::ConfigInvalid(
                    "this configuration describes a sweep; use the sweep subcommand".into(),
                ));
            }
            let out = pool.install(|| run_experiment(&cfg))?;
            let mut files = out.artifacts;
            files.push(json_artifact("summary.json", &out.summary)?);
            files.push(manifest(
                "run",
                &cfg,
                threads,
                started,
                clock.elapsed().as_secs_f64(),
                &files,
            )?);
            let dir = cli.out_dir.unwrap_or_else(|| default_dir(&cfg));
            commit(&dir, &files)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
            eprintln!("wrote {} files to {}", files.len(), dir.display());
            Ok(())
        }
        Command::Sweep {
            config,
            preset,
            axis,
            values,
        } => {
            let cfg = ExperimentConfig::load(config.as_deref(), preset.as_deref(), &overrides)?;
            let out = pool.install(|| run_sweep(&cfg, axis.as_deref(), values.as_deref()))?;
            let mut files = out.artifacts;
            files.push(json_artifact("sweep_summary.json", &out.summary)?);
            files.push(manifest(
                "sweep",
                &cfg,
                threads,
                started,
                clock.elapsed().as_secs_f64(),
                &files,
            )?);
            let dir = cli.out_dir.unwrap_or_else(|| default_dir(&cfg));
            commit(&dir, &files)?;
            for p in &out.summary.points {
                let value = p.value.map_or_else(|| "-".to_string(), |v| v.to_string());
                eprintln!("{:<12} {:>8} {}", p.variant, value, p.status);
            }
            println!("{}", serde_json::to_string_pretty(&out.summary.analysis)?);
            eprintln!("wrote {} files to {}", files.len(), dir.display());
            Ok(())
        }
        Command::Fit { input } => {
            let text =
                std::fs::read_to_string(&input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            let fits = sweep::fit_table(&text)?;
            let dir = cli
                .out_dir
                .unwrap_or_else(|| input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
            commit(&dir, &[json_artifact("fit.json", &fits)?])?;
            println!("{}", serde_json::to_string_pretty(&fits)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
