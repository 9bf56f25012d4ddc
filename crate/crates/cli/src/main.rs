use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use tethernav_cli::bench::{run_benchmark, write_artifact};
use tethernav_cli::output::{
    fmt_sig9, parse_trajectory_csv, render_run_meta_json, RunMeta,
};
use tethernav_cli::scenario::load_scenario;
use tethernav_cli::CliError;
use tethernav_core::executor::densify_path;
use tethernav_core::metrics::{cross_track_error, path_smoothness, IdealPath};

/// Benchmark harness for tether-space motion primitives.
#[derive(Debug, Parser)]
#[command(name = "tethernav", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (controller, interval, trial) cell of a scenario and write
    /// trajectory CSVs plus summary.csv / summary.json.
    Run {
        /// Scenario TOML file.
        config: PathBuf,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for trial execution (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the scenario's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute metrics for one trajectory file against a scenario's ideal
    /// path; prints JSON to stdout.
    Metrics {
        /// Trajectory CSV produced by `run`.
        trajectory: PathBuf,
        /// Scenario TOML file defining the ideal path.
        #[arg(long)]
        ideal: PathBuf,
    },
    /// Densify a scenario's corners and print the waypoint list as CSV.
    GenPath {
        /// Scenario TOML file.
        config: PathBuf,
        /// Waypoint spacing in meters (default: the scenario's first
        /// interval).
        #[arg(long)]
        interval: Option<f64>,
    },
}

/// Write to stdout, treating a closed pipe as a normal early exit rather
/// than an error; `gen-path ... | head` must not panic.
fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::io("writing to stdout", e)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return match emit(&e.to_string()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(_) => ExitCode::from(2),
            };
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            jobs,
            seed,
        } => cmd_run(&config, out_dir, jobs, seed),
        Command::Metrics { trajectory, ideal } => cmd_metrics(&trajectory, &ideal),
        Command::GenPath { config, interval } => cmd_gen_path(&config, interval),
    }
}

fn cmd_run(
    config: &std::path::Path,
    out_dir: Option<PathBuf>,
    jobs: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let mut scenario = load_scenario(config)?;
    if let Some(seed) = seed {
        scenario.base_seed = seed;
    }
    let out_dir = out_dir.unwrap_or_else(|| PathBuf::from("runs").join(&scenario.name));

    let artifact = run_benchmark(&scenario, jobs)?;
    write_artifact(&artifact, &out_dir)?;

    let meta = RunMeta {
        scenario: scenario.name.clone(),
        source: config.display().to_string(),
        out_dir: out_dir.display().to_string(),
        jobs: jobs.unwrap_or_else(num_cpus_guess),
        base_seed: scenario.base_seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        unix_time_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let meta_path = out_dir.join("run_meta.json");
    std::fs::write(&meta_path, render_run_meta_json(&meta))
        .map_err(|e| CliError::io(&format!("writing {}", meta_path.display()), e))?;

    emit(&format!(
        "wrote {} trajectory files, summary.csv, summary.json to {}\n",
        artifact.trajectories.len(),
        out_dir.display()
    ))
}

fn num_cpus_guess() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn cmd_metrics(trajectory: &std::path::Path, ideal: &std::path::Path) -> Result<(), CliError> {
    let scenario = load_scenario(ideal)?;
    let text = std::fs::read_to_string(trajectory)
        .map_err(|e| CliError::io(&format!("reading {}", trajectory.display()), e))?;
    let rows = parse_trajectory_csv(&text, &trajectory.display().to_string())?;
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{}: trajectory has no samples",
            trajectory.display()
        )));
    }

    let ideal_path = IdealPath::new(scenario.corners.clone())
        .map_err(|e| CliError::Config(format!("path.corners: {e}")))?;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for row in &rows {
        let d = cross_track_error(row.position, &ideal_path);
        sum += d;
        max = max.max(d);
    }
    let positions: Vec<_> = rows.iter().map(|r| r.position).collect();
    let smoothness = path_smoothness(&positions, scenario.smoothness_resample).ok();

    #[derive(serde::Serialize)]
    struct Report {
        trajectory: String,
        scenario: String,
        n_samples: usize,
        duration_s: f64,
        mean_cte_m: f64,
        max_cte_m: f64,
        smoothness_rad: Option<f64>,
    }
    let report = Report {
        trajectory: trajectory.display().to_string(),
        scenario: scenario.name,
        n_samples: rows.len(),
        duration_s: rows.last().unwrap().t,
        mean_cte_m: sum / rows.len() as f64,
        max_cte_m: max,
        smoothness_rad: smoothness,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    emit(&format!("{json}\n"))
}

fn cmd_gen_path(config: &std::path::Path, interval: Option<f64>) -> Result<(), CliError> {
    let scenario = load_scenario(config)?;
    let interval = match interval {
        Some(v) if v.is_finite() && v > 0.0 => v,
        Some(_) => return Err(CliError::Config("--interval must be positive".into())),
        None => scenario.intervals[0],
    };
    let dense = densify_path(&scenario.corners, interval)
        .map_err(|e| CliError::Config(format!("interval {interval} m: {e}")))?;
    let mut out = String::from("index,x,y,z\n");
    for (i, p) in dense.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i,
            fmt_sig9(p.x),
            fmt_sig9(p.y),
            fmt_sig9(p.z)
        ));
    }
    emit(&out)
}
