//! On-disk artifact formats.
//!
//! Data files must be byte-identical across runs of the same scenario, so
//! everything time- or host-dependent is quarantined in `run_meta.json` and
//! every float in a data file goes through one formatter, [`fmt_sig9`].

use serde::Serialize;

use tethernav_core::executor::TrajectorySample;
use tethernav_core::geometry::CartesianPoint;

use crate::CliError;

/// Column order is part of the format; do not reorder.
pub const TRAJECTORY_HEADER: &str = "t,L_true,theta_true,phi_true,x_true,y_true,z_true,L_sensed,theta_sensed,phi_sensed,Ldot_cmd,thetadot_cmd,phidot_cmd,active_waypoint,mode";

pub const SUMMARY_HEADER: &str = "scenario,controller,interval_m,trials,mean_cte_m,std_cte_m,max_cte_m,mean_smoothness_rad,std_smoothness_rad,completed,timeout,singularity_abort";

/// Nine significant digits, scientific notation. The formatter is the
/// contract: a value parsed back from its output re-formats to the same
/// bytes, which is what lets metrics be recomputed from emitted files
/// without drift.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// The f64 a reader of our files will actually see.
pub fn round_sig9(x: f64) -> f64 {
    fmt_sig9(x).parse().expect("sig9 output always re-parses")
}

fn fmt_opt_sig9(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_sig9(v),
        None => "NaN".to_string(),
    }
}

/// Render one episode as CSV.
pub fn render_trajectory_csv(samples: &[TrajectorySample<f64>]) -> String {
    let mut out = String::with_capacity(64 + samples.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in samples {
        let cmd = s.command.to_array();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig9(s.t),
            fmt_sig9(s.true_state.length),
            fmt_sig9(s.true_state.elevation),
            fmt_sig9(s.true_state.azimuth),
            fmt_sig9(s.true_position.x),
            fmt_sig9(s.true_position.y),
            fmt_sig9(s.true_position.z),
            fmt_sig9(s.sensed_state.length),
            fmt_sig9(s.sensed_state.elevation),
            fmt_sig9(s.sensed_state.azimuth),
            fmt_sig9(cmd[0]),
            fmt_sig9(cmd[1]),
            fmt_sig9(cmd[2]),
            s.active_waypoint,
            s.mode.as_str(),
        ));
    }
    out
}

/// A row read back from a trajectory file: time and true position, which is
/// all the metrics need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub position: CartesianPoint<f64>,
}

/// Parse a trajectory CSV produced by [`render_trajectory_csv`]. The header
/// must match exactly; anything else is treated as a foreign file.
pub fn parse_trajectory_csv(text: &str, origin: &str) -> Result<Vec<TrajectoryRow>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        _ => {
            return Err(CliError::Config(format!(
                "{origin}: not a trajectory file (header mismatch)"
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(CliError::Config(format!(
                "{origin}: line {}: expected 15 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let num = |idx: usize| -> Result<f64, CliError> {
            fields[idx].parse().map_err(|_| {
                CliError::Config(format!("{origin}: line {}: bad number {:?}", i + 2, fields[idx]))
            })
        };
        rows.push(TrajectoryRow {
            t: num(0)?,
            position: CartesianPoint::new(num(4)?, num(5)?, num(6)?),
        });
    }
    Ok(rows)
}

/// One executed trial, as recorded in the summary JSON.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub outcome: String,
    pub mean_cte_m: f64,
    pub max_cte_m: f64,
    pub smoothness_rad: Option<f64>,
    pub duration_s: f64,
    pub n_samples: usize,
    pub trajectory_file: String,
}

/// Aggregate over the trials of one (controller, interval) cell.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionSummary {
    pub controller: String,
    pub interval_m: f64,
    pub trials: usize,
    pub mean_cte_m: f64,
    pub std_cte_m: f64,
    pub max_cte_m: f64,
    /// Means over the trials that produced a smoothness value; absent when
    /// none did (written as NaN in the CSV, null in the JSON).
    pub mean_smoothness_rad: Option<f64>,
    pub std_smoothness_rad: Option<f64>,
    pub completed: usize,
    pub timeout: usize,
    pub singularity_abort: usize,
    pub trial_records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub trials_per_condition: usize,
    pub base_seed: u64,
    pub conditions: Vec<ConditionSummary>,
}

pub fn render_summary_csv(summary: &ScenarioSummary) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for c in &summary.conditions {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            summary.scenario,
            c.controller,
            c.interval_m,
            c.trials,
            fmt_sig9(c.mean_cte_m),
            fmt_sig9(c.std_cte_m),
            fmt_sig9(c.max_cte_m),
            fmt_opt_sig9(c.mean_smoothness_rad),
            fmt_opt_sig9(c.std_smoothness_rad),
            c.completed,
            c.timeout,
            c.singularity_abort,
        ));
    }
    out
}

pub fn render_summary_json(summary: &ScenarioSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

/// Everything host- or time-dependent about a run lives here, never in the
/// data files.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub scenario: String,
    pub source: String,
    pub out_dir: String,
    pub jobs: usize,
    pub base_seed: u64,
    pub tool_version: String,
    pub unix_time_s: u64,
}

pub fn render_run_meta_json(meta: &RunMeta) -> String {
    let mut s = serde_json::to_string_pretty(meta).expect("meta serializes");
    s.push('\n');
    s
}
