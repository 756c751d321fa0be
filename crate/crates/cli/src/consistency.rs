//! `consistency`: angle profiles and the path study on the small GLM design.

use std::path::PathBuf;

use gsplit_core::consistency_lab::{self, NuSummary};
use gsplit_core::io::format_f64;
use gsplit_core::GlmFamily;
use serde::{Deserialize, Serialize};

use crate::config::{require_out, ConsistencyConfig};
use crate::error::Result;
use crate::run_dir::{csv_text, RunDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSummary {
    pub family: GlmFamily,
    pub nu_grid: Vec<f64>,
    /// Degrees.
    pub theta_mean: Vec<f64>,
    pub theta_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub family: GlmFamily,
    pub trials: usize,
    pub per_nu: Vec<NuSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    pub angles: Vec<AngleSummary>,
    pub paths: Vec<PathSummary>,
}

/// Writes `angles.csv`, `angles_per_trial.csv`, `table.csv`, `trials.csv`,
/// `summary.json` and `config.json`. Returns the manifest path.
pub fn run(config: &ConsistencyConfig) -> Result<PathBuf> {
    let sim = config.simulation()?;
    let mut dir = RunDir::create(require_out(&config.out)?)?;
    let output = consistency_lab::run_appendix_simulation(&sim)?;
    let seeds = sim.seeds();

    let mut angle_rows = Vec::new();
    let mut angle_trial_rows = Vec::new();
    for a in &output.angles {
        for (j, &nu) in a.nu_grid.iter().enumerate() {
            angle_rows.push(vec![a.family.to_string(), format_f64(nu), format_f64(a.theta_mean[j]), format_f64(a.theta_std[j])]);
        }
        for (trial, thetas) in a.per_trial.iter().enumerate() {
            for (j, &theta) in thetas.iter().enumerate() {
                angle_trial_rows.push(vec![
                    a.family.to_string(),
                    (trial + 1).to_string(),
                    seeds[trial].to_string(),
                    format_f64(a.nu_grid[j]),
                    format_f64(theta),
                ]);
            }
        }
    }
    dir.write_text("angles.csv", &csv_text(&["family", "nu", "theta_mean", "theta_std"], angle_rows))?;
    dir.write_text(
        "angles_per_trial.csv",
        &csv_text(&["family", "trial", "seed", "nu", "theta"], angle_trial_rows),
    )?;

    let mut table_rows = Vec::new();
    let mut trial_rows = Vec::new();
    for path in &output.paths {
        for s in &path.per_nu {
            let e = &s.errors_mean;
            table_rows.push(vec![
                path.family.to_string(),
                format_f64(s.nu),
                format_f64(s.auc_mean),
                format_f64(s.auc_std),
                format_f64(e.les_coef),
                format_f64(e.pre_coef),
                format_f64(e.les_fit),
                format_f64(e.pre_fit),
                format_f64(s.support_size_mean),
            ]);
        }
        for (trial, outcomes) in path.per_trial.iter().enumerate() {
            for (j, o) in outcomes.iter().enumerate() {
                trial_rows.push(vec![
                    path.family.to_string(),
                    (trial + 1).to_string(),
                    path.seeds[trial].to_string(),
                    format_f64(sim.nu_grid[j]),
                    format_f64(o.auc),
                    format_f64(o.errors.les_coef),
                    format_f64(o.errors.pre_coef),
                    format_f64(o.errors.les_fit),
                    format_f64(o.errors.pre_fit),
                    o.support_size.to_string(),
                    format_f64(o.best_t),
                ]);
            }
        }
    }
    let error_columns = ["les_coef", "pre_coef", "les_fit", "pre_fit"];
    let mut header = vec!["family", "nu", "auc_mean", "auc_std"];
    header.extend(error_columns);
    header.push("support_size_mean");
    dir.write_text("table.csv", &csv_text(&header, table_rows))?;
    let mut header = vec!["family", "trial", "seed", "nu", "auc"];
    header.extend(error_columns);
    header.extend(["support_size", "best_t"]);
    dir.write_text("trials.csv", &csv_text(&header, trial_rows))?;

    let summary = ConsistencySummary {
        angles: output
            .angles
            .iter()
            .map(|a| AngleSummary {
                family: a.family,
                nu_grid: a.nu_grid.clone(),
                theta_mean: a.theta_mean.clone(),
                theta_std: a.theta_std.clone(),
            })
            .collect(),
        paths: output
            .paths
            .iter()
            .map(|p| PathSummary {
                family: p.family,
                trials: p.trials,
                per_nu: p.per_nu.clone(),
            })
            .collect(),
    };
    dir.write_json("summary.json", &summary)?;
    dir.write_json("config.json", config)?;
    dir.finish()
}
