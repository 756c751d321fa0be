//! Command-line definitions and config resolution.
//!
//! Every command has a flag struct, where each field is optional, and a
//! resolved config with defaults. An optional JSON file supplies values
//! first. Flags given on the command line override it.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gsplit_core::solver::{RecordSchedule, VertexThreshold};
use gsplit_core::{AngleEvaluationPoint, Connectivity, GlmFamily, LossScale};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "gsplit", version, about = "Split linearized Bregman paths for structured sparse GLMs")]
pub struct Cli {
    /// JSON object of settings for the chosen command; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for concurrent jobs (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with its ground truth.
    GenData(GenDataArgs),
    /// Run one regularization path and write every recorded point.
    FitPath(FitPathArgs),
    /// Grid search over (nu, rho) with stratified K-fold cross-validation.
    CrossValidate(CrossValidateArgs),
    /// Angle profiles and path study on the small simulated GLM design.
    Consistency(ConsistencyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    /// 100 x 80 Gaussian design with 8 nonzero coefficients.
    Appendix,
    /// Voxel phantom with lesion blobs and injected bias voxels.
    Phantom,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: Option<DataKind>,
    /// Response family for the appendix design (linear or logistic).
    #[arg(long)]
    pub family: Option<GlmFamily>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Phantom grid size as nx,ny,nz.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub kind: DataKind,
    pub family: GlmFamily,
    /// Defaults to 7 for the appendix design and to the phantom's own seed.
    pub seed: Option<u64>,
    pub dims: Option<Vec<usize>>,
    pub n_samples: Option<usize>,
    pub noise_sd: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        GenDataConfig {
            kind: DataKind::Appendix,
            family: GlmFamily::Linear,
            seed: None,
            dims: None,
            n_samples: None,
            noise_sd: None,
            out: None,
        }
    }
}

/// Options shared by the path-fitting commands.
#[derive(Debug, Default, Args, Serialize)]
pub struct ModelArgs {
    /// Dataset CSV with header `y,x1,...,xp`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Voxel mask; without one, D is the identity.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Neighbourhood size: 6 or 26.
    #[arg(long)]
    pub connectivity: Option<u32>,
    #[arg(long)]
    pub family: Option<GlmFamily>,
    /// `sum` (unnormalized likelihood) or `mean`.
    #[arg(long)]
    pub loss_scale: Option<LossScale>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stop once t reaches this value (whichever of this and max-iters is first).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// `log:N`, `every:N` or `knots`.
    #[arg(long)]
    pub record: Option<String>,
    #[arg(long)]
    pub fit_intercept: Option<bool>,
    /// `nonnegative` or `signed`.
    #[arg(long)]
    pub vertex_threshold: Option<VertexThreshold>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct FitPathArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Explicit step size; checked against the curvature bound.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitPathConfig {
    pub data: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub connectivity: u32,
    pub family: GlmFamily,
    pub loss_scale: LossScale,
    pub kappa: f64,
    pub max_iters: usize,
    pub t_max: Option<f64>,
    pub record: String,
    pub fit_intercept: bool,
    pub vertex_threshold: VertexThreshold,
    pub out: Option<PathBuf>,
    pub nu: f64,
    pub rho: f64,
    pub alpha: Option<f64>,
}

impl Default for FitPathConfig {
    fn default() -> Self {
        FitPathConfig {
            data: None,
            mask: None,
            connectivity: 26,
            family: GlmFamily::Logistic,
            loss_scale: LossScale::Sum,
            kappa: 10.0,
            max_iters: 2000,
            t_max: None,
            record: "log:200".into(),
            fit_intercept: true,
            vertex_threshold: VertexThreshold::NonNegative,
            out: None,
            nu: 0.2,
            rho: 1.0,
            alpha: None,
        }
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct CrossValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub nu_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rho_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1-based indices of known bias voxels, for recall reporting.
    #[arg(long)]
    pub bias_truth: Option<PathBuf>,
    /// Candidates kept per fold by the procedural-bias scan.
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossValidateConfig {
    pub data: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub connectivity: u32,
    pub family: GlmFamily,
    pub loss_scale: LossScale,
    pub kappa: f64,
    pub max_iters: usize,
    pub t_max: Option<f64>,
    pub record: String,
    pub fit_intercept: bool,
    pub vertex_threshold: VertexThreshold,
    pub out: Option<PathBuf>,
    pub nu_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub bias_truth: Option<PathBuf>,
    /// Defaults to the number of known bias voxels, else 150.
    pub top_k: Option<usize>,
}

impl Default for CrossValidateConfig {
    fn default() -> Self {
        let fit = FitPathConfig::default();
        CrossValidateConfig {
            data: None,
            mask: None,
            connectivity: fit.connectivity,
            family: fit.family,
            loss_scale: fit.loss_scale,
            kappa: fit.kappa,
            max_iters: fit.max_iters,
            t_max: None,
            record: fit.record,
            fit_intercept: true,
            vertex_threshold: VertexThreshold::NonNegative,
            out: None,
            nu_grid: vec![0.2],
            rho_grid: (1..=10).map(f64::from).collect(),
            folds: 10,
            seed: 0,
            bias_truth: None,
            top_k: None,
        }
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub nu_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub angle_families: Option<Vec<GlmFamily>>,
    #[arg(long)]
    pub angle_scale: Option<LossScale>,
    /// Where logistic weights are evaluated: `zero` or `truth`.
    #[arg(long)]
    pub angle_point: Option<AngleEvaluationPoint>,
    #[arg(long, value_delimiter = ',')]
    pub path_families: Option<Vec<GlmFamily>>,
    #[arg(long)]
    pub path_scale: Option<LossScale>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// `log:N`, `every:N` or `knots`.
    #[arg(long)]
    pub record: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub trials: usize,
    pub nu_grid: Vec<f64>,
    pub seed: u64,
    pub angle_families: Vec<GlmFamily>,
    pub angle_scale: LossScale,
    pub angle_point: AngleEvaluationPoint,
    pub path_families: Vec<GlmFamily>,
    pub path_scale: LossScale,
    pub kappa: f64,
    pub max_iters: usize,
    pub record: String,
    pub out: Option<PathBuf>,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        let sim = gsplit_core::SimulationConfig::default();
        ConsistencyConfig {
            trials: sim.trials,
            nu_grid: sim.nu_grid,
            seed: sim.seed,
            angle_families: sim.angle_families,
            angle_scale: sim.angle_scale,
            angle_point: sim.angle_point,
            path_families: sim.path_families,
            path_scale: sim.path_scale,
            kappa: sim.kappa,
            max_iters: sim.max_iters,
            record: format_record(sim.record),
            out: None,
        }
    }
}

impl ConsistencyConfig {
    pub fn simulation(&self) -> Result<gsplit_core::SimulationConfig> {
        let sim = gsplit_core::SimulationConfig {
            trials: self.trials,
            nu_grid: self.nu_grid.clone(),
            seed: self.seed,
            angle_families: self.angle_families.clone(),
            angle_scale: self.angle_scale,
            angle_point: self.angle_point,
            path_families: self.path_families.clone(),
            path_scale: self.path_scale,
            kappa: self.kappa,
            max_iters: self.max_iters,
            record: parse_record(&self.record)?,
        };
        sim.validate()?;
        Ok(sim)
    }
}

/// Parses `log:N`, `every:N` or `knots`.
pub fn parse_record(text: &str) -> Result<RecordSchedule> {
    let bad = || CliError::config(format!("record must be log:N, every:N or knots, got {text:?}"));
    if text == "knots" {
        return Ok(RecordSchedule::SupportChanges);
    }
    let (kind, count) = text.split_once(':').ok_or_else(bad)?;
    let n: usize = count.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    match kind {
        "log" => Ok(RecordSchedule::LogSpaced(n)),
        "every" => Ok(RecordSchedule::Every(n)),
        _ => Err(bad()),
    }
}

pub fn format_record(schedule: RecordSchedule) -> String {
    match schedule {
        RecordSchedule::LogSpaced(n) => format!("log:{n}"),
        RecordSchedule::Every(n) => format!("every:{n}"),
        RecordSchedule::SupportChanges => "knots".into(),
    }
}

pub fn connectivity(count: u32) -> Result<Connectivity> {
    Connectivity::from_count(count).map_err(|e| CliError::config(e.to_string()))
}

pub fn require_out(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref().ok_or_else(|| CliError::config("an output directory is required (--out)"))
}

/// Layers the flags in `flags` over the JSON object in `file` and fills the
/// rest from `T::default()`.
pub fn resolve<T: DeserializeOwned>(file: Option<&Path>, flags: &impl Serialize) -> Result<T> {
    let mut merged = match file {
        None => serde_json::Map::new(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(CliError::config(format!("{}: expected a JSON object", path.display()))),
                Err(e) => return Err(CliError::config(format!("{}: {e}", path.display()))),
            }
        }
    };
    let flags = serde_json::to_value(flags).map_err(|e| CliError::config(e.to_string()))?;
    if let Value::Object(map) = flags {
        merged.extend(map.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::config(e.to_string()))
}
