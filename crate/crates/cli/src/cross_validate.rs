//! `cross-validate`: grid search over `(nu, rho)` with stratified folds.
//!
//! All folds of a cell share the step size computed on the full data, so
//! their paths are recorded at the same iterations and the same `t`. The
//! per-cell stopping time is the recorded point with the highest mean
//! validation accuracy over folds (ties go to the earliest point).

use std::collections::BTreeSet;
use std::path::PathBuf;

use gsplit_core::io::{self as core_io, format_f64};
use gsplit_core::solver::{self, RecordSchedule, StepSize};
use gsplit_core::{metrics, sparsity_ops, Dataset, DifferenceOperator, GlmFamily, GlmModel, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_record, require_out, CrossValidateConfig};
use crate::error::{CliError, Result};
use crate::folds;
use crate::problem::Problem;
use crate::run_dir::{csv_text, write_file, RunDir};

pub const SUMMARY_JSON: &str = "summary.json";
const DEFAULT_TOP_K: usize = 150;

/// One recorded point of one fold, reduced to what the report needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPoint {
    pub k: usize,
    pub t: f64,
    pub correct_pre: usize,
    pub correct_les: usize,
    /// Nonzero entries of `beta_les`, 0-based.
    pub les_support: Vec<usize>,
    /// Procedural-bias candidates, 0-based.
    pub bias: Vec<usize>,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldTrace {
    pub n_train: usize,
    pub n_val: usize,
    pub points: Vec<FoldPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub nu: f64,
    pub rho: f64,
    pub alpha: f64,
    pub best_k_pre: usize,
    pub best_t_pre: f64,
    pub mean_accuracy_pre: f64,
    pub pooled_accuracy_pre: f64,
    pub best_k_les: usize,
    pub best_t_les: f64,
    pub mean_accuracy_les: f64,
    pub pooled_accuracy_les: f64,
    /// Over the `beta_les` supports of all folds at `best_k_les`.
    pub mdc: f64,
    pub support_size_mean: f64,
    /// 1-based voxels flagged as procedural bias in every fold at `best_k_pre`.
    pub bias_common: Vec<usize>,
    /// Mean fraction of the known bias voxels flagged per fold.
    pub bias_recall_mean: Option<f64>,
    /// Mean `||beta_pre - beta_les|| / ||beta_pre||` at the last point.
    pub final_relative_gap_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub nu: f64,
    pub rho: f64,
    /// 1-based.
    pub fold: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub accuracy_pre: f64,
    pub accuracy_les: f64,
    /// 1-based `beta_les` support at the cell's `best_k_les`.
    pub les_support: Vec<usize>,
    /// 1-based bias candidates at the cell's `best_k_pre`.
    pub bias: Vec<usize>,
    pub bias_recall: Option<f64>,
    pub final_relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub top_k: usize,
    /// Index into `cells` of the highest `mean_accuracy_pre`, first on ties.
    pub best_cell: usize,
    pub cells: Vec<CellReport>,
    pub fold_reports: Vec<FoldReport>,
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

fn count_correct(data: &Dataset, beta0: f64, beta: &nalgebra::DVector<f64>) -> gsplit_core::Result<usize> {
    let acc = metrics::accuracy(&data.predictor(beta0, beta)?, &data.y)?;
    Ok((acc * data.n() as f64).round() as usize)
}

/// Fits one training split and scores every recorded point on the
/// validation split.
pub fn run_fold(
    train: &Dataset,
    val: &Dataset,
    model: GlmModel,
    op: &DifferenceOperator,
    config: &SolverConfig,
    top_k: usize,
) -> Result<FoldTrace> {
    let mut points = Vec::new();
    solver::run_path_with(train, model, op, config, |point| {
        points.push(FoldPoint {
            k: point.k,
            t: point.t,
            correct_pre: count_correct(val, point.beta0, &point.beta_pre)?,
            correct_les: count_correct(val, point.beta0, &point.beta_les)?,
            les_support: (0..point.beta_les.len()).filter(|&i| point.beta_les[i] != 0.0).collect(),
            bias: sparsity_ops::identify_procedural_bias(&point.beta_pre, &point.beta_les, top_k)?,
            relative_gap: point.relative_gap(),
        });
        Ok(())
    })?;
    Ok(FoldTrace {
        n_train: train.n(),
        n_val: val.n(),
        points,
    })
}

/// Reduces the traces of one cell. `traces` must share their recorded
/// iterations.
pub fn reduce_cell(
    nu: f64,
    rho: f64,
    alpha: f64,
    traces: &[FoldTrace],
    bias_truth: Option<&[usize]>,
) -> Result<(CellReport, Vec<FoldReport>)> {
    let first = traces.first().ok_or_else(|| CliError::config("a cell needs at least one fold"))?;
    if traces.iter().any(|t| t.points.len() != first.points.len()
        || t.points.iter().zip(&first.points).any(|(a, b)| a.k != b.k))
    {
        return Err(CliError::config("folds of a cell were recorded at different iterations"));
    }
    let n_total: usize = traces.iter().map(|t| t.n_val).sum();
    let n_points = first.points.len();
    let mean_acc = |pick: fn(&FoldPoint) -> usize| -> Vec<f64> {
        (0..n_points)
            .map(|j| traces.iter().map(|t| pick(&t.points[j]) as f64 / t.n_val as f64).sum::<f64>() / traces.len() as f64)
            .collect()
    };
    let pooled = |pick: fn(&FoldPoint) -> usize, j: usize| -> f64 {
        traces.iter().map(|t| pick(&t.points[j])).sum::<usize>() as f64 / n_total as f64
    };
    let curve_pre = mean_acc(|p| p.correct_pre);
    let curve_les = mean_acc(|p| p.correct_les);
    let best_pre = solver::first_argmax(&curve_pre).expect("paths record at least one point");
    let best_les = solver::first_argmax(&curve_les).expect("paths record at least one point");

    let les_supports: Vec<&[usize]> = traces.iter().map(|t| t.points[best_les].les_support.as_slice()).collect();
    let mdc = if traces.len() >= 2 { metrics::mdc(&les_supports)? } else { 0.0 };
    let recall = |bias: &[usize]| {
        bias_truth.filter(|t| !t.is_empty()).map(|truth| {
            bias.iter().filter(|b| truth.contains(b)).count() as f64 / truth.len() as f64
        })
    };
    let mut common: BTreeSet<usize> = traces[0].points[best_pre].bias.iter().copied().collect();
    for t in &traces[1..] {
        let here: BTreeSet<usize> = t.points[best_pre].bias.iter().copied().collect();
        common = common.intersection(&here).copied().collect();
    }
    let recalls: Vec<f64> = traces.iter().filter_map(|t| recall(&t.points[best_pre].bias)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let final_gaps: Vec<f64> = traces.iter().map(|t| t.points[n_points - 1].relative_gap).collect();

    let cell = CellReport {
        nu,
        rho,
        alpha,
        best_k_pre: first.points[best_pre].k,
        best_t_pre: first.points[best_pre].t,
        mean_accuracy_pre: curve_pre[best_pre],
        pooled_accuracy_pre: pooled(|p| p.correct_pre, best_pre),
        best_k_les: first.points[best_les].k,
        best_t_les: first.points[best_les].t,
        mean_accuracy_les: curve_les[best_les],
        pooled_accuracy_les: pooled(|p| p.correct_les, best_les),
        mdc,
        support_size_mean: mean(&les_supports.iter().map(|s| s.len() as f64).collect::<Vec<_>>()),
        bias_common: one_based(&common.into_iter().collect::<Vec<_>>()),
        bias_recall_mean: (!recalls.is_empty()).then(|| mean(&recalls)),
        final_relative_gap_mean: mean(&final_gaps),
    };
    let folds = traces
        .iter()
        .enumerate()
        .map(|(f, t)| FoldReport {
            nu,
            rho,
            fold: f + 1,
            n_train: t.n_train,
            n_val: t.n_val,
            accuracy_pre: t.points[best_pre].correct_pre as f64 / t.n_val as f64,
            accuracy_les: t.points[best_les].correct_les as f64 / t.n_val as f64,
            les_support: one_based(&t.points[best_les].les_support),
            bias: one_based(&t.points[best_pre].bias),
            bias_recall: recall(&t.points[best_pre].bias),
            final_relative_gap: t.points[n_points - 1].relative_gap,
        })
        .collect();
    Ok((cell, folds))
}

impl CrossValidateConfig {
    fn solver(&self, nu: f64) -> Result<SolverConfig> {
        let record = parse_record(&self.record)?;
        if record == RecordSchedule::SupportChanges {
            return Err(CliError::config("cross-validation needs a fixed record schedule (log:N or every:N)"));
        }
        let config = SolverConfig {
            nu,
            kappa: self.kappa,
            max_iters: self.max_iters,
            t_max: self.t_max,
            record,
            fit_intercept: self.fit_intercept,
            vertex_threshold: self.vertex_threshold,
            ..SolverConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    fn validate_grid(&self) -> Result<()> {
        if self.family != GlmFamily::Logistic {
            return Err(CliError::config("cross-validation scores classification accuracy; use the logistic family"));
        }
        if self.nu_grid.is_empty() || self.rho_grid.is_empty() {
            return Err(CliError::config("nu and rho grids must be nonempty"));
        }
        if self.folds < 2 {
            return Err(CliError::config(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }
}

fn trace_csv(trace: &FoldTrace) -> String {
    csv_text(
        &["k", "t", "accuracy_pre", "accuracy_les", "les_nonzero", "relative_gap"],
        trace.points.iter().map(|p| {
            vec![
                p.k.to_string(),
                format_f64(p.t),
                format_f64(p.correct_pre as f64 / trace.n_val as f64),
                format_f64(p.correct_les as f64 / trace.n_val as f64),
                p.les_support.len().to_string(),
                format_f64(p.relative_gap),
            ]
        }),
    )
}

fn join_indices(indices: &[usize]) -> String {
    indices.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(String::new, format_f64)
}

fn write_tables(dir: &mut RunDir, report: &CvReport, curves: &[(f64, f64, Vec<FoldTrace>)]) -> Result<()> {
    let cells = csv_text(
        &[
            "nu", "rho", "alpha", "best_k_pre", "best_t_pre", "mean_accuracy_pre", "pooled_accuracy_pre",
            "best_k_les", "best_t_les", "mean_accuracy_les", "pooled_accuracy_les", "mdc", "support_size_mean",
            "bias_common", "bias_recall_mean", "final_relative_gap_mean",
        ],
        report.cells.iter().map(|c| {
            vec![
                format_f64(c.nu),
                format_f64(c.rho),
                format_f64(c.alpha),
                c.best_k_pre.to_string(),
                format_f64(c.best_t_pre),
                format_f64(c.mean_accuracy_pre),
                format_f64(c.pooled_accuracy_pre),
                c.best_k_les.to_string(),
                format_f64(c.best_t_les),
                format_f64(c.mean_accuracy_les),
                format_f64(c.pooled_accuracy_les),
                format_f64(c.mdc),
                format_f64(c.support_size_mean),
                join_indices(&c.bias_common),
                optional(c.bias_recall_mean),
                format_f64(c.final_relative_gap_mean),
            ]
        }),
    );
    dir.write_text("cv_cells.csv", &cells)?;
    let folds = csv_text(
        &[
            "nu", "rho", "fold", "n_train", "n_val", "accuracy_pre", "accuracy_les", "les_support_size",
            "les_support", "bias", "bias_recall", "final_relative_gap",
        ],
        report.fold_reports.iter().map(|f| {
            vec![
                format_f64(f.nu),
                format_f64(f.rho),
                f.fold.to_string(),
                f.n_train.to_string(),
                f.n_val.to_string(),
                format_f64(f.accuracy_pre),
                format_f64(f.accuracy_les),
                f.les_support.len().to_string(),
                join_indices(&f.les_support),
                join_indices(&f.bias),
                optional(f.bias_recall),
                format_f64(f.final_relative_gap),
            ]
        }),
    );
    dir.write_text("cv_folds.csv", &folds)?;
    let mut rows = Vec::new();
    for (nu, rho, traces) in curves {
        for j in 0..traces[0].points.len() {
            let k = traces.len() as f64;
            let mean = |f: &dyn Fn(&FoldTrace) -> f64| traces.iter().map(f).sum::<f64>() / k;
            rows.push(vec![
                format_f64(*nu),
                format_f64(*rho),
                traces[0].points[j].k.to_string(),
                format_f64(traces[0].points[j].t),
                format_f64(mean(&|t| t.points[j].correct_pre as f64 / t.n_val as f64)),
                format_f64(mean(&|t| t.points[j].correct_les as f64 / t.n_val as f64)),
                format_f64(mean(&|t| t.points[j].les_support.len() as f64)),
                format_f64(mean(&|t| t.points[j].relative_gap)),
            ]);
        }
    }
    let header = [
        "nu", "rho", "k", "t", "mean_accuracy_pre", "mean_accuracy_les", "les_nonzero_mean", "relative_gap_mean",
    ];
    dir.write_text("cv_curves.csv", &csv_text(&header, rows))
}

/// Writes `cv_cells.csv`, `cv_folds.csv`, `cv_curves.csv`, `summary.json`,
/// per-job traces under `jobs/` and `config.json`. Returns the manifest
/// path.
pub fn run(config: &CrossValidateConfig) -> Result<PathBuf> {
    config.validate_grid()?;
    let problem = Problem::load(&config.data, &config.mask, config.connectivity, config.family)?;
    let data = &problem.data;
    let bias_truth = config.bias_truth.as_ref().map(core_io::read_index_list).transpose()?;
    if let Some(b) = bias_truth.as_ref().and_then(|b| b.iter().find(|&&i| i >= data.p())) {
        return Err(CliError::config(format!("bias voxel {} is outside 1..={}", b + 1, data.p())));
    }
    let top_k = config
        .top_k
        .unwrap_or_else(|| bias_truth.as_ref().map_or(DEFAULT_TOP_K, Vec::len));
    let labels: Vec<f64> = data.y.iter().copied().collect();
    let assignment = folds::stratified_folds(&labels, config.folds, config.seed)?;
    folds::check_training_classes(&labels, &assignment, config.folds)?;
    let splits: Vec<(Dataset, Dataset)> = (0..config.folds)
        .map(|f| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != f).collect();
            let val: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] == f).collect();
            (data.select_rows(&train), data.select_rows(&val))
        })
        .collect();

    let model = GlmModel::new(config.family, config.loss_scale);
    let mut cells = Vec::new();
    for &nu in &config.nu_grid {
        for &rho in &config.rho_grid {
            let op = problem.operator(rho)?;
            let base = config.solver(nu)?;
            let alpha = solver::resolve_step_size(data, model, &op, &base)?.alpha;
            let fold_config = SolverConfig {
                step: StepSize::Explicit(alpha),
                ..base
            };
            cells.push((nu, rho, op, fold_config, alpha));
        }
    }
    let out = require_out(&config.out)?;
    let mut dir = RunDir::create(out)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.folds).map(move |f| (c, f)))
        .collect();
    let traces = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (nu, rho, op, fold_config, _) = &cells[c];
            let (train, val) = &splits[f];
            log::debug!("cell nu={nu} rho={rho} fold {}", f + 1);
            let trace = run_fold(train, val, model, op, fold_config, top_k)?;
            let rel = format!("jobs/cell_{c:03}/fold_{:02}.csv", f + 1);
            write_file(&out.join(&rel), trace_csv(&trace).as_bytes())?;
            Ok((rel, trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = Vec::new();
    let mut cell_reports = Vec::new();
    let mut fold_reports = Vec::new();
    let mut traces = traces.into_iter();
    for (nu, rho, _, _, alpha) in &cells {
        let mut cell_traces = Vec::with_capacity(config.folds);
        for (rel, trace) in traces.by_ref().take(config.folds) {
            dir.track(rel);
            cell_traces.push(trace);
        }
        let (cell, folds) = reduce_cell(*nu, *rho, *alpha, &cell_traces, bias_truth.as_deref())?;
        log::info!(
            "nu={nu} rho={rho}: accuracy pre {:.4} les {:.4}, mdc {:.4}",
            cell.mean_accuracy_pre,
            cell.mean_accuracy_les,
            cell.mdc
        );
        cell_reports.push(cell);
        fold_reports.extend(folds);
        curves.push((*nu, *rho, cell_traces));
    }
    let accuracies: Vec<f64> = cell_reports.iter().map(|c| c.mean_accuracy_pre).collect();
    let report = CvReport {
        folds: config.folds,
        seed: config.seed,
        n: data.n(),
        p: data.p(),
        top_k,
        best_cell: solver::first_argmax(&accuracies).expect("grids are nonempty"),
        cells: cell_reports,
        fold_reports,
    };
    write_tables(&mut dir, &report, &curves)?;
    dir.write_json(SUMMARY_JSON, &report)?;
    dir.write_json("config.json", config)?;
    dir.finish()
}
