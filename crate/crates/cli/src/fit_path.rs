//! `fit-path`: one regularization path with every recorded point on disk.

use std::path::PathBuf;

use gsplit_core::io::format_f64;
use gsplit_core::solver::{self, Estimator, PathPoint, StepInfo, StepSize};
use gsplit_core::{GlmFamily, GlmModel, SolverConfig};

use crate::config::{parse_record, require_out, FitPathConfig};
use crate::error::Result;
use crate::problem::Problem;
use crate::run_dir::{csv_text, RunDir};

pub const PATH_CSV: &str = "path.csv";

impl FitPathConfig {
    pub fn solver(&self) -> Result<SolverConfig> {
        let config = SolverConfig {
            nu: self.nu,
            kappa: self.kappa,
            step: self.alpha.map_or(StepSize::Auto, StepSize::Explicit),
            max_iters: self.max_iters,
            t_max: self.t_max,
            record: parse_record(&self.record)?,
            fit_intercept: self.fit_intercept,
            vertex_threshold: self.vertex_threshold,
            ..SolverConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn path_header(family: GlmFamily) -> Vec<&'static str> {
    let mut h = vec![
        "point",
        "k",
        "t",
        "beta0",
        "data_nll",
        "gap_norm",
        "relative_gap",
        "support_size",
        "vertex_support",
        "edge_support",
        "les_nonzero",
    ];
    h.extend(match family {
        GlmFamily::Logistic => ["accuracy_pre", "accuracy_les"],
        GlmFamily::Linear => ["mse_pre", "mse_les"],
    });
    h
}

fn training_fit(point: &PathPoint, problem: &Problem, family: GlmFamily) -> Result<[f64; 2]> {
    let data = &problem.data;
    Ok(match family {
        GlmFamily::Logistic => [
            solver::point_accuracy(point, data, Estimator::Pre)?,
            solver::point_accuracy(point, data, Estimator::Les)?,
        ],
        GlmFamily::Linear => {
            let mse = |beta| -> Result<f64> {
                let r = data.predictor(point.beta0, beta)? - &data.y;
                Ok(r.norm_squared() / data.n() as f64)
            };
            [mse(&point.beta_pre)?, mse(&point.beta_les)?]
        }
    })
}

fn metadata(config: &FitPathConfig, problem: &Problem, rows: usize, info: &StepInfo, points: usize, last_k: usize) -> String {
    let mut lines = vec![
        format!("command = fit-path"),
        format!("version = {}", env!("CARGO_PKG_VERSION")),
        format!("family = {}", config.family),
        format!("loss_scale = {}", config.loss_scale),
        format!("n = {}", problem.data.n()),
        format!("p = {}", problem.data.p()),
        format!("edges = {}", problem.edges.len()),
        format!("rows = {rows}"),
        format!("nu = {}", format_f64(config.nu)),
        format!("rho = {}", format_f64(config.rho)),
        format!("kappa = {}", format_f64(config.kappa)),
        format!("alpha = {}", format_f64(info.alpha)),
        format!("alpha_bound = {}", format_f64(info.alpha_bound)),
        format!("lambda_x = {}", format_f64(info.lambda_x)),
        format!("lambda_x_eff = {}", format_f64(info.lambda_x_eff)),
        format!("lambda_d = {}", format_f64(info.lambda_d)),
        format!("max_iters = {}", config.max_iters),
        format!("t_max = {}", config.t_max.map_or("none".into(), format_f64)),
        format!("iterations = {last_k}"),
        format!("record = {}", config.record),
        format!("points = {points}"),
    ];
    lines.push(String::new());
    lines.join("\n")
}

/// Writes `path.csv`, `estimates/point_NNNN_{beta,gamma}.csv`,
/// `metadata.txt` and `config.json`. Returns the manifest path.
pub fn run(config: &FitPathConfig) -> Result<PathBuf> {
    let solver_config = config.solver()?;
    let problem = Problem::load(&config.data, &config.mask, config.connectivity, config.family)?;
    let op = problem.operator(config.rho)?;
    let mut dir = RunDir::create(require_out(&config.out)?)?;
    let model = GlmModel::new(config.family, config.loss_scale);

    let path = solver::run_path(&problem.data, model, &op, &solver_config)?;
    let mut rows = Vec::with_capacity(path.points.len());
    for (index, point) in path.points.iter().enumerate() {
        let fit = training_fit(point, &problem, config.family)?;
        let vertices = point.support.vertices().len();
        rows.push(vec![
            index.to_string(),
            point.k.to_string(),
            format_f64(point.t),
            format_f64(point.beta0),
            format_f64(point.data_nll),
            format_f64(point.gap_norm),
            format_f64(point.relative_gap()),
            point.support.len().to_string(),
            vertices.to_string(),
            (point.support.len() - vertices).to_string(),
            point.beta_les.iter().filter(|&&b| b != 0.0).count().to_string(),
            format_f64(fit[0]),
            format_f64(fit[1]),
        ]);
        let beta = csv_text(
            &["index", "beta_pre", "beta_les"],
            (0..point.beta_pre.len()).map(|i| {
                vec![(i + 1).to_string(), format_f64(point.beta_pre[i]), format_f64(point.beta_les[i])]
            }),
        );
        dir.write_text(&format!("estimates/point_{index:04}_beta.csv"), &beta)?;
        let gamma = csv_text(
            &["row", "gamma"],
            point.gamma.iter().enumerate().map(|(i, &g)| vec![(i + 1).to_string(), format_f64(g)]),
        );
        dir.write_text(&format!("estimates/point_{index:04}_gamma.csv"), &gamma)?;
    }
    let info = path.step;
    let count = path.points.len();
    let last_k = path.points.last().map_or(0, |p| p.k);
    dir.write_text(PATH_CSV, &csv_text(&path_header(config.family), rows))?;
    dir.write_text("metadata.txt", &metadata(config, &problem, op.rows(), &info, count, last_k))?;
    dir.write_json("config.json", config)?;
    log::info!("{count} path points, alpha = {:.3e}, t_end = {:.4}", info.alpha, last_k as f64 * info.alpha);
    dir.finish()
}
