//! Subspace-angle diagnostics for model-selection consistency and the
//! sparse-regression simulation driver.
//!
//! The angle `θ(ν)` measures how far the `γ_{S^c}` coordinates are from the
//! `(β, γ_S)` coordinates in the metric of the split Hessian
//!
//! ```text
//!     | c XᵀWX + DᵀD/ν   -Dᵀ/ν |
//! H = |                        |
//!     |     -D/ν          I/ν  |
//! ```
//!
//! with `cos²θ = tr(H_{c,a} H_{a,a}† H_{a,c}) / tr(H_{c,c})`, where `a`
//! collects `β` and `γ_S` and `c` collects `γ_{S^c}`. An angle near 90° means
//! the two blocks decouple.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::glm_loss::{self, Dataset, GlmFamily, GlmModel, LossScale};
use crate::grid_graph::DifferenceOperator;
use crate::linalg;
use crate::metrics::{self, EstimationErrors};
use crate::rng;
use crate::solver::{self, RecordSchedule, SolverConfig};
use crate::sparsity_ops::SupportSet;
use crate::synth_data;

/// Floating excursions of `cos²θ` beyond `[0, 1]` tolerated before clamping.
const CLAMP_SLACK: f64 = 1e-9;

/// Full `(p + rows) × (p + rows)` split Hessian, `β` coordinates first.
pub fn split_hessian(
    beta0: f64,
    beta: &DVector<f64>,
    data: &Dataset,
    model: impl Into<GlmModel>,
    op: &DifferenceOperator,
    nu: f64,
) -> Result<DMatrix<f64>> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    check_len("operator columns", data.p(), op.p())?;
    let hdata = glm_loss::data_hessian(beta0, beta, data, model)?;
    let d = op.to_dense();
    let (p, m) = (op.p(), op.rows());
    let mut h = DMatrix::zeros(p + m, p + m);
    h.view_mut((0, 0), (p, p))
        .copy_from(&(hdata + d.tr_mul(&d) / nu));
    let cross = -d / nu;
    h.view_mut((p, 0), (m, p)).copy_from(&cross);
    h.view_mut((0, p), (p, m)).copy_from(&cross.transpose());
    for i in 0..m {
        h[(p + i, p + i)] = 1.0 / nu;
    }
    Ok(h)
}

fn angle_from_cos2(cos2: f64) -> Result<f64> {
    if !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&cos2) {
        return Err(Error::UndefinedAngle("cos² outside [0, 1]; numerically inconsistent inputs"));
    }
    Ok(cos2.clamp(0.0, 1.0).sqrt().acos().to_degrees())
}

/// The angle in degrees between the `γ_{S^c}` block and the `(β, γ_S)`
/// block at `(beta0, beta)`.
pub fn compute_angle(
    beta0: f64,
    beta: &DVector<f64>,
    data: &Dataset,
    model: impl Into<GlmModel>,
    op: &DifferenceOperator,
    nu: f64,
    s: &SupportSet,
) -> Result<f64> {
    angle_from_cos2(angle_cos2(beta0, beta, data, model, op, nu, s)?)
}

/// `cos²θ` behind [`compute_angle`]. Near `θ = 0` this is the better
/// conditioned quantity to compare.
pub fn angle_cos2(
    beta0: f64,
    beta: &DVector<f64>,
    data: &Dataset,
    model: impl Into<GlmModel>,
    op: &DifferenceOperator,
    nu: f64,
    s: &SupportSet,
) -> Result<f64> {
    check_len("support rows", op.rows(), s.rows())?;
    let complement = s.complement();
    if complement.is_empty() {
        return Err(Error::UndefinedAngle("support covers every row"));
    }
    let h = split_hessian(beta0, beta, data, model, op, nu)?;
    let p = op.p();
    let a: Vec<usize> = (0..p).chain(s.indices().iter().map(|&i| p + i)).collect();
    let c: Vec<usize> = complement.iter().map(|&i| p + i).collect();
    let haa = h.select_rows(&a).select_columns(&a);
    let hca = h.select_rows(&c).select_columns(&a);
    let denom = h.select_rows(&c).select_columns(&c).trace();
    if !(denom > 0.0) {
        return Err(Error::UndefinedAngle("complement block has zero trace"));
    }
    let numer = (&hca * linalg::psd_pseudoinverse(&haa) * hca.transpose()).trace();
    Ok(numer / denom)
}

/// Which matrix the linear closed form inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ClosedForm {
    /// `ν c XᵀX + D_{S^c}ᵀ D_{S^c}`, exactly equal to the generic angle.
    #[default]
    Exact,
    /// `ν c XᵀX + DᵀD` with every row of `D`. Agrees with the generic angle
    /// only when `S` is empty.
    FullOperator,
}

/// Linear-model angle from `cos²θ (m - s) = Σ_i d_iᵀ A† d_i`, `d_i` the
/// off-support rows of `D`. `nu = 0` is allowed here.
pub fn closed_form_angle_linear(
    data: &Dataset,
    scale: LossScale,
    op: &DifferenceOperator,
    nu: f64,
    s: &SupportSet,
    form: ClosedForm,
) -> Result<f64> {
    angle_from_cos2(closed_form_cos2_linear(data, scale, op, nu, s, form)?)
}

/// `cos²θ` behind [`closed_form_angle_linear`].
pub fn closed_form_cos2_linear(
    data: &Dataset,
    scale: LossScale,
    op: &DifferenceOperator,
    nu: f64,
    s: &SupportSet,
    form: ClosedForm,
) -> Result<f64> {
    check_len("operator columns", data.p(), op.p())?;
    check_len("support rows", op.rows(), s.rows())?;
    if !(nu >= 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be >= 0, got {nu}")));
    }
    let complement = s.complement();
    if complement.is_empty() {
        return Err(Error::UndefinedAngle("support covers every row"));
    }
    let d = op.to_dense();
    let dsc = d.select_rows(&complement);
    let penalty = match form {
        ClosedForm::Exact => dsc.tr_mul(&dsc),
        ClosedForm::FullOperator => d.tr_mul(&d),
    };
    let c = scale.factor(data.n());
    let a = data.x.tr_mul(&data.x) * (nu * c) + penalty;
    let numer = (&dsc * linalg::psd_pseudoinverse(&a) * dsc.transpose()).trace();
    Ok(numer / complement.len() as f64)
}

/// True iff the row space of `D_{S^c}` lies in the row space of `X`.
pub fn theorem1_condition(data: &Dataset, op: &DifferenceOperator, s: &SupportSet) -> Result<bool> {
    check_len("operator columns", data.p(), op.p())?;
    check_len("support rows", op.rows(), s.rows())?;
    let complement = s.complement();
    let xt = data.x.transpose();
    if complement.is_empty() {
        return Ok(true);
    }
    let dsct = op.to_dense().select_rows(&complement).transpose();
    let mut both = DMatrix::zeros(op.p(), xt.ncols() + dsct.ncols());
    both.view_mut((0, 0), xt.shape()).copy_from(&xt);
    both.view_mut((0, xt.ncols()), dsct.shape()).copy_from(&dsct);
    // One absolute cutoff for both ranks, so scale differences between X
    // and D cannot change the verdict.
    let cutoff = linalg::RELATIVE_CUTOFF * linalg::spectral_norm(&both);
    Ok(linalg::rank_above(&both, cutoff) == linalg::rank_above(&xt, cutoff))
}

/// Where the logistic weights `W` are evaluated for the angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AngleEvaluationPoint {
    /// `β = 0`, the start of every path: `W = I/4`.
    #[default]
    Zero,
    /// The generating coefficients `β*`.
    Truth,
}

impl std::str::FromStr for AngleEvaluationPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(AngleEvaluationPoint::Zero),
            "truth" => Ok(AngleEvaluationPoint::Truth),
            other => Err(Error::InvalidParameter(format!("unknown evaluation point '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub trials: usize,
    pub nu_grid: Vec<f64>,
    pub seed: u64,
    /// Families for the angle profile.
    pub angle_families: Vec<GlmFamily>,
    pub angle_scale: LossScale,
    pub angle_point: AngleEvaluationPoint,
    /// Families for the path study (AUC and estimation errors).
    pub path_families: Vec<GlmFamily>,
    pub path_scale: LossScale,
    pub kappa: f64,
    pub max_iters: usize,
    pub record: RecordSchedule,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            trials: 100,
            nu_grid: vec![0.02, 0.1, 1.0, 5.0, 10.0, 100.0],
            seed: 1000,
            angle_families: vec![GlmFamily::Linear, GlmFamily::Logistic],
            angle_scale: LossScale::Sum,
            angle_point: AngleEvaluationPoint::Zero,
            path_families: vec![GlmFamily::Linear],
            path_scale: LossScale::Sum,
            kappa: 10.0,
            max_iters: 20_000,
            record: RecordSchedule::SupportChanges,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        if self.nu_grid.is_empty() || self.nu_grid.iter().any(|&nu| !(nu > 0.0)) {
            return Err(Error::InvalidParameter("nu grid must be nonempty and positive".into()));
        }
        if matches!(self.record, RecordSchedule::Every(0) | RecordSchedule::LogSpaced(0)) {
            return Err(Error::InvalidParameter("record schedule needs a positive count".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|i| rng::trial_seed(self.seed, i)).collect()
    }
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleProfile {
    pub family: GlmFamily,
    pub nu_grid: Vec<f64>,
    pub theta_mean: Vec<f64>,
    pub theta_std: Vec<f64>,
    /// `per_trial[trial][nu]`, degrees.
    pub per_trial: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSummary {
    pub nu: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub errors_mean: EstimationErrors,
    pub support_size_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub auc: f64,
    pub errors: EstimationErrors,
    pub support_size: usize,
    pub best_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub family: GlmFamily,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub per_nu: Vec<NuSummary>,
    /// `per_trial[trial][nu]`.
    pub per_trial: Vec<Vec<TrialOutcome>>,
}

fn true_support_set(data: &Dataset) -> Result<SupportSet> {
    let truth = data
        .true_support
        .clone()
        .ok_or(Error::MissingTruth("simulation needs a true support"))?;
    SupportSet::new(truth, data.p(), data.p())
}

/// Angle at the true support for one dataset over a grid of `nu`.
pub fn angle_curve(
    data: &Dataset,
    model: GlmModel,
    point: AngleEvaluationPoint,
    nu_grid: &[f64],
) -> Result<Vec<f64>> {
    let op = DifferenceOperator::identity(data.p());
    let s = true_support_set(data)?;
    let beta = match (model.family, point) {
        (GlmFamily::Logistic, AngleEvaluationPoint::Truth) => data
            .beta_star
            .clone()
            .ok_or(Error::MissingTruth("angle at the truth needs beta_star"))?,
        _ => DVector::zeros(data.p()),
    };
    nu_grid
        .iter()
        .map(|&nu| compute_angle(0.0, &beta, data, model, &op, nu, &s))
        .collect()
}

pub fn run_angle_profile(config: &SimulationConfig, family: GlmFamily) -> Result<AngleProfile> {
    config.validate()?;
    let model = GlmModel::new(family, config.angle_scale);
    let per_trial = config
        .seeds()
        .into_par_iter()
        .map(|seed| {
            let data = synth_data::generate_appendix_dataset(seed, family);
            angle_curve(&data, model, config.angle_point, &config.nu_grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let (theta_mean, theta_std) = (0..config.nu_grid.len())
        .map(|j| mean_std(&per_trial.iter().map(|t| t[j]).collect::<Vec<_>>()))
        .unzip();
    Ok(AngleProfile {
        family,
        nu_grid: config.nu_grid.clone(),
        theta_mean,
        theta_std,
        per_trial,
    })
}

/// Runs one path with `D = I` and keeps the point whose `|β_pre|` best ranks
/// the true support (ties go to the earliest point).
pub fn best_auc_point(data: &Dataset, model: GlmModel, config: &SolverConfig) -> Result<TrialOutcome> {
    let op = DifferenceOperator::identity(data.p());
    let truth = true_support_set(data)?;
    let labels = DVector::from_fn(data.p(), |i, _| if truth.contains(i) { 1.0 } else { -1.0 });
    let mut best: Option<TrialOutcome> = None;
    solver::run_path_with(data, model, &op, config, |point| {
        let auc = metrics::auc(&point.beta_pre.abs(), &labels)?;
        if best.as_ref().is_none_or(|b| auc > b.auc) {
            best = Some(TrialOutcome {
                auc,
                errors: metrics::estimation_errors(&point.beta_pre, &point.beta_les, data)?,
                support_size: point.support.len(),
                best_t: point.t,
            });
        }
        Ok(())
    })?;
    Ok(best.expect("every path records its first point"))
}

pub fn run_path_study(config: &SimulationConfig, family: GlmFamily) -> Result<SimulationResult> {
    config.validate()?;
    let model = GlmModel::new(family, config.path_scale);
    let seeds = config.seeds();
    let jobs: Vec<(usize, usize)> = (0..seeds.len())
        .flat_map(|t| (0..config.nu_grid.len()).map(move |j| (t, j)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(t, j)| {
            let data = synth_data::generate_appendix_dataset(seeds[t], family);
            let solver_config = SolverConfig {
                nu: config.nu_grid[j],
                kappa: config.kappa,
                max_iters: config.max_iters,
                record: config.record,
                ..SolverConfig::default()
            };
            best_auc_point(&data, model, &solver_config)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_trial: Vec<Vec<TrialOutcome>> = outcomes
        .chunks(config.nu_grid.len())
        .map(<[TrialOutcome]>::to_vec)
        .collect();
    let per_nu = config
        .nu_grid
        .iter()
        .enumerate()
        .map(|(j, &nu)| {
            let column: Vec<&TrialOutcome> = per_trial.iter().map(|t| &t[j]).collect();
            let avg = |f: &dyn Fn(&TrialOutcome) -> f64| mean_std(&column.iter().map(|o| f(o)).collect::<Vec<_>>()).0;
            let (auc_mean, auc_std) = mean_std(&column.iter().map(|o| o.auc).collect::<Vec<_>>());
            NuSummary {
                nu,
                auc_mean,
                auc_std,
                errors_mean: EstimationErrors {
                    les_coef: avg(&|o| o.errors.les_coef),
                    pre_coef: avg(&|o| o.errors.pre_coef),
                    les_fit: avg(&|o| o.errors.les_fit),
                    pre_fit: avg(&|o| o.errors.pre_fit),
                },
                support_size_mean: avg(&|o| o.support_size as f64),
            }
        })
        .collect();
    Ok(SimulationResult {
        family,
        trials: config.trials,
        seeds,
        per_nu,
        per_trial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub angles: Vec<AngleProfile>,
    pub paths: Vec<SimulationResult>,
}

/// Angle profiles for every configured angle family and path studies for
/// every configured path family.
pub fn run_appendix_simulation(config: &SimulationConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let angles = config
        .angle_families
        .iter()
        .map(|&f| run_angle_profile(config, f))
        .collect::<Result<Vec<_>>>()?;
    let paths = config
        .path_families
        .iter()
        .map(|&f| run_path_study(config, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationOutput { angles, paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_graph::{EdgeList, DifferenceOperator};
    use crate::rng;
    use rand::Rng;

    fn random_instance(seed: u64) -> (Dataset, DifferenceOperator, SupportSet, f64, LossScale) {
        let mut r = rng::seeded(seed);
        let p = r.random_range(2..=20);
        let n = r.random_range(1..=30);
        let x = DMatrix::from_fn(n, p, |_, _| rng::standard_normal(&mut r));
        let data = Dataset::new(x, DVector::zeros(n)).unwrap();
        let pairs: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter(|_| r.random_bool(0.15))
            .collect();
        let edges = EdgeList::from_pairs(p, pairs).unwrap();
        let rho = if r.random_bool(0.2) { 0.0 } else { r.random_range(0.2..3.0) };
        let op = DifferenceOperator::from_edges(p, &edges, rho).unwrap();
        let rows = op.rows();
        let mut idx: Vec<usize> = (0..rows).filter(|_| r.random_bool(0.4)).collect();
        if idx.len() == rows {
            idx.pop();
        }
        let s = SupportSet::new(idx, p, rows).unwrap();
        let nu = 10f64.powf(r.random_range(-2.0..3.0));
        let scale = if r.random_bool(0.5) { LossScale::Sum } else { LossScale::Mean };
        (data, op, s, nu, scale)
    }

    #[test]
    fn split_hessian_scalar_example() {
        let data = Dataset::new(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 0.0)).unwrap();
        let op = DifferenceOperator::identity(1);
        let h = split_hessian(0.0, &DVector::zeros(1), &data, GlmFamily::Linear, &op, 1.0).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]));
        assert!(h.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12));
    }

    #[test]
    fn split_hessian_logistic_at_zero_uses_quarter_weights() {
        let (data, op, _, nu, _) = random_instance(4);
        let model = GlmModel::new(GlmFamily::Logistic, LossScale::Mean);
        let labels = DVector::from_fn(data.n(), |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        let data = Dataset::new(data.x.clone(), labels).unwrap();
        let h = split_hessian(0.0, &DVector::zeros(data.p()), &data, model, &op, nu).unwrap();
        assert_eq!((&h - h.transpose()).amax(), 0.0);
        let d = op.to_dense();
        let expected = data.x.tr_mul(&data.x) / (4.0 * data.n() as f64) + d.tr_mul(&d) / nu;
        let p = data.p();
        assert!((h.view((0, 0), (p, p)) - expected).amax() < 1e-12);
    }

    #[test]
    fn generic_angle_matches_closed_form() {
        for seed in 0..50 {
            let (data, op, s, nu, scale) = random_instance(seed);
            let model = GlmModel::new(GlmFamily::Linear, scale);
            let zero = DVector::zeros(data.p());
            let generic = angle_cos2(0.0, &zero, &data, model, &op, nu, &s).unwrap();
            let closed = closed_form_cos2_linear(&data, scale, &op, nu, &s, ClosedForm::Exact).unwrap();
            assert!((generic - closed).abs() <= 1e-8, "seed {seed}: {generic} vs {closed}");
            let theta = compute_angle(0.0, &zero, &data, model, &op, nu, &s).unwrap();
            assert!((0.0..=90.0).contains(&theta));
            // In degrees the comparison is only well conditioned away from 0.
            if theta > 1.0 {
                let closed_theta = closed_form_angle_linear(&data, scale, &op, nu, &s, ClosedForm::Exact).unwrap();
                assert!((theta - closed_theta).abs() <= 1e-8 * theta, "seed {seed}");
            }
        }
    }

    #[test]
    fn full_operator_form_only_agrees_on_empty_support() {
        let data = synth_data::generate_appendix_dataset(1, GlmFamily::Linear);
        let op = DifferenceOperator::identity(80);
        let empty = SupportSet::empty(80, 80);
        let a = closed_form_angle_linear(&data, LossScale::Sum, &op, 1.0, &empty, ClosedForm::Exact).unwrap();
        let b = closed_form_angle_linear(&data, LossScale::Sum, &op, 1.0, &empty, ClosedForm::FullOperator).unwrap();
        assert!((a - b).abs() < 1e-10);
        let s = SupportSet::new((0..8).collect(), 80, 80).unwrap();
        let exact = closed_form_angle_linear(&data, LossScale::Mean, &op, 1.0, &s, ClosedForm::Exact).unwrap();
        let full = closed_form_angle_linear(&data, LossScale::Mean, &op, 1.0, &s, ClosedForm::FullOperator).unwrap();
        let generic = compute_angle(0.0, &DVector::zeros(80), &data, GlmModel::new(GlmFamily::Linear, LossScale::Mean), &op, 1.0, &s).unwrap();
        assert!((exact - generic).abs() < 1e-8);
        assert!((full - generic).abs() > 1e-3);
    }

    #[test]
    fn closed_form_edge_cases() {
        let data = Dataset::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let op = DifferenceOperator::identity(2);
        let s = SupportSet::new(vec![0], 2, 2).unwrap();
        let theta = closed_form_angle_linear(&data, LossScale::Sum, &op, 0.0, &s, ClosedForm::Exact).unwrap();
        assert!(theta.abs() < 1e-6);
        let full = SupportSet::full(2, 2);
        assert!(matches!(
            closed_form_angle_linear(&data, LossScale::Sum, &op, 1.0, &full, ClosedForm::Exact),
            Err(Error::UndefinedAngle(_))
        ));
        assert!(compute_angle(0.0, &DVector::zeros(2), &data, GlmFamily::Linear, &op, 1.0, &full).is_err());
    }

    #[test]
    fn decoupled_blocks_give_right_angle() {
        // With rho = 0 the edge rows of D vanish, so the off-support edge
        // coordinates do not interact with beta at all.
        let edges = EdgeList::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        let op = DifferenceOperator::from_edges(3, &edges, 0.0).unwrap();
        let data = Dataset::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        let s = SupportSet::new(vec![0, 1, 2], 3, 5).unwrap();
        let theta = compute_angle(0.0, &DVector::zeros(3), &data, GlmFamily::Linear, &op, 2.0, &s).unwrap();
        assert!((theta - 90.0).abs() < 1e-12);
    }

    #[test]
    fn rank_condition_examples() {
        let op = DifferenceOperator::identity(3);
        let s = SupportSet::new(vec![1], 3, 3).unwrap();
        let full_rank = Dataset::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        assert!(theorem1_condition(&full_rank, &op, &s).unwrap());
        let zero = Dataset::new(DMatrix::zeros(2, 3), DVector::zeros(2)).unwrap();
        assert!(!theorem1_condition(&zero, &op, &s).unwrap());
        for seed in 0..5 {
            let d = synth_data::generate_appendix_dataset(seed, GlmFamily::Linear);
            let op = DifferenceOperator::identity(80);
            let s = SupportSet::new((0..8).collect(), 80, 80).unwrap();
            assert!(theorem1_condition(&d, &op, &s).unwrap());
        }
    }

    #[test]
    fn angle_grows_with_nu_on_one_dataset() {
        let data = synth_data::generate_appendix_dataset(2, GlmFamily::Linear);
        let grid = [0.02, 0.1, 1.0, 10.0, 100.0];
        let curve = angle_curve(&data, GlmModel::new(GlmFamily::Linear, LossScale::Sum), AngleEvaluationPoint::Zero, &grid).unwrap();
        assert!(curve.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{curve:?}");
        assert!(curve[4] > 85.0);
    }

    #[test]
    fn small_simulation_is_reproducible() {
        let config = SimulationConfig {
            trials: 2,
            nu_grid: vec![1.0, 10.0],
            max_iters: 2000,
            ..SimulationConfig::default()
        };
        let a = run_appendix_simulation(&config).unwrap();
        let b = run_appendix_simulation(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.angles.len(), 2);
        assert_eq!(a.paths[0].per_trial.len(), 2);
        for s in &a.paths[0].per_nu {
            assert!((0.0..=1.0).contains(&s.auc_mean));
        }
        assert!(SimulationConfig { trials: 0, ..config.clone() }.validate().is_err());
    }

    #[test]
    fn mean_std_of_constant_is_zero() {
        assert_eq!(mean_std(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        assert_eq!(mean_std(&[1.0]), (1.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
