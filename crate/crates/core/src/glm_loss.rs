//! Negative log-likelihoods, the split loss and their derivatives.
//!
//! The split loss augments a GLM likelihood with a gap term tying `D beta`
//! to the sparse variable `gamma`:
//!
//! ```text
//! l(beta0, beta, gamma) = nll(beta0, beta) + ||D beta - gamma||^2 / (2 nu)
//! ```
//!
//! With [`LossScale::Mean`] the likelihood is averaged over samples, with
//! [`LossScale::Sum`] it is the plain sum. `nu` is interpreted relative to
//! whichever scale is in use.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid_graph::DifferenceOperator;
use crate::linalg;

/// Samples, responses and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Design matrix, one row per sample.
    pub x: DMatrix<f64>,
    /// Responses: `±1` labels for logistic, reals for linear.
    pub y: DVector<f64>,
    pub beta_star: Option<DVector<f64>>,
    /// True support over the rows of the associated operator (0-based).
    pub true_support: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("dataset has no samples"));
        }
        if x.ncols() == 0 {
            return Err(Error::EmptyInput("dataset has no features"));
        }
        check_len("responses", x.nrows(), y.len())?;
        Ok(Dataset {
            x,
            y,
            beta_star: None,
            true_support: None,
        })
    }

    pub fn with_truth(mut self, beta_star: DVector<f64>, true_support: Vec<usize>) -> Result<Self> {
        check_len("beta_star", self.p(), beta_star.len())?;
        self.beta_star = Some(beta_star);
        self.true_support = Some(true_support);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Checks responses against the family's label convention.
    pub fn validate(&self, family: GlmFamily) -> Result<()> {
        if family == GlmFamily::Logistic {
            if let Some((index, &value)) = self
                .y
                .iter()
                .enumerate()
                .find(|(_, &v)| v != 1.0 && v != -1.0)
            {
                return Err(Error::InvalidLabel { index, value });
            }
        }
        Ok(())
    }

    /// Rows `indices` of this dataset; ground truth is carried over.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let x = self.x.select_rows(indices);
        let y = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.y[i]));
        Dataset {
            x,
            y,
            beta_star: self.beta_star.clone(),
            true_support: self.true_support.clone(),
        }
    }

    /// Linear predictor `X beta + beta0`.
    pub fn predictor(&self, beta0: f64, beta: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("coefficients", self.p(), beta.len())?;
        let mut eta = &self.x * beta;
        eta.add_scalar_mut(beta0);
        Ok(eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmFamily {
    Linear,
    Logistic,
}

impl std::str::FromStr for GlmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(GlmFamily::Linear),
            "logistic" => Ok(GlmFamily::Logistic),
            other => Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for GlmFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GlmFamily::Linear => "linear",
            GlmFamily::Logistic => "logistic",
        })
    }
}

/// Whether the likelihood is averaged over samples or summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LossScale {
    #[default]
    Mean,
    Sum,
}

impl LossScale {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            LossScale::Mean => 1.0 / n as f64,
            LossScale::Sum => 1.0,
        }
    }
}

impl std::str::FromStr for LossScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(LossScale::Mean),
            "sum" => Ok(LossScale::Sum),
            other => Err(Error::InvalidParameter(format!("unknown loss scale '{other}'"))),
        }
    }
}

impl std::fmt::Display for LossScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossScale::Mean => "mean",
            LossScale::Sum => "sum",
        })
    }
}

/// A likelihood: family plus sample scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlmModel {
    pub family: GlmFamily,
    pub scale: LossScale,
}

impl GlmModel {
    pub fn new(family: GlmFamily, scale: LossScale) -> Self {
        GlmModel { family, scale }
    }
}

impl From<GlmFamily> for GlmModel {
    fn from(family: GlmFamily) -> Self {
        GlmModel {
            family,
            scale: LossScale::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitLossParams<'a> {
    pub nu: f64,
    pub op: &'a DifferenceOperator,
}

impl<'a> SplitLossParams<'a> {
    pub fn new(nu: f64, op: &'a DifferenceOperator) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        Ok(SplitLossParams { nu, op })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub beta0: f64,
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub fn data_nll(beta0: f64, beta: &DVector<f64>, data: &Dataset, model: impl Into<GlmModel>) -> Result<f64> {
    let model = model.into();
    data.validate(model.family)?;
    let eta = data.predictor(beta0, beta)?;
    Ok(nll_from_predictor(&eta, &data.y, model))
}

pub(crate) fn nll_from_predictor(eta: &DVector<f64>, y: &DVector<f64>, model: GlmModel) -> f64 {
    let c = model.scale.factor(y.len());
    let total: f64 = match model.family {
        GlmFamily::Logistic => eta
            .iter()
            .zip(y.iter())
            .map(|(&e, &label)| softplus(-label * e))
            .sum(),
        GlmFamily::Linear => eta
            .iter()
            .zip(y.iter())
            .map(|(&e, &target)| 0.5 * (target - e).powi(2))
            .sum(),
    };
    c * total
}

/// Derivative of the per-sample loss with respect to the predictor, before
/// the sample scaling.
pub(crate) fn predictor_residuals_into(
    eta: &DVector<f64>,
    y: &DVector<f64>,
    family: GlmFamily,
    out: &mut DVector<f64>,
) {
    match family {
        GlmFamily::Logistic => {
            for ((o, &e), &label) in out.iter_mut().zip(eta.iter()).zip(y.iter()) {
                *o = -label * sigmoid(-label * e);
            }
        }
        GlmFamily::Linear => {
            for ((o, &e), &target) in out.iter_mut().zip(eta.iter()).zip(y.iter()) {
                *o = e - target;
            }
        }
    }
}

fn check_split_dims(beta: &DVector<f64>, gamma: &DVector<f64>, data: &Dataset, op: &DifferenceOperator) -> Result<()> {
    check_len("coefficients", data.p(), beta.len())?;
    check_len("operator columns", data.p(), op.p())?;
    check_len("gamma", op.rows(), gamma.len())
}

pub fn split_loss(
    beta0: f64,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
    data: &Dataset,
    model: impl Into<GlmModel>,
    params: &SplitLossParams<'_>,
) -> Result<f64> {
    check_split_dims(beta, gamma, data, params.op)?;
    let nll = data_nll(beta0, beta, data, model)?;
    let gap = params.op.apply(beta)? - gamma;
    Ok(nll + gap.norm_squared() / (2.0 * params.nu))
}

pub fn gradients(
    beta0: f64,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
    data: &Dataset,
    model: impl Into<GlmModel>,
    params: &SplitLossParams<'_>,
) -> Result<Gradients> {
    let model = model.into();
    check_split_dims(beta, gamma, data, params.op)?;
    data.validate(model.family)?;
    let eta = data.predictor(beta0, beta)?;
    let mut r = DVector::zeros(data.n());
    predictor_residuals_into(&eta, &data.y, model.family, &mut r);
    let c = model.scale.factor(data.n());
    let gap = params.op.apply(beta)? - gamma;
    let g_beta = data.x.tr_mul(&r) * c + params.op.apply_transpose(&gap)? / params.nu;
    Ok(Gradients {
        beta0: c * r.sum(),
        beta: g_beta,
        gamma: -gap / params.nu,
    })
}

/// `sigma(eta_i) (1 - sigma(eta_i))` at every sample, each in `(0, 1/4]`.
pub fn logit_weights(beta0: f64, beta: &DVector<f64>, data: &Dataset, family: GlmFamily) -> Result<DVector<f64>> {
    if family != GlmFamily::Logistic {
        return Err(Error::RequiresLogistic("logit_weights"));
    }
    let eta = data.predictor(beta0, beta)?;
    Ok(eta.map(|e| {
        let s = sigmoid(e);
        s * (1.0 - s)
    }))
}

/// Hessian of the data term, `c Xᵀ W X` (`W = I` for the linear family).
pub fn data_hessian(beta0: f64, beta: &DVector<f64>, data: &Dataset, model: impl Into<GlmModel>) -> Result<DMatrix<f64>> {
    let model = model.into();
    let c = model.scale.factor(data.n());
    let weighted = match model.family {
        GlmFamily::Linear => {
            check_len("coefficients", data.p(), beta.len())?;
            data.x.clone()
        }
        GlmFamily::Logistic => {
            let w = logit_weights(beta0, beta, data, model.family)?;
            let mut wx = data.x.clone();
            for (mut row, &wi) in wx.row_iter_mut().zip(w.iter()) {
                row *= wi;
            }
            wx
        }
    };
    Ok(data.x.tr_mul(&weighted) * c)
}

/// Largest singular value of the raw design matrix.
pub fn spectral_norm_x(data: &Dataset) -> Result<f64> {
    let x = &data.x;
    linalg::largest_singular_value(data.p(), |v| x * v, |w| x.tr_mul(w))
}

/// Largest singular value of the stacked operator.
pub fn spectral_norm_d(op: &DifferenceOperator) -> Result<f64> {
    if op.p() == 0 {
        return Err(Error::ZeroMatrix);
    }
    let forward = |v: &DVector<f64>| {
        let mut out = DVector::zeros(op.rows());
        op.apply_into(v, &mut out);
        out
    };
    let backward = |w: &DVector<f64>| {
        let mut out = DVector::zeros(op.p());
        op.apply_transpose_into(w, &mut out);
        out
    };
    linalg::largest_singular_value(op.p(), forward, backward)
}
