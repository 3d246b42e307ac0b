//! JSON payloads emitted by the fit subcommands. Non-finite numbers
//! serialize as null.

use serde::Serialize;
use spreadfit::inference::InferenceResult;
use spreadfit::likelihood::{FitResult, FitStatus};

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: String,
    /// Row-major d x d Hessian at the reported point.
    pub hessian: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonexistence_direction: Option<Vec<f64>>,
    pub se: Vec<f64>,
    pub ci: Vec<(f64, f64)>,
    pub tstats: Vec<f64>,
    pub numerical_flag: bool,
}

pub fn status_label(status: &FitStatus<f64>) -> &'static str {
    match status {
        FitStatus::Converged => "Converged",
        FitStatus::MaxIters => "MaxIters",
        FitStatus::Diverged => "Diverged",
        FitStatus::NonExistent(_) => "NonExistent",
    }
}

impl FitReport {
    pub fn from_fit(fit: &FitResult<f64>, inference: Option<&InferenceResult<f64>>) -> Self {
        let direction = match &fit.status {
            FitStatus::NonExistent(v) => Some(v.clone()),
            _ => None,
        };
        let d = fit.beta.len();
        let (se, ci, tstats, flag) = match inference {
            Some(inf) => (
                inf.se.clone(),
                inf.ci.clone(),
                inf.tstats.clone(),
                inf.numerical_flag,
            ),
            None => (
                vec![f64::NAN; d],
                vec![(f64::NAN, f64::NAN); d],
                vec![f64::NAN; d],
                false,
            ),
        };
        Self {
            beta: fit.beta.clone(),
            loglik: fit.loglik,
            grad_norm: fit.grad_norm,
            iterations: fit.iterations,
            status: status_label(&fit.status).to_string(),
            hessian: fit.hessian.clone(),
            nonexistence_direction: direction,
            se,
            ci,
            tstats,
            numerical_flag: flag,
        }
    }

    /// Report for a plain likelihood evaluation at a fixed point.
    pub fn evaluated(
        beta: Vec<f64>,
        loglik: f64,
        grad_norm: f64,
        hessian: Vec<f64>,
        inference: Option<&InferenceResult<f64>>,
    ) -> Self {
        let d = beta.len();
        let (se, ci, tstats, flag) = match inference {
            Some(inf) => (
                inf.se.clone(),
                inf.ci.clone(),
                inf.tstats.clone(),
                inf.numerical_flag,
            ),
            None => (
                vec![f64::NAN; d],
                vec![(f64::NAN, f64::NAN); d],
                vec![f64::NAN; d],
                false,
            ),
        };
        Self {
            beta,
            loglik,
            grad_norm,
            iterations: 0,
            status: "Evaluated".to_string(),
            hessian,
            nonexistence_direction: None,
            se,
            ci,
            tstats,
            numerical_flag: flag,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WeightsReport {
    /// L1-normalized weights over all edges, zero off support.
    pub weights: Vec<f64>,
    /// 1-based edge ids with positive weight.
    pub support: Vec<usize>,
    /// Covariate projection of the weights; null when it fails.
    pub beta_projected: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ExistenceReport {
    pub existence: String,
    pub direction: Option<Vec<f64>>,
}
