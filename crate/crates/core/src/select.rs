//! BIC tuning over the solution path and the end-to-end selection pipeline.

use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeries;
use crate::enrich::{inference_factor, weights_lags, Estimator, WeightSpec};
use crate::error::{Error, Result, Stage, StageExt};
use crate::prep::{build_adf_design, detrend, ols, schwert_pmax, DetTerms, DetrendMode};
use crate::stats::variance;
use crate::wlasso::{activation_knots, solve_path, LassoPath, PenalizedProblem, Projected};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Stationary,
    Nonstationary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub estimator: Estimator,
    pub detrend: DetrendMode,
    pub p: usize,
    pub t_eff: usize,
    /// Penalty factors; `null` marks a coefficient that can never enter.
    pub weights: Vec<Option<f64>>,
    pub knots: Vec<f64>,
    /// First activation knot of each penalised coefficient.
    pub activation_knots: Vec<Option<f64>>,
    /// OLS estimate entering the weight of `y_{t-1}`.
    pub rho_hat: Option<f64>,
    pub j_statistic: Option<f64>,
    pub omega2: Option<f64>,
    pub lrv_lag: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionResult {
    pub lambda_bic: f64,
    /// `[ρ, δ_1, …, δ_p]` at `lambda_bic`.
    pub beta: Vec<f64>,
    /// Indices into `beta` with non-zero coefficients.
    pub active_set: Vec<usize>,
    pub includes_inference: bool,
    /// Selected lags `j` (1-based).
    pub lag_pattern: Vec<usize>,
    pub classification: Classification,
    pub diagnostics: Diagnostics,
}

fn bic_value(rss: f64, nonzero: usize, n: f64) -> f64 {
    (rss / n).ln() + nonzero as f64 * n.ln() / n
}

/// `argmin_λ log(RSS/n) + ‖β_λ‖₀ log(n)/n` over the knots and `λ = 0`.
/// Returns `(λ_BIC, β)`; ties go to the larger `λ`.
pub fn bic_tune(path: &LassoPath, prob: &PenalizedProblem) -> Result<(f64, Vec<f64>)> {
    let proj = Projected::new(prob)?;
    let n = prob.nobs() as f64;
    let mut best: Option<(f64, usize)> = None;
    for (i, beta) in path.coefs.iter().enumerate() {
        let nonzero = beta.iter().filter(|b| **b != 0.0).count();
        let value = bic_value(proj.rss(beta), nonzero, n);
        if best.is_none_or(|(v, _)| value < v) {
            best = Some((value, i));
        }
    }
    let (_, i) = best.expect("a path has at least one coefficient vector");
    Ok((path.lambda_at(i), path.coefs[i].clone()))
}

/// BIC of the penalised fit at an arbitrary `λ` (used for grid checks).
pub fn bic_at(prob: &PenalizedProblem, beta: &[f64]) -> Result<f64> {
    let proj = Projected::new(prob)?;
    let nonzero = beta.iter().filter(|b| **b != 0.0).count();
    Ok(bic_value(proj.rss(beta), nonzero, prob.nobs() as f64))
}

/// Detrend, build the ADF(p) design, fit OLS, form weights, solve the path,
/// tune by BIC and classify.
pub fn select_model(
    y: &TimeSeries,
    spec: &WeightSpec,
    det: DetrendMode,
    p: Option<usize>,
) -> Result<SelectionResult> {
    select_model_with_path(y, spec, det, p).map(|(r, _)| r)
}

/// [`select_model`] that also returns the solution path.
pub fn select_model_with_path(
    y: &TimeSeries,
    spec: &WeightSpec,
    det: DetrendMode,
    p: Option<usize>,
) -> Result<(SelectionResult, LassoPath)> {
    spec.validate()?;
    if y.len() < 2 || variance(y.values()) == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let p = match p {
        Some(p) => p,
        None => schwert_pmax(y.len()).stage(Stage::Design)?,
    };
    let adjusted = detrend(y, det, det.default_qd_cbar()).stage(Stage::Detrend)?;
    if adjusted.values().iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(
            "nothing left after detrending".into(),
        ))
        .stage(Stage::Detrend);
    }
    let design = build_adf_design(&adjusted, p, DetTerms::None).stage(Stage::Design)?;
    let fit = ols(&design.regressors(), &design.response).stage(Stage::InitialFit)?;

    let trend = det.removes_trend();
    let inference = if trend && spec.estimator != Estimator::Pl {
        // trend-removing modes take ρ̂ from the trend-augmented regression on the raw series
        let raw = build_adf_design(y, p, DetTerms::Trend).stage(Stage::Design)?;
        let rho = ols(&raw.regressors(), &raw.response)
            .stage(Stage::InitialFit)?
            .coefficients[0];
        inference_factor(y, rho, spec, true)
    } else {
        inference_factor(&adjusted, fit.coefficients[0], spec, false)
    }
    .stage(Stage::Weights)?;

    let mut factors = vec![inference.factor];
    match spec.estimator {
        Estimator::Pl => factors.extend(std::iter::repeat_n(1.0, p)),
        _ => factors.extend(weights_lags(&fit.coefficients[1..=p], spec.gamma2).stage(Stage::Weights)?),
    }

    let prob = PenalizedProblem::from_design(&design, factors.clone()).stage(Stage::Path)?;
    let path = solve_path(&prob).stage(Stage::Path)?;
    let (lambda_bic, beta) = bic_tune(&path, &prob).stage(Stage::Tuning)?;

    let active_set: Vec<usize> = (0..beta.len()).filter(|&i| beta[i] != 0.0).collect();
    let includes_inference = beta[0] != 0.0;
    let lag_pattern = active_set.iter().copied().filter(|&i| i > 0).collect();
    let diagnostics = Diagnostics {
        estimator: spec.estimator,
        detrend: det,
        p,
        t_eff: design.t_eff,
        weights: factors
            .iter()
            .map(|f| f.is_finite().then_some(*f))
            .collect(),
        knots: path.knots.clone(),
        activation_knots: activation_knots(&path),
        rho_hat: inference.rho_hat,
        j_statistic: inference.j,
        omega2: inference.omega2,
        lrv_lag: inference.lrv_lag,
    };
    let result = SelectionResult {
        lambda_bic,
        beta,
        active_set,
        includes_inference,
        lag_pattern,
        classification: if includes_inference {
            Classification::Stationary
        } else {
            Classification::Nonstationary
        },
        diagnostics,
    };
    Ok((result, path))
}
