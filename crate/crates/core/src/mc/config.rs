use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgp::{
    add_deterministic, simulate_adf_dgp, simulate_ar1, simulate_unitroot_ma1, AdfDgpSpec,
    TimeSeries,
};
use crate::enrich::{Estimator, JSpec, WeightSpec};
use crate::error::{Error, Result};
use crate::lrv::LrvSpec;
use crate::prep::DetrendMode;

/// Data-generating process of an experiment. `ρ*` comes from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpConfig {
    /// `y_t = (1 + ρ*) y_{t-1} + u_t`.
    Ar1 {
        #[serde(default = "one")]
        sigma: f64,
    },
    /// Sparse ADF process with lag coefficients `delta_star`.
    AdfDgp {
        #[serde(default)]
        delta_star: Vec<f64>,
        #[serde(default = "one")]
        noise_sd: f64,
    },
    /// `y_t = (1 + ρ*) y_{t-1} + ε_t + θ ε_{t-1}`.
    Ma1 { theta: f64 },
}

fn one() -> f64 {
    1.0
}

impl DgpConfig {
    pub fn simulate(&self, rho_star: f64, t: usize, seed: u64) -> Result<TimeSeries> {
        match self {
            DgpConfig::Ar1 { sigma } => simulate_ar1(1.0 + rho_star, t, *sigma, seed),
            DgpConfig::AdfDgp {
                delta_star,
                noise_sd,
            } => simulate_adf_dgp(
                &AdfDgpSpec {
                    rho_star,
                    delta_star: delta_star.clone(),
                    t,
                    noise_sd: *noise_sd,
                },
                seed,
            ),
            DgpConfig::Ma1 { theta } => simulate_unitroot_ma1(1.0 + rho_star, *theta, t, seed),
        }
    }

    /// Lags with nonzero coefficients (1-based), when the process has a finite
    /// ADF representation.
    pub fn true_lags(&self) -> Option<Vec<usize>> {
        match self {
            DgpConfig::Ar1 { .. } => Some(vec![]),
            DgpConfig::AdfDgp { delta_star, .. } => Some(
                delta_star
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| **d != 0.0)
                    .map(|(j, _)| j + 1)
                    .collect(),
            ),
            DgpConfig::Ma1 { .. } => None,
        }
    }

    fn default_label(&self) -> String {
        match self {
            DgpConfig::Ar1 { .. } => "ar1".into(),
            DgpConfig::AdfDgp { .. } => "adf_dgp".into(),
            DgpConfig::Ma1 { .. } => "ma1".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagOverride {
    #[serde(rename = "T", alias = "t")]
    pub t: usize,
    pub p: usize,
}

/// A full Monte Carlo design, read from TOML.
///
/// ```toml
/// label = "delta_A"
/// T_grid = [100]
/// rho_grid = [0.0, -0.05]
/// reps = 2000
/// estimators = ["AL", "ALIE"]
/// det_modes = ["none"]
/// base_seed = 1
///
/// [dgp]
/// kind = "adf_dgp"
/// delta_star = [0.4, 0.3, 0.2]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name of the design in output files; defaults to the DGP kind.
    #[serde(default)]
    pub label: Option<String>,
    pub dgp: DgpConfig,
    pub rho_grid: Vec<f64>,
    #[serde(rename = "T_grid", alias = "t_grid")]
    pub t_grid: Vec<usize>,
    pub reps: usize,
    pub estimators: Vec<Estimator>,
    #[serde(default = "default_modes")]
    pub det_modes: Vec<DetrendMode>,
    #[serde(default = "one")]
    pub gamma1: f64,
    #[serde(default = "one")]
    pub gamma2: f64,
    #[serde(default)]
    pub j: JSpec,
    /// `J` settings for trend-removing modes.
    #[serde(default = "JSpec::trend_default")]
    pub j_trend: JSpec,
    #[serde(default)]
    pub lrv: LrvSpec,
    /// Lag order for every `T`; the Schwert rule when absent.
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub p_override: Vec<LagOverride>,
    /// Deterministic component `ψ_0 + ψ_1 t + ...` added to every simulated series.
    #[serde(default)]
    pub psi: Vec<f64>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "one_worker")]
    pub workers: usize,
}

fn default_modes() -> Vec<DetrendMode> {
    vec![DetrendMode::None]
}

fn one_worker() -> usize {
    1
}

impl ExperimentConfig {
    /// One-cell-per-grid-point design with default tuning.
    pub fn new(dgp: DgpConfig, rho_grid: Vec<f64>, t_grid: Vec<usize>, reps: usize) -> Self {
        Self {
            label: None,
            dgp,
            rho_grid,
            t_grid,
            reps,
            estimators: vec![Estimator::Al, Estimator::Alie],
            det_modes: default_modes(),
            gamma1: 1.0,
            gamma2: 1.0,
            j: JSpec::default(),
            j_trend: JSpec::trend_default(),
            lrv: LrvSpec::default(),
            p: None,
            p_override: vec![],
            psi: vec![],
            base_seed: 0,
            workers: 1,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.rho_grid.is_empty() || self.t_grid.is_empty() {
            return Err(Error::Config("rho_grid and T_grid must be nonempty".into()));
        }
        if self.estimators.is_empty() || self.det_modes.is_empty() {
            return Err(Error::Config("estimators and det_modes must be nonempty".into()));
        }
        for rho in &self.rho_grid {
            if !(*rho > -2.0 && *rho <= 0.0) {
                return Err(Error::Config(format!("rho* = {rho} outside (-2, 0]")));
            }
        }
        for est in &self.estimators {
            self.weight_spec(*est, DetrendMode::None)
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.dgp.default_label())
    }

    pub fn lag_order(&self, t: usize) -> Option<usize> {
        self.p_override
            .iter()
            .find(|o| o.t == t)
            .map(|o| o.p)
            .or(self.p)
    }

    /// Weight specification of `estimator` under `det`, `J` seed left at zero.
    pub fn weight_spec(&self, estimator: Estimator, det: DetrendMode) -> WeightSpec {
        let j = if det.removes_trend() {
            self.j_trend.clone()
        } else {
            self.j.clone()
        };
        WeightSpec {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            ..WeightSpec::for_estimator(estimator, j, self.lrv.clone())
        }
    }

    pub(crate) fn simulate(&self, rho_star: f64, t: usize, seed: u64) -> Result<TimeSeries> {
        let y = self.dgp.simulate(rho_star, t, seed)?;
        if self.psi.is_empty() {
            Ok(y)
        } else {
            add_deterministic(&y, &self.psi)
        }
    }
}
