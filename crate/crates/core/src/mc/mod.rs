//! Monte Carlo harness: replicated model selection over a grid of designs.
//!
//! Replication `r` of a cell draws its data from a seed that depends on the
//! base seed, the design label, `T`, `ρ*` and `r` only. Estimators and
//! adjustment modes of the same grid point therefore see identical series,
//! and the results do not depend on how many workers run them.

mod config;
mod export;
mod metrics;

pub use config::{DgpConfig, ExperimentConfig, LagOverride};
pub use export::{
    export_csv, read_csv, write_csv, write_manifest, write_samples_csv, CellSummary, Manifest,
};
pub use metrics::{
    classification_metrics, lag_pattern_metrics, ClassificationMetrics, LagPatternMetrics,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::enrich::Estimator;
use crate::error::{Error, Result};
use crate::prep::DetrendMode;
use crate::rng::{label_hash, substream, streams};
use crate::select::select_model;
use crate::stats::{binomial_se, median};

/// Share of failed replications above which a cell is flagged.
pub const FAILURE_FLAG_SHARE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellKey {
    pub dgp: String,
    pub estimator: Estimator,
    #[serde(rename = "T")]
    pub t: usize,
    pub rho_star: f64,
    pub det: DetrendMode,
}

impl CellKey {
    /// Seed path of the simulated data; excludes estimator and adjustment.
    fn data_path(&self, rep: usize) -> [u64; 5] {
        [
            streams::DATA,
            label_hash(&self.dgp),
            self.t as u64,
            self.rho_star.to_bits(),
            rep as u64,
        ]
    }
}

/// What one replication produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Replication {
    pub includes_inference: bool,
    pub lag_pattern: Vec<usize>,
    /// Penalty factor of `y_{t-1}`; `None` when it can never enter.
    pub w1: Option<f64>,
    /// Activation knot of every penalised column.
    pub activation_knots: Vec<Option<f64>>,
    pub lambda_bic: f64,
    pub p: usize,
}

impl Replication {
    pub fn log_w1(&self) -> f64 {
        self.w1.map_or(f64::INFINITY, f64::ln)
    }

    /// Log activation knot of column `i`, `-∞` if it never enters.
    pub fn log_lambda0(&self, i: usize) -> f64 {
        self.activation_knots
            .get(i)
            .copied()
            .flatten()
            .map_or(f64::NEG_INFINITY, f64::ln)
    }

    /// Whether `y_{t-1}` is the first column to enter the path.
    pub fn inference_first(&self) -> bool {
        match self.activation_knots[0] {
            None => false,
            Some(l0) => self.activation_knots[1..]
                .iter()
                .all(|k| k.is_none_or(|k| k < l0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub key: CellKey,
    pub reps: usize,
    /// Outcomes in replication order; failed replications carry the error text.
    #[serde(skip)]
    pub replications: Vec<std::result::Result<Replication, String>>,
    /// Nonzero lags of the data-generating process, when finite.
    pub true_lags: Option<Vec<usize>>,
}

impl CellResult {
    pub fn successes(&self) -> impl Iterator<Item = &Replication> {
        self.replications.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.replications.iter().filter(|r| r.is_err()).count()
    }

    pub fn flagged(&self) -> bool {
        self.failures() as f64 > FAILURE_FLAG_SHARE * self.reps as f64
    }

    fn n_ok(&self) -> usize {
        self.reps - self.failures()
    }

    /// Share of successful replications satisfying `pred`, with its binomial
    /// standard error. `None` when every replication failed.
    pub fn rate(&self, pred: impl Fn(&Replication) -> bool) -> Option<(f64, f64)> {
        let n = self.n_ok();
        if n == 0 {
            return None;
        }
        let p = self.successes().filter(|r| pred(r)).count() as f64 / n as f64;
        Some((p, binomial_se(p, n)))
    }

    pub fn activation_rate(&self) -> Option<(f64, f64)> {
        self.rate(|r| r.includes_inference)
    }

    pub fn median_log_w1(&self) -> Option<f64> {
        self.median_of(|r| r.log_w1())
    }

    /// Median log activation knot of penalised column `i` (`0` is `y_{t-1}`).
    pub fn median_log_lambda0(&self, i: usize) -> Option<f64> {
        self.median_of(|r| r.log_lambda0(i))
    }

    fn median_of(&self, f: impl Fn(&Replication) -> f64) -> Option<f64> {
        let v: Vec<f64> = self.successes().map(f).collect();
        (!v.is_empty()).then(|| median(&v))
    }

    /// Row of the summary table.
    pub fn summary(&self) -> CellSummary {
        let act = self.activation_rate();
        let lag = self
            .true_lags
            .as_ref()
            .and_then(|j| lag_pattern_metrics(self, j));
        CellSummary {
            dgp: self.key.dgp.clone(),
            estimator: self.key.estimator,
            det: self.key.det,
            t: self.key.t,
            rho_star: self.key.rho_star,
            reps: self.reps,
            failures: self.failures(),
            flagged: self.flagged(),
            activation_rate: act.map(|a| a.0),
            activation_se: act.map(|a| a.1),
            p_exact: lag.as_ref().map(|m| m.exact.0),
            p_exact_se: lag.as_ref().map(|m| m.exact.1),
            p_superset: lag.as_ref().map(|m| m.superset.0),
            p_superset_se: lag.as_ref().map(|m| m.superset.1),
            p_model: lag.as_ref().map(|m| m.model.0),
            p_model_se: lag.as_ref().map(|m| m.model.1),
            median_log_w1: self.median_log_w1(),
            median_log_lambda0: self.median_log_lambda0(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McResult {
    pub cells: Vec<CellResult>,
}

impl McResult {
    pub fn summaries(&self) -> Vec<CellSummary> {
        self.cells.iter().map(CellResult::summary).collect()
    }

    pub fn cell(
        &self,
        estimator: Estimator,
        t: usize,
        rho_star: f64,
        det: DetrendMode,
    ) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.key.estimator == estimator
                && c.key.t == t
                && c.key.rho_star == rho_star
                && c.key.det == det
        })
    }
}

/// Cells in grid order: `T`, then `ρ*`, adjustment mode, estimator.
pub fn cell_keys(config: &ExperimentConfig) -> Vec<CellKey> {
    let label = config.label();
    let mut keys = vec![];
    for &t in &config.t_grid {
        for &rho_star in &config.rho_grid {
            for &det in &config.det_modes {
                for &estimator in &config.estimators {
                    keys.push(CellKey {
                        dgp: label.clone(),
                        estimator,
                        t,
                        rho_star,
                        det,
                    });
                }
            }
        }
    }
    keys
}

/// Seed of the simulated series for replication `rep` of `key`.
pub fn data_seed(config: &ExperimentConfig, key: &CellKey, rep: usize) -> u64 {
    substream(config.base_seed, &key.data_path(rep))
}

fn run_replication(
    config: &ExperimentConfig,
    key: &CellKey,
    rep: usize,
) -> std::result::Result<Replication, String> {
    let seed = data_seed(config, key, rep);
    let y = config
        .simulate(key.rho_star, key.t, seed)
        .map_err(|e| e.to_string())?;
    let mut spec = config.weight_spec(key.estimator, key.det);
    if let Some(j) = spec.j_spec.as_mut() {
        j.seed = substream(seed, &[streams::J_ALPHA]);
    }
    let res = select_model(&y, &spec, key.det, config.lag_order(key.t)).map_err(|e| e.to_string())?;
    Ok(Replication {
        includes_inference: res.includes_inference,
        lag_pattern: res.lag_pattern,
        w1: res.diagnostics.weights[0],
        activation_knots: res.diagnostics.activation_knots,
        lambda_bic: res.lambda_bic,
        p: res.diagnostics.p,
    })
}

/// Run every cell of `config` on `config.workers` threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McResult> {
    config.validate()?;
    let keys = cell_keys(config);
    let reps = config.reps;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        (0..keys.len() * reps)
            .into_par_iter()
            .map(|i| run_replication(config, &keys[i / reps], i % reps))
            .collect()
    });
    let mut outcomes = outcomes.into_iter();
    let true_lags = config.dgp.true_lags();
    let cells = keys
        .into_iter()
        .map(|key| CellResult {
            key,
            reps,
            replications: outcomes.by_ref().take(reps).collect(),
            true_lags: true_lags.clone(),
        })
        .collect();
    Ok(McResult { cells })
}
