use serde::Serialize;

use super::{CellResult, McResult};
use crate::enrich::Estimator;
use crate::prep::DetrendMode;

/// Rates `(p̂, se)` of exact, conservative and full-model selection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagPatternMetrics {
    /// `Ĵ = J`.
    pub exact: (f64, f64),
    /// `J ⊆ Ĵ`.
    pub superset: (f64, f64),
    /// `Ĵ = J` and `y_{t-1}` included exactly when the process is stationary.
    pub model: (f64, f64),
}

/// Lag-pattern selection rates of a cell. Absent when the fitted lag order
/// cannot reach the largest true lag, or when no replication succeeded.
pub fn lag_pattern_metrics(cell: &CellResult, true_lags: &[usize]) -> Option<LagPatternMetrics> {
    let max_lag = true_lags.iter().copied().max().unwrap_or(0);
    if cell.successes().any(|r| r.p < max_lag) {
        return None;
    }
    let stationary = cell.key.rho_star != 0.0;
    let exact = |r: &super::Replication| r.lag_pattern == true_lags;
    Some(LagPatternMetrics {
        exact: cell.rate(exact)?,
        superset: cell.rate(|r| true_lags.iter().all(|j| r.lag_pattern.contains(j)))?,
        model: cell.rate(|r| exact(r) && r.includes_inference == stationary)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub estimator: Estimator,
    pub det: DetrendMode,
    #[serde(rename = "T")]
    pub t: usize,
    /// Share of stationary processes among activations.
    pub ppv: Option<f64>,
    /// Share of unit-root processes among non-activations.
    pub npv: Option<f64>,
}

/// PPV and NPV from pooled counts; a metric is `None` when its denominator is zero.
pub fn predictive_values(
    stationary_active: usize,
    stationary_total: usize,
    unit_root_active: usize,
    unit_root_total: usize,
) -> (Option<f64>, Option<f64>) {
    let active = stationary_active + unit_root_active;
    let inactive = (stationary_total - stationary_active) + (unit_root_total - unit_root_active);
    let ppv = (active > 0).then(|| stationary_active as f64 / active as f64);
    let npv = (inactive > 0).then(|| (unit_root_total - unit_root_active) as f64 / inactive as f64);
    (ppv, npv)
}

/// Pool the `ρ* = 0` and `ρ* < 0` cells of each estimator, adjustment mode and `T`.
pub fn classification_metrics(result: &McResult) -> Vec<ClassificationMetrics> {
    let mut groups: Vec<(Estimator, DetrendMode, usize)> = vec![];
    for c in &result.cells {
        let g = (c.key.estimator, c.key.det, c.key.t);
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    groups
        .into_iter()
        .filter_map(|(estimator, det, t)| {
            let cells = result
                .cells
                .iter()
                .filter(|c| c.key.estimator == estimator && c.key.det == det && c.key.t == t);
            let (mut sa, mut sn, mut ua, mut un) = (0, 0, 0, 0);
            let (mut has_s, mut has_u) = (false, false);
            for c in cells {
                let active = c.successes().filter(|r| r.includes_inference).count();
                let n = c.successes().count();
                if c.key.rho_star == 0.0 {
                    has_u = true;
                    ua += active;
                    un += n;
                } else {
                    has_s = true;
                    sa += active;
                    sn += n;
                }
            }
            (has_s && has_u).then(|| {
                let (ppv, npv) = predictive_values(sa, sn, ua, un);
                ClassificationMetrics {
                    estimator,
                    det,
                    t,
                    ppv,
                    npv,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{CellKey, Replication};
    use super::*;

    fn rep(active: bool, lags: Vec<usize>, p: usize) -> Replication {
        Replication {
            includes_inference: active,
            lag_pattern: lags,
            w1: Some(1.0),
            activation_knots: vec![None; p + 1],
            lambda_bic: 0.0,
            p,
        }
    }

    fn cell(rho: f64, reps: Vec<Replication>) -> CellResult {
        CellResult {
            key: CellKey {
                dgp: "x".into(),
                estimator: Estimator::Alie,
                t: 100,
                rho_star: rho,
                det: DetrendMode::None,
            },
            reps: reps.len(),
            replications: reps.into_iter().map(Ok).collect(),
            true_lags: Some(vec![1, 3]),
        }
    }

    #[test]
    fn perfect_classifier() {
        assert_eq!(predictive_values(10, 10, 0, 10), (Some(1.0), Some(1.0)));
        let res = McResult {
            cells: vec![
                cell(0.0, vec![rep(false, vec![], 4); 5]),
                cell(-0.05, vec![rep(true, vec![], 4); 5]),
            ],
        };
        let m = classification_metrics(&res);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].ppv, m[0].npv), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn always_active_has_no_npv() {
        assert_eq!(predictive_values(10, 10, 10, 10), (Some(0.5), None));
        assert_eq!(predictive_values(0, 10, 0, 10), (None, Some(0.5)));
    }

    #[test]
    fn all_correct_patterns() {
        let c = cell(-0.05, vec![rep(true, vec![1, 3], 4); 4]);
        let m = lag_pattern_metrics(&c, &[1, 3]).unwrap();
        assert_eq!((m.exact.0, m.superset.0, m.model.0), (1.0, 1.0, 1.0));
    }

    #[test]
    fn mixed_patterns() {
        let c = cell(
            0.0,
            vec![
                rep(false, vec![1, 3], 4),
                rep(true, vec![1, 3], 4),
                rep(false, vec![1, 2, 3], 4),
                rep(false, vec![1], 4),
            ],
        );
        let m = lag_pattern_metrics(&c, &[1, 3]).unwrap();
        assert_eq!(m.exact.0, 0.5);
        assert_eq!(m.superset.0, 0.75);
        assert_eq!(m.model.0, 0.25);
        assert!((m.exact.1 - (0.25f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn short_lag_order_makes_pattern_metrics_absent() {
        let c = cell(0.0, vec![rep(false, vec![1], 2); 3]);
        assert!(lag_pattern_metrics(&c, &[1, 3]).is_none());
    }
}
