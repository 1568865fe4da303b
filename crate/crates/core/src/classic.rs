//! Classical benchmarks: ADF and quasi-difference-demeaned ADF (DFQD)
//! t-tests, and exhaustive BIC search over lag patterns.

use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, principal_submatrix};
use crate::lrv::{select_lag_ic, Criterion, LrvSpec};
use crate::prep::{build_adf_design, detrend, ols, schwert_pmax, DetTerms, DetrendMode};
use crate::stats::variance;

/// 5% critical value of the ADF t-test with a constant.
pub const ADF_CONST_5PCT: f64 = -2.89;
/// 5% critical value of the DFQD test on demeaned data.
pub const DFQD_DEMEAN_5PCT: f64 = -1.95;

/// Largest lag set searched exhaustively.
pub const BIC_STAR_MAX_LAGS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagRule {
    Aic,
    Bic,
    Maic,
    Fixed,
}

impl std::str::FromStr for LagRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(LagRule::Aic),
            "bic" => Ok(LagRule::Bic),
            "maic" => Ok(LagRule::Maic),
            "fixed" => Ok(LagRule::Fixed),
            other => Err(Error::invalid(format!("unknown lag rule '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub t_stat: f64,
    pub rho_hat: f64,
    pub lags_used: usize,
    /// `None` when no 5% critical value is bundled for this configuration.
    pub critical_value: Option<f64>,
    pub reject_5pct: Option<bool>,
}

fn choose_lags(y: &TimeSeries, det: DetTerms, rule: LagRule, k: Option<usize>) -> Result<usize> {
    if rule == LagRule::Fixed {
        return k.ok_or_else(|| Error::invalid("the fixed lag rule needs k"));
    }
    let spec = LrvSpec {
        criterion: match rule {
            LagRule::Aic => Criterion::Aic,
            LagRule::Bic => Criterion::Bic,
            LagRule::Maic => Criterion::Maic,
            LagRule::Fixed => unreachable!(),
        },
        k_fixed: None,
        k_max: Some(match k {
            Some(kmax) => kmax,
            None => schwert_pmax(y.len())?,
        }),
        det,
    };
    select_lag_ic(y, &spec)
}

fn guard(y: &TimeSeries) -> Result<()> {
    if y.len() < 2 || variance(y.values()) == 0.0 {
        return Err(Error::Degenerate("degenerate series: zero variance".into()));
    }
    Ok(())
}

fn t_test(y: &TimeSeries, det: DetTerms, k: usize, cv: Option<f64>) -> Result<TestReport> {
    let design = build_adf_design(y, k, det)?;
    let fit = ols(&design.regressors(), &design.response)?;
    let t_stat = fit.t_stats[0];
    if !t_stat.is_finite() {
        return Err(Error::Degenerate("non-finite t-statistic".into()));
    }
    Ok(TestReport {
        t_stat,
        rho_hat: fit.coefficients[0],
        lags_used: k,
        critical_value: cv,
        reject_5pct: cv.map(|c| t_stat < c),
    })
}

/// ADF t-test on `y_{t-1}`. With an information-criterion rule, `k` is the
/// largest lag searched (Schwert rule when absent); with [`LagRule::Fixed`]
/// it is the lag order used.
pub fn adf_test(y: &TimeSeries, det: DetTerms, lag_rule: LagRule, k: Option<usize>) -> Result<TestReport> {
    guard(y)?;
    let lags = choose_lags(y, det, lag_rule, k)?;
    let cv = (det == DetTerms::Const).then_some(ADF_CONST_5PCT);
    t_test(y, det, lags, cv)
}

/// ADF t-test without deterministic terms on GLS-adjusted data
/// (`c̄ = −7` for a constant, `−13.5` for a trend).
pub fn dfqd_test(y: &TimeSeries, det: DetTerms, lag_rule: LagRule, k: Option<usize>) -> Result<TestReport> {
    guard(y)?;
    let mode = match det {
        DetTerms::Const => DetrendMode::QdDemean,
        DetTerms::Trend => DetrendMode::QdDetrend,
        DetTerms::None => {
            return Err(Error::invalid("DFQD needs a constant or a trend"));
        }
    };
    let adjusted = detrend(y, mode, mode.default_qd_cbar())?;
    let lags = choose_lags(&adjusted, DetTerms::None, lag_rule, k)?;
    let cv = (det == DetTerms::Const).then_some(DFQD_DEMEAN_5PCT);
    t_test(&adjusted, DetTerms::None, lags, cv)
}

/// Lag subset `J ⊆ {1..p_max}` minimising BIC over all `2^{p_max}` OLS fits
/// of `Δy_t` on the deterministic terms, `y_{t-1}` (when
/// `force_inference`) and `{Δy_{t-j} : j ∈ J}`, all on the ADF(p_max) sample.
pub fn exhaustive_bic_pattern(
    y: &TimeSeries,
    p_max: usize,
    det: DetTerms,
    force_inference: bool,
) -> Result<Vec<usize>> {
    if p_max > BIC_STAR_MAX_LAGS {
        return Err(Error::invalid(format!(
            "exhaustive search is limited to {BIC_STAR_MAX_LAGS} lags, got {p_max}"
        )));
    }
    guard(y)?;
    let design = build_adf_design(y, p_max, det)?;
    // column order: det, y_{t-1}, lags
    let x = design.det_cols.hcat(&design.penalized())?;
    let g = x.gram();
    let xty = x.t_mul_vec(&design.response);
    let yty = dot(&design.response, &design.response);
    let n = design.t_eff as f64;
    let ndet = det.count();

    let mut base: Vec<usize> = (0..ndet).collect();
    if force_inference {
        base.push(ndet);
    }
    let lag_col = |j: usize| ndet + j; // lag j (1-based)

    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..(1 << p_max) {
        let mut cols = base.clone();
        cols.extend((1..=p_max).filter(|j| mask & (1 << (j - 1)) != 0).map(lag_col));
        let rss = if cols.is_empty() {
            yty
        } else {
            let h = principal_submatrix(&g, &cols);
            let l = cholesky(&h).ok_or(Error::RankDeficient {
                column: *cols.last().expect("non-empty"),
            })?;
            let b: Vec<f64> = cols.iter().map(|&c| xty[c]).collect();
            let coef = cholesky_solve(&l, &b);
            (yty - dot(&coef, &b)).max(0.0)
        };
        let bic = (rss / n).ln() + cols.len() as f64 * n.ln() / n;
        if best.is_none_or(|(v, _)| bic < v) {
            best = Some((bic, mask));
        }
    }
    let (_, mask) = best.expect("at least the empty pattern");
    Ok((1..=p_max).filter(|j| mask & (1 << (j - 1)) != 0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate_adf_dgp, simulate_ar1, simulate_random_walk, AdfDgpSpec};
    use crate::linalg::Matrix;
    use crate::wlasso::{solve_path, PenalizedProblem};

    #[test]
    fn white_noise_rejects_with_fixed_lags() {
        let y = simulate_ar1(0.0, 200, 1.0, 3).unwrap();
        let r = adf_test(&y, DetTerms::Const, LagRule::Fixed, Some(0)).unwrap();
        assert!(r.t_stat < -8.0 && r.reject_5pct == Some(true));
        assert_eq!(r.critical_value, Some(-2.89));
    }

    #[test]
    fn trend_has_no_bundled_critical_value() {
        let y = simulate_ar1(0.5, 100, 1.0, 3).unwrap();
        let r = adf_test(&y, DetTerms::Trend, LagRule::Bic, None).unwrap();
        assert_eq!(r.reject_5pct, None);
        let r = dfqd_test(&y, DetTerms::Trend, LagRule::Fixed, Some(1)).unwrap();
        assert_eq!(r.critical_value, None);
    }

    #[test]
    fn fixed_rule_requires_k() {
        let y = simulate_ar1(0.5, 100, 1.0, 3).unwrap();
        assert!(adf_test(&y, DetTerms::Const, LagRule::Fixed, None).is_err());
    }

    #[test]
    fn constant_series_is_degenerate_for_dfqd() {
        let y = TimeSeries::new(vec![4.0; 60]).unwrap();
        assert!(matches!(
            dfqd_test(&y, DetTerms::Const, LagRule::Fixed, Some(0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn power_against_stationary_ar1() {
        let rejections = (0..200)
            .filter(|&s| {
                let y = simulate_ar1(0.5, 500, 1.0, s).unwrap();
                adf_test(&y, DetTerms::Const, LagRule::Aic, None)
                    .unwrap()
                    .reject_5pct
                    .unwrap()
            })
            .count();
        assert!(rejections >= 198, "{rejections}");
    }

    #[test]
    fn dfqd_ignores_added_constant() {
        let y = simulate_random_walk(120, 1.0, 5).unwrap();
        let shifted = TimeSeries::new(y.values().iter().map(|v| v + 37.5).collect()).unwrap();
        let a = dfqd_test(&y, DetTerms::Const, LagRule::Fixed, Some(2)).unwrap();
        let b = dfqd_test(&shifted, DetTerms::Const, LagRule::Fixed, Some(2)).unwrap();
        assert!((a.t_stat - b.t_stat).abs() < 1e-8);
    }

    #[test]
    fn adf_and_path_endpoint_share_rho() {
        let y = simulate_ar1(0.8, 150, 1.0, 2).unwrap();
        let r = adf_test(&y, DetTerms::Const, LagRule::Fixed, Some(4)).unwrap();
        let d = build_adf_design(&y, 4, DetTerms::Const).unwrap();
        let prob = PenalizedProblem::from_design(&d, vec![1.0; 5]).unwrap();
        let path = solve_path(&prob).unwrap();
        assert!((path.coefs.last().unwrap()[0] - r.rho_hat).abs() < 1e-10);
    }

    #[test]
    fn bic_star_limits_lag_count() {
        let y = simulate_ar1(0.5, 200, 1.0, 1).unwrap();
        assert!(exhaustive_bic_pattern(&y, 13, DetTerms::Const, true).is_err());
    }

    #[test]
    fn bic_star_matches_brute_force_refits() {
        let spec = AdfDgpSpec::new(-0.1, vec![0.3, 0.0, 0.25], 120);
        for seed in 0..5 {
            let y = simulate_adf_dgp(&spec, seed).unwrap();
            let got = exhaustive_bic_pattern(&y, 5, DetTerms::Const, true).unwrap();
            let d = build_adf_design(&y, 5, DetTerms::Const).unwrap();
            let n = d.t_eff as f64;
            let mut best = (f64::INFINITY, vec![]);
            for mask in 0u32..32 {
                let lags: Vec<usize> = (1..=5).filter(|j| mask & (1 << (j - 1)) != 0).collect();
                let mut cols = vec![vec![1.0; d.t_eff], d.inference_col.clone()];
                cols.extend(lags.iter().map(|j| d.lag_cols.column(j - 1).to_vec()));
                let k = cols.len();
                let fit = ols(&Matrix::from_columns(&cols).unwrap(), &d.response).unwrap();
                let bic = (fit.rss / n).ln() + k as f64 * n.ln() / n;
                if bic < best.0 {
                    best = (bic, lags);
                }
            }
            assert_eq!(got, best.1, "seed {seed}");
        }
    }

    #[test]
    fn bic_star_white_noise_selects_nothing() {
        let hits = (0..30)
            .filter(|&s| {
                let y = simulate_random_walk(3_000, 1.0, s).unwrap();
                exhaustive_bic_pattern(&y, 6, DetTerms::Const, true).unwrap().is_empty()
            })
            .count();
        assert!(hits >= 28, "{hits}/30");
    }
}
