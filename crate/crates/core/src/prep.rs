//! Deterministic-component adjustment, ADF design construction, least squares
//! and the Schwert maximum-lag rule.

use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, Qr};

/// `⌊12 (T/100)^{1/4}⌋`
pub fn schwert_pmax(t: usize) -> Result<usize> {
    if t < 4 {
        return Err(Error::InsufficientData {
            what: "Schwert lag rule",
            needed: 4,
            got: t,
        });
    }
    // the epsilon guards exact powers such as T = 1600 against round-down
    let p = (12.0 * (t as f64 / 100.0).powf(0.25) + 1e-9).floor() as usize;
    if p + 2 >= t {
        return Err(Error::InsufficientData {
            what: "Schwert lag rule",
            needed: p + 3,
            got: t,
        });
    }
    Ok(p)
}

/// Deterministic regressors included in a regression.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetTerms {
    #[default]
    None,
    Const,
    Trend,
}

impl DetTerms {
    pub fn count(self) -> usize {
        match self {
            DetTerms::None => 0,
            DetTerms::Const => 1,
            DetTerms::Trend => 2,
        }
    }

    /// Columns `1` and `t` evaluated at the given (1-based) time indices.
    pub fn columns(self, times: impl Iterator<Item = f64> + Clone) -> Vec<Vec<f64>> {
        match self {
            DetTerms::None => vec![],
            DetTerms::Const => vec![times.map(|_| 1.0).collect()],
            DetTerms::Trend => vec![times.clone().map(|_| 1.0).collect(), times.collect()],
        }
    }
}

/// Adjustment applied to a series before the ADF design is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetrendMode {
    /// No adjustment.
    #[default]
    None,
    /// Subtract the sample mean.
    OlsDemean,
    /// Residuals of a regression on `(1, t)`.
    OlsDetrend,
    /// `y_t - y_1`.
    FdDemean,
    /// `y_t - y_1 - β̂ (t - 1)` with `β̂` the mean first difference.
    FdDetrend,
    /// Quasi-difference (GLS) demeaning.
    QdDemean,
    /// Quasi-difference (GLS) detrending.
    QdDetrend,
}

impl DetrendMode {
    pub const ALL: [DetrendMode; 7] = [
        DetrendMode::None,
        DetrendMode::OlsDemean,
        DetrendMode::OlsDetrend,
        DetrendMode::FdDemean,
        DetrendMode::FdDetrend,
        DetrendMode::QdDemean,
        DetrendMode::QdDetrend,
    ];

    /// Whether the mode removes a linear trend.
    pub fn removes_trend(self) -> bool {
        matches!(
            self,
            DetrendMode::OlsDetrend | DetrendMode::FdDetrend | DetrendMode::QdDetrend
        )
    }

    /// Local-to-unity constant used by the quasi-difference modes.
    pub fn default_qd_cbar(self) -> Option<f64> {
        match self {
            DetrendMode::QdDemean => Some(-7.0),
            DetrendMode::QdDetrend => Some(-13.5),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DetrendMode::None => "none",
            DetrendMode::OlsDemean => "ols_demean",
            DetrendMode::OlsDetrend => "ols_detrend",
            DetrendMode::FdDemean => "fd_demean",
            DetrendMode::FdDetrend => "fd_detrend",
            DetrendMode::QdDemean => "qd_demean",
            DetrendMode::QdDetrend => "qd_detrend",
        }
    }
}

impl std::fmt::Display for DetrendMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DetrendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        DetrendMode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown detrending mode '{s}'")))
    }
}

/// Remove deterministic components from `y`.
pub fn detrend(y: &TimeSeries, mode: DetrendMode, qd_cbar: Option<f64>) -> Result<TimeSeries> {
    let v = y.values();
    let t = v.len();
    let min_len = match mode {
        DetrendMode::None => 1,
        DetrendMode::OlsDemean | DetrendMode::FdDemean | DetrendMode::QdDemean => 2,
        _ => 3,
    };
    if t < min_len {
        return Err(Error::InsufficientData {
            what: "detrending",
            needed: min_len,
            got: t,
        });
    }
    let out = match mode {
        DetrendMode::None => v.to_vec(),
        DetrendMode::OlsDemean => ols_residuals_on_det(v, DetTerms::Const)?,
        DetrendMode::OlsDetrend => ols_residuals_on_det(v, DetTerms::Trend)?,
        DetrendMode::FdDemean => v.iter().map(|x| x - v[0]).collect(),
        DetrendMode::FdDetrend => {
            let slope = (v[t - 1] - v[0]) / (t - 1) as f64;
            v.iter()
                .enumerate()
                .map(|(i, x)| x - v[0] - slope * i as f64)
                .collect()
        }
        DetrendMode::QdDemean | DetrendMode::QdDetrend => {
            let cbar = qd_cbar.ok_or_else(|| {
                Error::invalid(format!("{mode} requires a local-to-unity constant c̄"))
            })?;
            let det = if mode == DetrendMode::QdDemean {
                DetTerms::Const
            } else {
                DetTerms::Trend
            };
            qd_adjust(v, det, cbar)?
        }
    };
    Ok(y.map_values(out))
}

fn ols_residuals_on_det(v: &[f64], det: DetTerms) -> Result<Vec<f64>> {
    let t = v.len();
    let z = Matrix::from_columns(&det.columns((1..=t).map(|i| i as f64)))?;
    Ok(ols(&z, v)?.residuals)
}

/// GLS adjustment: regress the quasi-differenced series on the
/// quasi-differenced deterministic terms and subtract the fitted trend from
/// the levels.
fn qd_adjust(v: &[f64], det: DetTerms, cbar: f64) -> Result<Vec<f64>> {
    let t = v.len();
    let abar = 1.0 + cbar / t as f64;
    let quasi = |x: &[f64]| -> Vec<f64> {
        std::iter::once(x[0])
            .chain(x.windows(2).map(|w| w[1] - abar * w[0]))
            .collect()
    };
    let z = det.columns((1..=t).map(|i| i as f64));
    let zq: Vec<Vec<f64>> = z.iter().map(|c| quasi(c)).collect();
    let fit = ols(&Matrix::from_columns(&zq)?, &quasi(v))?;
    let zm = Matrix::from_columns(&z)?;
    let trend = zm.mul_vec(&fit.coefficients);
    Ok(v.iter().zip(&trend).map(|(a, b)| a - b).collect())
}

/// Regression design of the ADF(p) model
/// `Δy_t = d_t + ρ y_{t-1} + Σ_{j=1}^p δ_j Δy_{t-j} + ε_t`, `t = p+2..T`.
#[derive(Clone, Debug)]
pub struct AdfDesign {
    pub response: Vec<f64>,
    pub inference_col: Vec<f64>,
    pub lag_cols: Matrix,
    pub det_cols: Matrix,
    pub det: DetTerms,
    pub p: usize,
    pub t_eff: usize,
}

impl AdfDesign {
    /// Penalised block `[y_{t-1}, Δy_{t-1}, …, Δy_{t-p}]`.
    pub fn penalized(&self) -> Matrix {
        let inf = Matrix::from_columns(std::slice::from_ref(&self.inference_col))
            .expect("single column");
        inf.hcat(&self.lag_cols).expect("aligned rows")
    }

    /// `[y_{t-1}, Δy_{t-1}, …, Δy_{t-p}, d_t]`, the layout used by [`ols`] fits
    /// throughout the crate: coefficient 0 is `ρ`, `1..=p` are the `δ_j`.
    pub fn regressors(&self) -> Matrix {
        self.penalized().hcat(&self.det_cols).expect("aligned rows")
    }

    /// Number of regressors in [`AdfDesign::regressors`].
    pub fn ncols(&self) -> usize {
        1 + self.p + self.det.count()
    }
}

pub fn build_adf_design(y: &TimeSeries, p: usize, det: DetTerms) -> Result<AdfDesign> {
    let v = y.values();
    let t = v.len();
    let needed = p + 3 + det.count();
    if t < needed {
        return Err(Error::InsufficientData {
            what: "ADF design",
            needed,
            got: t,
        });
    }
    let rows = p + 1..t;
    let response: Vec<f64> = rows.clone().map(|i| v[i] - v[i - 1]).collect();
    let inference_col: Vec<f64> = rows.clone().map(|i| v[i - 1]).collect();
    let lags: Vec<Vec<f64>> = (1..=p)
        .map(|j| rows.clone().map(|i| v[i - j] - v[i - j - 1]).collect())
        .collect();
    let det_cols = det.columns(rows.clone().map(|i| (i + 1) as f64));
    Ok(AdfDesign {
        t_eff: response.len(),
        response,
        inference_col,
        lag_cols: if p > 0 {
            Matrix::from_columns(&lags)?
        } else {
            Matrix::zeros(t - 1, 0)
        },
        det_cols: if det.count() > 0 {
            Matrix::from_columns(&det_cols)?
        } else {
            Matrix::zeros(t - p - 1, 0)
        },
        det,
        p,
    })
}

/// Least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub rss: f64,
    /// `RSS / (n - k)`
    pub sigma2: f64,
}

/// Least squares via Householder QR.
pub fn ols(x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    let (n, k) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::invalid(format!(
            "response length {} does not match {} design rows",
            y.len(),
            n
        )));
    }
    if n <= k {
        return Err(Error::InsufficientData {
            what: "least squares",
            needed: k + 1,
            got: n,
        });
    }
    let qr = Qr::new(x)?;
    let qty = qr.qt_mul(y);
    let coefficients = qr.solve_prefix(&qty, k);
    let fitted = x.mul_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss = dot(&residuals, &residuals);
    let sigma2 = rss / (n - k) as f64;
    let std_errors: Vec<f64> = qr
        .inv_gram_diag(k)
        .into_iter()
        .map(|d| (sigma2 * d).sqrt())
        .collect();
    let t_stats = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    Ok(OlsFit {
        coefficients,
        residuals,
        std_errors,
        t_stats,
        rss,
        sigma2,
    })
}

/// Least squares for every leading block of columns of one design, sharing a
/// single factorisation: `prefix(m)` fits the regression on columns `0..m`.
pub struct NestedLeastSquares {
    qr: Qr,
    qty: Vec<f64>,
}

impl NestedLeastSquares {
    pub fn new(x: &Matrix, y: &[f64]) -> Result<Self> {
        if x.rows() <= x.cols() {
            return Err(Error::InsufficientData {
                what: "least squares",
                needed: x.cols() + 1,
                got: x.rows(),
            });
        }
        let qr = Qr::new(x)?;
        let qty = qr.qt_mul(y);
        Ok(Self { qr, qty })
    }

    pub fn rss(&self, m: usize) -> f64 {
        self.qty[m..].iter().map(|v| v * v).sum()
    }

    pub fn coefficients(&self, m: usize) -> Vec<f64> {
        self.qr.solve_prefix(&self.qty, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{add_deterministic, simulate_adf_dgp, simulate_ar1, AdfDgpSpec};
    use rand::Rng;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn schwert_rule_matches_reported_orders() {
        assert_eq!(schwert_pmax(100).unwrap(), 12);
        assert_eq!(schwert_pmax(25).unwrap(), 8);
        assert_eq!(schwert_pmax(150).unwrap(), 13);
        assert_eq!(schwert_pmax(81).unwrap(), 11);
        assert_eq!(schwert_pmax(1600).unwrap(), 24);
        assert!(schwert_pmax(3).is_err());
        assert!(schwert_pmax(8).is_err());
    }

    #[test]
    fn detrend_identity_and_constants() {
        let y = ts(&[1.0, 4.0, 2.0]);
        assert_eq!(detrend(&y, DetrendMode::None, None).unwrap(), y);
        let c = ts(&[3.0; 6]);
        let d = detrend(&c, DetrendMode::OlsDemean, None).unwrap();
        assert!(d.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn fd_detrend_removes_linear_trend() {
        let x = ts(&[0.0; 20]);
        let y = add_deterministic(&x, &[2.0, 0.5]).unwrap();
        let d = detrend(&y, DetrendMode::FdDetrend, None).unwrap();
        assert!(d.values().iter().all(|v| v.abs() < 1e-12));
        let d = detrend(&y, DetrendMode::OlsDetrend, None).unwrap();
        assert!(d.values().iter().all(|v| v.abs() < 1e-10));
        let d = detrend(&y, DetrendMode::QdDetrend, Some(-13.5)).unwrap();
        assert!(d.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn qd_modes_require_cbar() {
        let y = ts(&[1.0, 2.0, 0.5, 3.0]);
        assert!(detrend(&y, DetrendMode::QdDemean, None).is_err());
        assert!(detrend(&y, DetrendMode::QdDemean, Some(-7.0)).is_ok());
    }

    #[test]
    fn ols_detrend_is_idempotent() {
        let y = simulate_ar1(1.0, 80, 1.0, 4).unwrap();
        for mode in [DetrendMode::OlsDemean, DetrendMode::OlsDetrend] {
            let once = detrend(&y, mode, None).unwrap();
            let twice = detrend(&once, mode, None).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("fd-demean".parse::<DetrendMode>().unwrap(), DetrendMode::FdDemean);
        assert_eq!("QD_DETREND".parse::<DetrendMode>().unwrap(), DetrendMode::QdDetrend);
        assert!("bogus".parse::<DetrendMode>().is_err());
    }

    #[test]
    fn design_small_example() {
        let d = build_adf_design(&ts(&[1.0, 2.0, 3.0, 4.0]), 0, DetTerms::None).unwrap();
        assert_eq!(d.response, vec![1.0, 1.0, 1.0]);
        assert_eq!(d.inference_col, vec![1.0, 2.0, 3.0]);
        assert_eq!(d.t_eff, 3);
    }

    #[test]
    fn design_alignment() {
        let v: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let d = build_adf_design(&ts(&v), 2, DetTerms::Trend).unwrap();
        assert_eq!(d.t_eff, 7);
        // first row refers to t = 4 (1-based): Δy_4 = 9 - 4, y_3 = 4, Δy_3 = 3, Δy_2 = 1
        assert_eq!(d.response[0], 5.0);
        assert_eq!(d.inference_col[0], 4.0);
        assert_eq!(d.lag_cols[(0, 0)], 3.0);
        assert_eq!(d.lag_cols[(0, 1)], 1.0);
        assert_eq!(d.det_cols[(0, 1)], 4.0);
        let y = simulate_ar1(1.0, 100, 1.0, 1).unwrap();
        assert_eq!(build_adf_design(&y, 2, DetTerms::None).unwrap().t_eff, 97);
        assert!(build_adf_design(&ts(&[1.0, 2.0, 3.0]), 1, DetTerms::None).is_err());
    }

    #[test]
    fn ols_mean_and_exact_fit() {
        let ones = Matrix::from_columns(&[vec![1.0; 3]]).unwrap();
        let fit = ols(&ones, &[1.0, 2.0, 3.0]).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-14);

        let x = Matrix::from_columns(&[vec![1.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        let y = x.mul_vec(&[0.5, -2.0]);
        let fit = ols(&x, &y).unwrap();
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn ols_matches_normal_equations_oracle() {
        let mut rng = crate::rng::rng_from_seed(99);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..50).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let x = Matrix::from_columns(&cols).unwrap();
        let y: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let fit = ols(&x, &y).unwrap();

        // Gaussian elimination on X'X b = X'y
        let mut a = [[0.0f64; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = dot(&cols[i], &cols[j]);
            }
            a[i][3] = dot(&cols[i], &y);
        }
        for p in 0..3 {
            for r in p + 1..3 {
                let f = a[r][p] / a[p][p];
                for c in p..4 {
                    a[r][c] -= f * a[p][c];
                }
            }
        }
        let mut b = [0.0; 3];
        for i in (0..3).rev() {
            b[i] = (a[i][3] - (i + 1..3).map(|j| a[i][j] * b[j]).sum::<f64>()) / a[i][i];
        }
        for i in 0..3 {
            assert!((fit.coefficients[i] - b[i]).abs() < 1e-10);
        }
        let norm_y = dot(&y, &y).sqrt();
        for c in &cols {
            assert!(dot(c, &fit.residuals).abs() < 1e-8 * norm_y);
        }
    }

    #[test]
    fn ols_reports_collinear_column() {
        let x = Matrix::from_columns(&[
            vec![1.0, 2.0, 3.0, 5.0],
            vec![2.0, 4.0, 6.0, 10.0],
        ])
        .unwrap();
        assert!(matches!(
            ols(&x, &[1.0, 0.0, 1.0, 0.0]),
            Err(Error::RankDeficient { column: 1 })
        ));
    }

    #[test]
    fn nested_least_squares_matches_direct_fits() {
        let y = simulate_ar1(0.8, 120, 1.0, 8).unwrap();
        let d = build_adf_design(&y, 4, DetTerms::Const).unwrap();
        let x = d.regressors();
        let nested = NestedLeastSquares::new(&x, &d.response).unwrap();
        for m in 1..=x.cols() {
            let idx: Vec<usize> = (0..m).collect();
            let direct = ols(&x.select_columns(&idx), &d.response).unwrap();
            assert!((nested.rss(m) - direct.rss).abs() < 1e-9 * direct.rss);
            for (a, b) in nested.coefficients(m).iter().zip(&direct.coefficients) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn adf_ols_recovers_dgp_coefficients() {
        let spec = AdfDgpSpec::new(-0.05, vec![0.4, 0.3, 0.2], 100_000);
        assert!(spec.roots_admissible());
        let y = simulate_adf_dgp(&spec, 2024).unwrap();
        let d = build_adf_design(&y, 3, DetTerms::None).unwrap();
        let fit = ols(&d.regressors(), &d.response).unwrap();
        let truth = [-0.05, 0.4, 0.3, 0.2];
        for (b, t) in fit.coefficients.iter().zip(truth) {
            assert!((b - t).abs() < 0.01, "{b} vs {t}");
        }
    }

    #[test]
    fn adf_ols_error_shrinks_with_t() {
        let spec = |t| AdfDgpSpec::new(-0.1, vec![0.5], t);
        let err = |t: usize| -> f64 {
            (0..20)
                .map(|s| {
                    let y = simulate_adf_dgp(&spec(t), s).unwrap();
                    let d = build_adf_design(&y, 1, DetTerms::None).unwrap();
                    let b = ols(&d.regressors(), &d.response).unwrap().coefficients;
                    (b[0] + 0.1).abs() + (b[1] - 0.5).abs()
                })
                .sum::<f64>()
                / 20.0
        };
        assert!(spec(1000).roots_admissible());
        assert!(err(10_000) < err(1_000));
    }
}
