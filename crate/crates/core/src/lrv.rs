//! Long-run variance via the autoregressive spectral density at frequency
//! zero, with information-criterion lag selection.

use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeries;
use crate::error::{Error, Result};
use crate::prep::{build_adf_design, ols, schwert_pmax, DetTerms, NestedLeastSquares};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Bic,
    Aic,
    Mbic,
    Maic,
    Fixed,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Bic => "bic",
            Criterion::Aic => "aic",
            Criterion::Mbic => "mbic",
            Criterion::Maic => "maic",
            Criterion::Fixed => "fixed",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bic" => Ok(Criterion::Bic),
            "aic" => Ok(Criterion::Aic),
            "mbic" => Ok(Criterion::Mbic),
            "maic" => Ok(Criterion::Maic),
            "fixed" => Ok(Criterion::Fixed),
            other => Err(Error::invalid(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Lag selection rule for the autoregressive long-run variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrvSpec {
    pub criterion: Criterion,
    #[serde(default)]
    pub k_fixed: Option<usize>,
    /// Largest lag searched; `None` uses the Schwert rule for the sample at hand.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub det: DetTerms,
}

impl Default for LrvSpec {
    fn default() -> Self {
        Self {
            criterion: Criterion::Bic,
            k_fixed: None,
            k_max: None,
            det: DetTerms::None,
        }
    }
}

impl LrvSpec {
    pub fn fixed(k: usize) -> Self {
        Self {
            criterion: Criterion::Fixed,
            k_fixed: Some(k),
            ..Self::default()
        }
    }

    pub fn with_criterion(criterion: Criterion) -> Self {
        Self {
            criterion,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.criterion, self.k_fixed) {
            (Criterion::Fixed, None) => {
                return Err(Error::invalid("fixed lag criterion requires k_fixed"))
            }
            (c, Some(_)) if c != Criterion::Fixed => {
                return Err(Error::invalid(format!(
                    "k_fixed is only meaningful for the fixed criterion, not {}",
                    c.as_str()
                )))
            }
            _ => {}
        }
        if let (Some(k), Some(kmax)) = (self.k_fixed, self.k_max) {
            if k > kmax {
                return Err(Error::invalid(format!("k_fixed = {k} exceeds k_max = {kmax}")));
            }
        }
        Ok(())
    }
}

fn sigma2_denominator(t: usize, k: usize, det: DetTerms) -> usize {
    match det {
        DetTerms::Trend => t - k - 2,
        _ => t - k,
    }
}

/// `ω̂² = σ̂²_k / (1 − Σ δ̂_j)²` from an ADF(k) regression on `y`.
pub fn lrv_ar(y: &TimeSeries, k: usize, det: DetTerms) -> Result<f64> {
    let design = build_adf_design(y, k, det)?;
    let fit = ols(&design.regressors(), &design.response)?;
    let sigma2 = fit.rss / sigma2_denominator(y.len(), k, det) as f64;
    let denom = 1.0 - fit.coefficients[1..=k].iter().sum::<f64>();
    if denom.abs() < 1e-8 {
        return Err(Error::UnstableLongRun { denominator: denom });
    }
    let omega2 = sigma2 / (denom * denom);
    if !(omega2 > 0.0 && omega2.is_finite()) {
        return Err(Error::Degenerate(format!(
            "long-run variance estimate {omega2} is not positive"
        )));
    }
    Ok(omega2)
}

/// Lag order selected by `spec.criterion` over `0..=k_max`, every candidate
/// evaluated on the common sample of the ADF(k_max) regression.
pub fn select_lag_ic(y: &TimeSeries, spec: &LrvSpec) -> Result<usize> {
    spec.validate()?;
    if spec.criterion == Criterion::Fixed {
        return Ok(spec.k_fixed.expect("validated"));
    }
    let t = y.len();
    let k_max = match spec.k_max {
        Some(k) => k,
        None => schwert_pmax(t)?,
    };
    if 2 * k_max >= t {
        return Err(Error::invalid(format!(
            "k_max = {k_max} must be below T/2 = {}",
            t as f64 / 2.0
        )));
    }
    let design = build_adf_design(y, k_max, spec.det)?;
    let ndet = spec.det.count();
    // prefix order: deterministic terms, y_{t-1}, then lags 1..k_max
    let x = design.det_cols.hcat(&design.penalized())?;
    let nested = NestedLeastSquares::new(&x, &design.response)?;

    let n_eff = (t - k_max) as f64;
    let c_t = match spec.criterion {
        Criterion::Bic | Criterion::Mbic => (t as f64).ln(),
        _ => 2.0,
    };
    let modified = matches!(spec.criterion, Criterion::Mbic | Criterion::Maic);
    let sum_y2: f64 = design.inference_col.iter().map(|v| v * v).sum();

    let mut best = (f64::INFINITY, 0usize);
    for k in 0..=k_max {
        let m = ndet + 1 + k;
        let s2 = nested.rss(m) / n_eff;
        let tau = if modified {
            let rho = nested.coefficients(m)[ndet];
            rho * rho * sum_y2 / s2
        } else {
            0.0
        };
        let ic = s2.ln() + c_t * (tau + k as f64) / n_eff;
        if ic < best.0 {
            best = (ic, k);
        }
    }
    Ok(best.1)
}

/// Lag selection followed by [`lrv_ar`]; returns `(k̂, ω̂²)`.
pub fn lrv_with_selection(y: &TimeSeries, spec: &LrvSpec) -> Result<(usize, f64)> {
    let k = select_lag_ic(y, spec)?;
    Ok((k, lrv_ar(y, k, spec.det)?))
}
