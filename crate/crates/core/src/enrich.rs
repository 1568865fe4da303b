//! Penalty weights: OLS-based adaptive weights, the spurious-regression
//! statistic `J_α`, and the information-enriched weight for `y_{t-1}`.

use serde::{Deserialize, Serialize};

use crate::dgp::{fill_random_walk, TimeSeries};
use crate::error::{Error, Result, Stage, StageExt};
use crate::lrv::{lrv_with_selection, LrvSpec};
use crate::prep::{build_adf_design, detrend, ols, DetTerms, DetrendMode};
use crate::rng::{rng_for, streams};
use crate::stats::quantile_sorted;

/// Penalty factor of a coefficient that must never enter the model.
pub const NEVER_ACTIVATE: f64 = f64::INFINITY;

/// Settings of the simulated inter-quantile range `J_α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JSpec {
    pub alpha: f64,
    pub sigma_v: f64,
    #[serde(rename = "R", alias = "r")]
    pub r: usize,
    pub seed: u64,
}

impl Default for JSpec {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            sigma_v: 1.0,
            r: 150,
            seed: 0,
        }
    }
}

impl JSpec {
    /// Defaults for the trend-adjusted statistic (`σ_v = .75`).
    pub fn trend_default() -> Self {
        Self {
            sigma_v: 0.75,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.sigma_v > 0.0 && self.sigma_v.is_finite()) {
            return Err(Error::invalid(format!("sigma_v must be positive, got {}", self.sigma_v)));
        }
        if self.r < 10 {
            return Err(Error::invalid(format!(
                "J needs at least 10 simulated regressions, got R = {}",
                self.r
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "PL", alias = "pl")]
    Pl,
    #[serde(rename = "AL", alias = "al")]
    Al,
    #[serde(rename = "ALIE", alias = "alie")]
    Alie,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Pl, Estimator::Al, Estimator::Alie];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Pl => "PL",
            Estimator::Al => "AL",
            Estimator::Alie => "ALIE",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pl" => Ok(Estimator::Pl),
            "al" => Ok(Estimator::Al),
            "alie" => Ok(Estimator::Alie),
            other => Err(Error::invalid(format!("unknown estimator '{other}'"))),
        }
    }
}

/// How penalty factors are formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub estimator: Estimator,
    #[serde(default = "one")]
    pub gamma1: f64,
    #[serde(default = "one")]
    pub gamma2: f64,
    #[serde(default)]
    pub j_spec: Option<JSpec>,
    #[serde(default)]
    pub lrv_spec: Option<LrvSpec>,
}

fn one() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn pl() -> Self {
        Self {
            estimator: Estimator::Pl,
            gamma1: 1.0,
            gamma2: 1.0,
            j_spec: None,
            lrv_spec: None,
        }
    }

    pub fn al() -> Self {
        Self {
            estimator: Estimator::Al,
            ..Self::pl()
        }
    }

    pub fn alie(j_spec: JSpec, lrv_spec: LrvSpec) -> Self {
        Self {
            estimator: Estimator::Alie,
            j_spec: Some(j_spec),
            lrv_spec: Some(lrv_spec),
            ..Self::pl()
        }
    }

    /// Specification for `estimator` with the default exponents, `J` and LRV settings.
    pub fn for_estimator(estimator: Estimator, j_spec: JSpec, lrv_spec: LrvSpec) -> Self {
        match estimator {
            Estimator::Pl => Self::pl(),
            Estimator::Al => Self::al(),
            Estimator::Alie => Self::alie(j_spec, lrv_spec),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.estimator == Estimator::Pl {
            return Ok(());
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {g}")));
            }
        }
        if self.estimator == Estimator::Alie {
            let j = self
                .j_spec
                .as_ref()
                .ok_or_else(|| Error::invalid("ALIE requires a J specification"))?;
            j.validate()?;
            self.lrv_spec
                .as_ref()
                .ok_or_else(|| Error::invalid("ALIE requires a long-run variance specification"))?
                .validate()?;
        }
        Ok(())
    }
}

/// Residuals of a regression on `(1, t)`, in place.
fn remove_linear_trend(x: &mut [f64]) {
    let n = x.len() as f64;
    let tbar = (n + 1.0) / 2.0;
    let stt = n * (n * n - 1.0) / 12.0;
    let xbar = x.iter().sum::<f64>() / n;
    let stx: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64 + 1.0 - tbar) * v)
        .sum();
    let slope = stx / stt;
    for (i, v) in x.iter_mut().enumerate() {
        *v -= xbar + slope * (i as f64 + 1.0 - tbar);
    }
}

/// Simulated slope estimates `ζ̂^{(r)}`, `r = 0..R`, in replication order.
pub fn spurious_slopes(y_scaled: &TimeSeries, spec: &JSpec, trend: bool) -> Result<Vec<f64>> {
    spec.validate()?;
    let t = y_scaled.len();
    if trend && t < 3 {
        return Err(Error::InsufficientData {
            what: "trend-adjusted J",
            needed: 3,
            got: t,
        });
    }
    let mut y = y_scaled.values().to_vec();
    if trend {
        remove_linear_trend(&mut y);
    }
    let mut q = vec![0.0; t];
    let slopes = (0..spec.r)
        .map(|r| {
            let mut rng = rng_for(spec.seed, &[streams::J_ALPHA, r as u64]);
            fill_random_walk(&mut rng, spec.sigma_v, &mut q);
            if trend {
                remove_linear_trend(&mut q);
            }
            let (qy, qq) = q
                .iter()
                .zip(&y)
                .fold((0.0, 0.0), |(a, b), (qv, yv)| (a + qv * yv, b + qv * qv));
            qy / qq
        })
        .collect();
    Ok(slopes)
}

/// `J_α = |ζ̂_{1−α/2} − ζ̂_{α/2}|` over `R` regressions of `y_scaled` on
/// independent random walks.
pub fn j_statistic(y_scaled: &TimeSeries, spec: &JSpec, trend: bool) -> Result<f64> {
    let mut z = spurious_slopes(y_scaled, spec, trend)?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite simulated slope".into()));
    }
    z.sort_by(f64::total_cmp);
    let a = spec.alpha / 2.0;
    Ok((quantile_sorted(&z, 1.0 - a) - quantile_sorted(&z, a)).abs())
}

/// Penalty factor for `y_{t-1}` together with the quantities it was built from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InferenceWeight {
    pub factor: f64,
    pub rho_hat: Option<f64>,
    pub j: Option<f64>,
    pub omega2: Option<f64>,
    pub lrv_lag: Option<usize>,
}

/// Penalty factor for the inference regressor.
///
/// Without trend removal the OLS estimate comes from the ADF(p) regression
/// on the adjusted series. Trend-removing modes use the trend-augmented ADF
/// regression on the raw series, a trend-augmented LRV regression, and the
/// trend-adjusted `J`.
pub fn weight_inference(
    y: &TimeSeries,
    spec: &WeightSpec,
    det: DetrendMode,
    p: usize,
) -> Result<InferenceWeight> {
    spec.validate()?;
    if spec.estimator == Estimator::Pl {
        return Ok(InferenceWeight {
            factor: 1.0,
            rho_hat: None,
            j: None,
            omega2: None,
            lrv_lag: None,
        });
    }
    let trend = det.removes_trend();
    let (series, adf_det) = if trend {
        (y.clone(), DetTerms::Trend)
    } else {
        (
            detrend(y, det, det.default_qd_cbar()).stage(Stage::Detrend)?,
            DetTerms::None,
        )
    };
    let design = build_adf_design(&series, p, adf_det).stage(Stage::Design)?;
    let rho_hat = ols(&design.regressors(), &design.response)
        .stage(Stage::InitialFit)?
        .coefficients[0];
    inference_factor(&series, rho_hat, spec, trend)
}

/// Factor for a given OLS estimate `rho_hat`; `series` is the sample on
/// which the long-run variance and `J` are computed.
pub(crate) fn inference_factor(
    series: &TimeSeries,
    rho_hat: f64,
    spec: &WeightSpec,
    trend: bool,
) -> Result<InferenceWeight> {
    let mut out = InferenceWeight {
        factor: 1.0,
        rho_hat: Some(rho_hat),
        j: None,
        omega2: None,
        lrv_lag: None,
    };
    match spec.estimator {
        Estimator::Pl => {
            out.rho_hat = None;
            return Ok(out);
        }
        Estimator::Al => {
            out.factor = if rho_hat == 0.0 {
                NEVER_ACTIVATE
            } else {
                rho_hat.abs().powf(-spec.gamma1)
            };
            return Ok(out);
        }
        Estimator::Alie => {}
    }
    let mut lrv = spec.lrv_spec.clone().expect("validated");
    if trend {
        lrv.det = DetTerms::Trend;
    }
    let (k, omega2) = lrv_with_selection(series, &lrv).stage(Stage::LongRunVariance)?;
    let omega = omega2.sqrt();
    let scaled = series.map_values(series.values().iter().map(|v| v / omega).collect());
    let j = j_statistic(&scaled, spec.j_spec.as_ref().expect("validated"), trend)
        .stage(Stage::Weights)?;
    if j == 0.0 {
        return Err(Error::Degenerate("J statistic is zero".into())).stage(Stage::Weights);
    }
    out.j = Some(j);
    out.omega2 = Some(omega2);
    out.lrv_lag = Some(k);
    out.factor = if rho_hat == 0.0 {
        NEVER_ACTIVATE
    } else {
        (rho_hat / j).abs().powf(-spec.gamma1)
    };
    Ok(out)
}

/// `|δ̂_j|^{−γ₂}`, exact zeros mapped to [`NEVER_ACTIVATE`].
pub fn weights_lags(delta_hats: &[f64], gamma2: f64) -> Result<Vec<f64>> {
    if !(gamma2 > 0.0 && gamma2.is_finite()) {
        return Err(Error::invalid(format!("gamma2 must be positive, got {gamma2}")));
    }
    Ok(delta_hats
        .iter()
        .map(|d| {
            if *d == 0.0 {
                NEVER_ACTIVATE
            } else {
                d.abs().powf(-gamma2)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate_ar1, simulate_random_walk};
    use crate::lrv::lrv_ar;
    use crate::stats::median;
    use proptest::prelude::*;

    fn scaled(y: &TimeSeries) -> TimeSeries {
        let w = lrv_ar(y, 0, DetTerms::None).unwrap().sqrt();
        TimeSeries::new(y.values().iter().map(|v| v / w).collect()).unwrap()
    }

    #[test]
    fn lag_weights() {
        assert_eq!(weights_lags(&[0.5], 1.0).unwrap(), vec![2.0]);
        assert_eq!(weights_lags(&[1.0, -1.0], 2.0).unwrap(), vec![1.0, 1.0]);
        assert!(weights_lags(&[0.3], 0.0).is_err());
        assert_eq!(weights_lags(&[0.0], 1.0).unwrap()[0], NEVER_ACTIVATE);
    }

    #[test]
    fn jspec_rejects_small_r() {
        let y = simulate_random_walk(50, 1.0, 1).unwrap();
        let spec = JSpec {
            r: 9,
            ..JSpec::default()
        };
        assert!(j_statistic(&y, &spec, false).is_err());
    }

    #[test]
    fn j_collapses_as_alpha_tends_to_one() {
        let y = scaled(&simulate_random_walk(100, 1.0, 3).unwrap());
        let spec = JSpec {
            alpha: 0.999,
            ..JSpec::default()
        };
        let wide = j_statistic(&y, &JSpec::default(), false).unwrap();
        let j = j_statistic(&y, &spec, false).unwrap();
        assert!(j < 0.01 * wide, "{j} vs {wide}");
    }

    #[test]
    fn j_is_deterministic_and_trend_variant_differs() {
        let y = scaled(&simulate_random_walk(100, 1.0, 3).unwrap());
        let spec = JSpec::default().with_seed(11);
        let a = j_statistic(&y, &spec, false).unwrap();
        assert_eq!(a, j_statistic(&y, &spec, false).unwrap());
        assert_ne!(a, j_statistic(&y, &spec, true).unwrap());
        assert_ne!(a, j_statistic(&y, &spec.clone().with_seed(12), false).unwrap());
    }

    #[test]
    fn random_walk_j_has_mass_above_one() {
        let js: Vec<f64> = (0..300)
            .map(|s| {
                let y = scaled(&simulate_random_walk(100, 1.0, s).unwrap());
                j_statistic(&y, &JSpec::default().with_seed(1000 + s), false).unwrap()
            })
            .collect();
        let above = js.iter().filter(|j| **j > 1.0).count() as f64 / js.len() as f64;
        assert!(above > 0.25, "{above}");
    }

    #[test]
    fn stationary_j_halves_when_t_doubles() {
        let med = |t: usize| {
            let js: Vec<f64> = (0..200)
                .map(|s| {
                    let y = scaled(&simulate_ar1(0.9, t, 1.0, s).unwrap());
                    j_statistic(&y, &JSpec::default().with_seed(5000 + s), false).unwrap()
                })
                .collect();
            median(&js)
        };
        let ratio = med(400) / med(800);
        assert!((ratio - 2.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn pl_weight_is_one() {
        let y = simulate_random_walk(60, 1.0, 2).unwrap();
        let w = weight_inference(&y, &WeightSpec::pl(), DetrendMode::None, 3).unwrap();
        assert_eq!(w.factor, 1.0);
    }

    #[test]
    fn al_and_alie_weights_follow_definitions() {
        let y = simulate_ar1(0.8, 200, 1.0, 4).unwrap();
        let al = weight_inference(&y, &WeightSpec::al(), DetrendMode::None, 2).unwrap();
        let rho = al.rho_hat.unwrap();
        assert!((al.factor - 1.0 / rho.abs()).abs() < 1e-12 * al.factor);

        let spec = WeightSpec::alie(JSpec::default().with_seed(3), LrvSpec::fixed(0));
        let alie = weight_inference(&y, &spec, DetrendMode::None, 2).unwrap();
        assert_eq!(alie.rho_hat, Some(rho));
        let j = alie.j.unwrap();
        assert!((alie.factor - j / rho.abs()).abs() < 1e-12 * alie.factor);
    }

    #[test]
    fn alie_requires_specs() {
        let spec = WeightSpec {
            j_spec: None,
            ..WeightSpec::alie(JSpec::default(), LrvSpec::default())
        };
        assert!(spec.validate().is_err());
        let spec = WeightSpec {
            gamma1: 0.0,
            ..WeightSpec::al()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn trend_modes_use_trend_regression() {
        let y = crate::dgp::add_deterministic(&simulate_ar1(0.5, 150, 1.0, 8).unwrap(), &[1.0, 0.2])
            .unwrap();
        let spec = WeightSpec::alie(JSpec::trend_default(), LrvSpec::default());
        let w = weight_inference(&y, &spec, DetrendMode::FdDetrend, 4).unwrap();
        let d = build_adf_design(&y, 4, DetTerms::Trend).unwrap();
        let rho = ols(&d.regressors(), &d.response).unwrap().coefficients[0];
        assert_eq!(w.rho_hat, Some(rho));
        assert!(w.factor.is_finite() && w.factor > 0.0);
    }

    #[test]
    fn linear_trend_removal_matches_ols() {
        let x: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 + 0.3 * i as f64).collect();
        let mut fast = x.clone();
        remove_linear_trend(&mut fast);
        let slow = detrend(&TimeSeries::new(x).unwrap(), DetrendMode::OlsDetrend, None).unwrap();
        for (a, b) in fast.iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn j_is_scale_equivariant(seed in 0u64..500, c in 0.05f64..50.0, trend: bool) {
            let y = simulate_ar1(0.95, 80, 1.0, seed).unwrap();
            let yc = TimeSeries::new(y.values().iter().map(|v| v * c).collect()).unwrap();
            let spec = JSpec::default().with_seed(seed);
            let a = j_statistic(&scaled(&y), &spec, trend).unwrap();
            let b = j_statistic(&scaled(&yc), &spec, trend).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
        }
    }
}
