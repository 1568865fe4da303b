//! Univariate zero-mean model `x = μ + ε`, `z_j = μ + ν_j`, where the
//! adaptive-Lasso estimate of `μ` has a closed form and the activation
//! probability under `μ = 0` can be simulated directly.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, streams, SimRng};
use crate::stats::binomial_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroMeanSpec {
    pub sigma_eps: f64,
    /// One standard deviation per enriching statistic; empty for the plain estimator.
    pub sigma_nu: Vec<f64>,
    pub gamma: f64,
    /// Draws per replication. With `n = 1` the enrichers are the raw `z_j`;
    /// otherwise each enricher is the t-statistic of the `z_j` sample.
    pub n: usize,
    /// `corr(ε, ν)`, only for a single enricher.
    #[serde(default)]
    pub corr_eps_nu: Option<f64>,
}

impl ZeroMeanSpec {
    /// `q` independent standard Gaussian enrichers, one draw each.
    pub fn standard(q: usize, gamma: f64) -> Self {
        Self {
            sigma_eps: 1.0,
            sigma_nu: vec![1.0; q],
            gamma,
            n: 1,
            corr_eps_nu: None,
        }
    }

    /// Single correlated t-statistic enricher over 50 draws.
    pub fn correlated_t_design() -> Self {
        Self {
            sigma_eps: 1.0,
            sigma_nu: vec![2.0],
            gamma: 1.0,
            n: 50,
            corr_eps_nu: Some(0.2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_eps > 0.0) || self.sigma_nu.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("standard deviations must be positive"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma must be positive"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if let Some(r) = self.corr_eps_nu {
            if self.sigma_nu.len() != 1 {
                return Err(Error::invalid("a correlation needs exactly one enricher"));
            }
            if !(r > -1.0 && r < 1.0) {
                return Err(Error::invalid("correlation must lie in (-1, 1)"));
            }
        }
        if self.n == 1 && self.corr_eps_nu.is_some() {
            return Err(Error::invalid("correlated enrichers need n > 1"));
        }
        Ok(())
    }
}

/// `μ̂ = sign(x) max(|x| − λ w^γ, 0)` with `w = |1/(x Π z_j)|`
/// (plain estimator when `z` is empty).
pub fn zero_mean_estimate(x: f64, z: &[f64], gamma: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let w = 1.0 / (x * z.iter().product::<f64>()).abs();
    let thr = if lambda == 0.0 { 0.0 } else { lambda * w.powf(gamma) };
    Ok(x.signum() * (x.abs() - thr).max(0.0))
}

/// Smallest `λ` at which the estimate is zero: `|x Π z|^γ |x|`.
pub fn activation_threshold(x: f64, z: &[f64], gamma: f64) -> f64 {
    (x * z.iter().product::<f64>()).abs().powf(gamma) * x.abs()
}

/// Distribution of the exogenous tuning parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSampler {
    Fixed { value: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Empirical { values: Vec<f64> },
}

impl LambdaSampler {
    pub fn draw(&self, rng: &mut SimRng) -> Result<f64> {
        match self {
            LambdaSampler::Fixed { value } => Ok(*value),
            LambdaSampler::LogNormal { mu, sigma } => Ok(LogNormal::new(*mu, *sigma)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(rng)),
            LambdaSampler::Empirical { values } => {
                if values.is_empty() {
                    return Err(Error::invalid("empirical sampler has no values"));
                }
                Ok(values[rng.random_range(0..values.len())])
            }
        }
    }
}

/// Simulated activation thresholds under `μ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub plain: Vec<f64>,
    pub enriched: Vec<f64>,
}

fn normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

/// `(x̄, enrichers)` for one replication.
fn draw_statistics(spec: &ZeroMeanSpec, rng: &mut SimRng) -> (f64, Vec<f64>) {
    let n = spec.n;
    let q = spec.sigma_nu.len();
    if n == 1 {
        let x = spec.sigma_eps * normal(rng);
        let z = spec.sigma_nu.iter().map(|s| s * normal(rng)).collect();
        return (x, z);
    }
    let r = spec.corr_eps_nu.unwrap_or(0.0);
    let c = (1.0 - r * r).sqrt();
    let mut sx = 0.0;
    let mut sz = vec![0.0; q];
    let mut szz = vec![0.0; q];
    for _ in 0..n {
        let e = normal(rng);
        sx += spec.sigma_eps * e;
        for j in 0..q {
            let nu = if j == 0 {
                spec.sigma_nu[0] * (r * e + c * normal(rng))
            } else {
                spec.sigma_nu[j] * normal(rng)
            };
            sz[j] += nu;
            szz[j] += nu * nu;
        }
    }
    let nf = n as f64;
    let z = (0..q)
        .map(|j| {
            let m = sz[j] / nf;
            let var = (szz[j] - nf * m * m) / (nf - 1.0);
            m / (var / nf).sqrt()
        })
        .collect();
    (sx / nf, z)
}

pub fn simulate_thresholds(spec: &ZeroMeanSpec, reps: usize, seed: u64) -> Result<Thresholds> {
    spec.validate()?;
    let mut out = Thresholds {
        plain: Vec::with_capacity(reps),
        enriched: Vec::with_capacity(reps),
    };
    for r in 0..reps {
        let mut rng = rng_for(seed, &[streams::ZERO_MEAN, r as u64]);
        let (x, z) = draw_statistics(spec, &mut rng);
        out.plain.push(activation_threshold(x, &[], spec.gamma));
        out.enriched.push(activation_threshold(x, &z, spec.gamma));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivationPoint {
    /// Tuning value; `None` when `λ` was drawn from a distribution.
    pub lambda: Option<f64>,
    pub plain: f64,
    pub plain_se: f64,
    pub enriched: f64,
    pub enriched_se: f64,
}

fn point(lambda: Option<f64>, plain_hits: usize, enriched_hits: usize, reps: usize) -> ActivationPoint {
    let p = plain_hits as f64 / reps as f64;
    let e = enriched_hits as f64 / reps as f64;
    ActivationPoint {
        lambda,
        plain: p,
        plain_se: binomial_se(p, reps),
        enriched: e,
        enriched_se: binomial_se(e, reps),
    }
}

/// `P(μ̂ ≠ 0)` for the plain and enriched estimators with `λ ~ lambda_dist`.
pub fn activation_curve(
    spec: &ZeroMeanSpec,
    lambda_dist: &LambdaSampler,
    reps: usize,
    seed: u64,
) -> Result<ActivationPoint> {
    if reps == 0 {
        return Err(Error::invalid("reps must be positive"));
    }
    let th = simulate_thresholds(spec, reps, seed)?;
    let (mut hp, mut he) = (0, 0);
    for r in 0..reps {
        let mut rng = rng_for(seed, &[streams::LAMBDA_IC, r as u64]);
        let lam = lambda_dist.draw(&mut rng)?;
        hp += usize::from(th.plain[r] > lam);
        he += usize::from(th.enriched[r] > lam);
    }
    let fixed = match lambda_dist {
        LambdaSampler::Fixed { value } => Some(*value),
        _ => None,
    };
    Ok(point(fixed, hp, he, reps))
}

/// Activation probabilities at each `λ` of a grid, common draws throughout.
pub fn activation_grid(
    spec: &ZeroMeanSpec,
    lambdas: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<ActivationPoint>> {
    if reps == 0 {
        return Err(Error::invalid("reps must be positive"));
    }
    let th = simulate_thresholds(spec, reps, seed)?;
    Ok(lambdas
        .iter()
        .map(|&l| {
            let hp = th.plain.iter().filter(|v| **v > l).count();
            let he = th.enriched.iter().filter(|v| **v > l).count();
            point(Some(l), hp, he, reps)
        })
        .collect())
}

/// Rows `lambda, estimator, activation_rate, mc_se`.
pub fn write_curve_csv<W: Write>(points: &[ActivationPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "estimator", "activation_rate", "mc_se"])?;
    for p in points {
        let lam = p.lambda.map(|l| format!("{l:.16e}")).unwrap_or_default();
        for (name, rate, se) in [("plain", p.plain, p.plain_se), ("enriched", p.enriched, p.enriched_se)] {
            w.write_record([lam.clone(), name.into(), format!("{rate:.16e}"), format!("{se:.16e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
