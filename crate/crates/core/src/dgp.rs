//! Seeded simulation of the autoregressive data-generating processes.
//!
//! All simulators start from zero pre-sample values and draw Gaussian
//! innovations from the `DATA` sub-stream of the supplied seed, so two calls
//! with the same arguments return bitwise-identical series.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, streams, SimRng};

/// Ordered real-valued sample, optionally tagged with the seed that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData {
                what: "time series",
                needed: 1,
                got: 0,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { values, seed: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First differences `y_t - y_{t-1}`, `t = 2..T`.
    pub fn diff(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same provenance, new values.
    pub(crate) fn map_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            seed: self.seed,
        }
    }
}

/// Parameters of the sparse ADF data-generating process
/// `Δy_t = ρ* y_{t-1} + Σ_j δ*_j Δy_{t-j} + v_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdfDgpSpec {
    pub rho_star: f64,
    #[serde(default)]
    pub delta_star: Vec<f64>,
    pub t: usize,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

fn default_noise_sd() -> f64 {
    1.0
}

impl AdfDgpSpec {
    pub fn new(rho_star: f64, delta_star: Vec<f64>, t: usize) -> Self {
        Self {
            rho_star,
            delta_star,
            t,
            noise_sd: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_star > -2.0 && self.rho_star <= 0.0) {
            return Err(Error::invalid(format!(
                "rho_star = {} outside (-2, 0]",
                self.rho_star
            )));
        }
        if self.delta_star.iter().sum::<f64>() >= 1.0 {
            return Err(Error::invalid("sum of delta_star must be below 1"));
        }
        if self.t == 0 {
            return Err(Error::invalid("T must be positive"));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::invalid("noise_sd must be positive"));
        }
        Ok(())
    }

    /// Coefficients of the levels representation
    /// `y_t = Σ_{i=1}^{k*+1} a_i y_{t-i} + v_t`.
    pub fn levels_coefficients(&self) -> Vec<f64> {
        levels_coefficients(self.rho_star, &self.delta_star)
    }

    /// Root condition for the lag polynomial.
    ///
    /// For `ρ* < 0` all roots of the characteristic polynomial must lie outside
    /// the unit circle. For `ρ* = 0` the unit root is by construction and the
    /// condition is checked on the polynomial of the differences `1 - Σ δ*_j z^j`.
    pub fn roots_admissible(&self) -> bool {
        if self.rho_star == 0.0 {
            ar_is_stationary(&self.delta_star)
        } else {
            ar_is_stationary(&self.levels_coefficients())
        }
    }
}

pub(crate) fn levels_coefficients(rho: f64, delta: &[f64]) -> Vec<f64> {
    let k = delta.len();
    let mut a = vec![0.0; k + 1];
    a[0] = 1.0 + rho;
    for j in 0..k {
        a[j] += delta[j];
        a[j + 1] -= delta[j];
    }
    a
}

/// True when every root of `1 - φ_1 z - ... - φ_m z^m` lies strictly outside
/// the unit circle. Uses the step-down (inverse Levinson) recursion: the
/// polynomial is stable iff every reflection coefficient has modulus below one.
pub fn ar_is_stationary(phi: &[f64]) -> bool {
    let mut a: Vec<f64> = phi.to_vec();
    while a.last() == Some(&0.0) {
        a.pop();
    }
    while let Some(&kappa) = a.last() {
        if kappa.abs() >= 1.0 {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - kappa * kappa;
        let next: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] + kappa * a[m - 2 - i]) / denom)
            .collect();
        a = next;
    }
    true
}

fn draw_normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

fn data_rng(seed: u64) -> SimRng {
    rng_for(seed, &[streams::DATA])
}

/// `x_t = ϱ x_{t-1} + u_t`, `u_t ~ N(0, σ²)`, `x_0 = 0`.
pub fn simulate_ar1(varrho: f64, t: usize, sigma: f64, seed: u64) -> Result<TimeSeries> {
    if varrho.abs() > 1.0 {
        return Err(Error::invalid(format!(
            "|varrho| = {} > 1 (explosive)",
            varrho.abs()
        )));
    }
    if t == 0 {
        return Err(Error::invalid("T must be positive"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::invalid("sigma must be non-negative"));
    }
    let mut rng = data_rng(seed);
    let mut prev = 0.0;
    let values = (0..t)
        .map(|_| {
            prev = varrho * prev + sigma * draw_normal(&mut rng);
            prev
        })
        .collect();
    Ok(TimeSeries::new(values)?.with_seed(seed))
}

/// Simulate the sparse ADF process from `k* + 1` zero initial values.
pub fn simulate_adf_dgp(spec: &AdfDgpSpec, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    let k = spec.delta_star.len();
    let mut rng = data_rng(seed);
    let mut y = Vec::with_capacity(spec.t);
    // most recent difference first
    let mut diffs = vec![0.0; k];
    let mut level = 0.0;
    for _ in 0..spec.t {
        let lagged: f64 = spec.delta_star.iter().zip(&diffs).map(|(d, dy)| d * dy).sum();
        let dy = spec.rho_star * level + lagged + spec.noise_sd * draw_normal(&mut rng);
        level += dy;
        if k > 0 {
            diffs.rotate_right(1);
            diffs[0] = dy;
        }
        y.push(level);
    }
    Ok(TimeSeries::new(y)?.with_seed(seed))
}

/// `y_t = ϱ y_{t-1} + ε_t + θ ε_{t-1}`, `ε_t ~ N(0, 1)`, `ε_0 = 0`.
pub fn simulate_unitroot_ma1(varrho: f64, theta: f64, t: usize, seed: u64) -> Result<TimeSeries> {
    if theta.abs() >= 1.0 {
        return Err(Error::invalid("|theta| must be below 1"));
    }
    if varrho.abs() > 1.0 {
        return Err(Error::invalid("|varrho| must not exceed 1"));
    }
    if t == 0 {
        return Err(Error::invalid("T must be positive"));
    }
    let mut rng = data_rng(seed);
    let mut eps_prev = 0.0;
    let mut prev = 0.0;
    let values = (0..t)
        .map(|_| {
            let eps = draw_normal(&mut rng);
            prev = varrho * prev + eps + theta * eps_prev;
            eps_prev = eps;
            prev
        })
        .collect();
    Ok(TimeSeries::new(values)?.with_seed(seed))
}

/// Overwrite `out` with a Gaussian random walk `q_t = q_{t-1} + ν_t`, `q_0 = 0`.
pub(crate) fn fill_random_walk(rng: &mut SimRng, sigma_v: f64, out: &mut [f64]) {
    let mut q = 0.0;
    for v in out.iter_mut() {
        q += sigma_v * draw_normal(rng);
        *v = q;
    }
}

pub fn simulate_random_walk(t: usize, sigma_v: f64, seed: u64) -> Result<TimeSeries> {
    if !(sigma_v > 0.0) {
        return Err(Error::invalid("sigma_v must be positive"));
    }
    if t == 0 {
        return Err(Error::invalid("T must be positive"));
    }
    let mut out = vec![0.0; t];
    fill_random_walk(&mut data_rng(seed), sigma_v, &mut out);
    Ok(TimeSeries::new(out)?.with_seed(seed))
}

/// Add the polynomial trend `Σ_k ψ_k t^k`, `t = 1..T`.
pub fn add_deterministic(series: &TimeSeries, psi: &[f64]) -> Result<TimeSeries> {
    if psi.is_empty() {
        return Err(Error::invalid("psi must have at least one coefficient"));
    }
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let t = (i + 1) as f64;
            // Horner
            psi.iter().rev().fold(0.0, |acc, c| acc * t + c) + x
        })
        .collect();
    Ok(series.map_values(values))
}
