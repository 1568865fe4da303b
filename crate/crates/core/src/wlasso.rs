//! Weighted-ℓ1 solution paths.
//!
//! The path minimises `‖y − Xβ − Dη‖² + 2λ Σ_i f_i |β_i|` over all `λ ≥ 0`,
//! where `D` holds unpenalised deterministic columns. `D` is projected out
//! first, so the path runs on `M_D X` and `M_D y` and `η(β)` is recovered in
//! closed form at each knot.
//!
//! The solver is LARS with the Lasso modification, written directly in the
//! original coefficient scale: on a segment with active set `A` and signs `s`
//! the solution is `β_A(λ) = u − λ d` with `u = G_AA⁻¹ X_A'y` and
//! `d = G_AA⁻¹ (f_A ∘ s)`. Knots are the values of `λ` where an inactive
//! correlation reaches its bound or an active coefficient reaches zero.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, principal_submatrix, Matrix, Qr};
use crate::prep::AdfDesign;

/// Relative gap below which two knots are treated as the same event time.
const KNOT_TIE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct PenalizedProblem {
    /// Penalised columns.
    pub x: Matrix,
    /// Unpenalised columns (possibly none).
    pub det: Matrix,
    pub y: Vec<f64>,
    /// One factor per penalised column; `f64::INFINITY` keeps a column out.
    pub factors: Vec<f64>,
}

impl PenalizedProblem {
    pub fn new(x: Matrix, det: Matrix, y: Vec<f64>, factors: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() || det.rows() != y.len() {
            return Err(Error::invalid(format!(
                "row mismatch: X has {}, D has {}, y has {}",
                x.rows(),
                det.rows(),
                y.len()
            )));
        }
        if factors.len() != x.cols() {
            return Err(Error::invalid(format!(
                "{} penalty factors for {} penalised columns",
                factors.len(),
                x.cols()
            )));
        }
        if let Some(f) = factors.iter().find(|f| !(**f > 0.0)) {
            return Err(Error::invalid(format!("penalty factor {f} is not positive")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("response contains non-finite values"));
        }
        Ok(Self { x, det, y, factors })
    }

    /// Problem on an ADF design: `y_{t-1}` and the lags penalised, the
    /// deterministic columns not.
    pub fn from_design(design: &AdfDesign, factors: Vec<f64>) -> Result<Self> {
        Self::new(
            design.penalized(),
            design.det_cols.clone(),
            design.response.clone(),
            factors,
        )
    }

    pub fn n_penalized(&self) -> usize {
        self.x.cols()
    }

    pub fn nobs(&self) -> usize {
        self.y.len()
    }
}

/// Data with the deterministic columns partialled out.
pub(crate) struct Projected {
    pub x: Matrix,
    pub y: Vec<f64>,
    /// Coefficients of `y` on `D`.
    det_y: Vec<f64>,
    /// Coefficients of each penalised column on `D`, one vector per column.
    det_x: Vec<Vec<f64>>,
}

impl Projected {
    pub fn new(prob: &PenalizedProblem) -> Result<Self> {
        let k = prob.det.cols();
        if k == 0 {
            return Ok(Self {
                x: prob.x.clone(),
                y: prob.y.clone(),
                det_y: vec![],
                det_x: vec![vec![]; prob.x.cols()],
            });
        }
        let qr = Qr::new(&prob.det)?;
        let project = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let coef = qr.solve_prefix(&qr.qt_mul(v), k);
            let fit = prob.det.mul_vec(&coef);
            (v.iter().zip(&fit).map(|(a, b)| a - b).collect(), coef)
        };
        let (y, det_y) = project(&prob.y);
        let mut x = prob.x.clone();
        let mut det_x = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let (r, c) = project(prob.x.column(j));
            x.column_mut(j).copy_from_slice(&r);
            det_x.push(c);
        }
        Ok(Self { x, y, det_y, det_x })
    }

    /// `η(β) = (D'D)⁻¹ D'(y − Xβ)`.
    pub fn det_coefficients(&self, beta: &[f64]) -> Vec<f64> {
        let mut eta = self.det_y.clone();
        for (b, cx) in beta.iter().zip(&self.det_x) {
            if *b != 0.0 {
                for (e, c) in eta.iter_mut().zip(cx) {
                    *e -= b * c;
                }
            }
        }
        eta
    }

    pub fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        let fit = self.x.mul_vec(beta);
        self.y.iter().zip(&fit).map(|(a, b)| a - b).collect()
    }

    pub fn rss(&self, beta: &[f64]) -> f64 {
        let r = self.residuals(beta);
        dot(&r, &r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Activation,
    Deactivation,
    /// Re-activation with the opposite sign to the variable's previous spell.
    SignCross,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Activation => "activation",
            EventKind::Deactivation => "deactivation",
            EventKind::SignCross => "sign_cross",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    /// Index into [`LassoPath::knots`].
    pub knot: usize,
    pub variable: usize,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    /// Strictly decreasing, positive.
    pub knots: Vec<f64>,
    /// Penalised coefficients at each knot followed by the `λ = 0` endpoint.
    pub coefs: Vec<Vec<f64>>,
    /// Deterministic-term coefficients, aligned with `coefs`.
    pub det_coefs: Vec<Vec<f64>>,
    pub events: Vec<PathEvent>,
}

impl LassoPath {
    pub fn n_penalized(&self) -> usize {
        self.coefs[0].len()
    }

    /// `λ` attached to entry `i` of `coefs` (`0` for the endpoint).
    pub fn lambda_at(&self, i: usize) -> f64 {
        self.knots.get(i).copied().unwrap_or(0.0)
    }

    pub fn events_at(&self, knot: usize) -> impl Iterator<Item = &PathEvent> {
        self.events.iter().filter(move |e| e.knot == knot)
    }
}

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

struct Step {
    lambda: f64,
    variable: usize,
    entering: bool,
}

/// Exact solution path by LARS with the Lasso modification.
pub fn solve_path(prob: &PenalizedProblem) -> Result<LassoPath> {
    let proj = Projected::new(prob)?;
    let np = prob.n_penalized();
    let f = &prob.factors;
    let g = proj.x.gram();
    let c0 = proj.x.t_mul_vec(&proj.y);

    let mut beta = vec![0.0; np];
    let mut path = LassoPath {
        knots: vec![],
        coefs: vec![],
        det_coefs: vec![],
        events: vec![],
    };
    let candidates: Vec<usize> = (0..np).filter(|&j| f[j].is_finite()).collect();
    let lambda1 = candidates
        .iter()
        .map(|&j| c0[j].abs() / f[j])
        .fold(0.0, f64::max);
    if !(lambda1 > 0.0) {
        path.det_coefs.push(proj.det_coefficients(&beta));
        path.coefs.push(beta);
        return Ok(path);
    }

    let mut active: Vec<usize> = vec![];
    let mut signs: Vec<f64> = vec![];
    let mut last_sign: Vec<Option<f64>> = vec![None; np];
    let mut lam = lambda1;

    path.knots.push(lam);
    path.coefs.push(beta.clone());
    path.det_coefs.push(proj.det_coefficients(&beta));
    for &j in &candidates {
        if c0[j].abs() / f[j] >= lam * (1.0 - KNOT_TIE) {
            active.push(j);
            signs.push(sign(c0[j]));
            last_sign[j] = Some(sign(c0[j]));
            path.events.push(PathEvent {
                knot: 0,
                variable: j,
                kind: EventKind::Activation,
            });
        }
    }

    let mut just_dropped: Vec<usize> = vec![];
    let max_iter = 50 * (np + 1) + 100;
    for _ in 0..max_iter {
        let h = principal_submatrix(&g, &active);
        let l = cholesky(&h).ok_or(Error::RankDeficient {
            column: *active.last().expect("non-empty active set"),
        })?;
        let c_a: Vec<f64> = active.iter().map(|&j| c0[j]).collect();
        let fs: Vec<f64> = active
            .iter()
            .zip(&signs)
            .map(|(&j, s)| f[j] * s)
            .collect();
        let u = cholesky_solve(&l, &c_a);
        let d = cholesky_solve(&l, &fs);

        let ceiling = lam * (1.0 - KNOT_TIE);
        let mut steps: Vec<Step> = vec![];
        for &j in &candidates {
            if active.contains(&j) {
                continue;
            }
            // inactive correlation along the segment: e + λ a
            let gja: Vec<f64> = active.iter().map(|&i| g[(j, i)]).collect();
            let e = c0[j] - dot(&gja, &u);
            let a = dot(&gja, &d);
            // a variable dropped at the current knot sits on the boundary of
            // its old sign; only the opposite boundary can be crossed on this segment
            let dropped_sign = just_dropped.contains(&j).then(|| last_sign[j]).flatten();
            let best = [(1.0, e / (f[j] - a)), (-1.0, -e / (f[j] + a))]
                .into_iter()
                .filter(|(s, _)| dropped_sign != Some(*s))
                .map(|(_, r)| r)
                .filter(|r| r.is_finite() && *r > 0.0 && *r < ceiling)
                .fold(f64::NEG_INFINITY, f64::max);
            if best > 0.0 {
                steps.push(Step {
                    lambda: best,
                    variable: j,
                    entering: true,
                });
            }
        }
        for (k, &i) in active.iter().enumerate() {
            if d[k] != 0.0 {
                let r = u[k] / d[k];
                if r > 0.0 && r < ceiling {
                    steps.push(Step {
                        lambda: r,
                        variable: i,
                        entering: false,
                    });
                }
            }
        }

        let next = steps.iter().map(|s| s.lambda).fold(0.0, f64::max);
        if next <= 0.0 {
            for (k, &i) in active.iter().enumerate() {
                beta[i] = u[k];
            }
            path.det_coefs.push(proj.det_coefficients(&beta));
            path.coefs.push(beta);
            return Ok(path);
        }

        for (k, &i) in active.iter().enumerate() {
            beta[i] = u[k] - next * d[k];
        }
        let knot = path.knots.len();
        let mut firing: Vec<&Step> = steps
            .iter()
            .filter(|s| s.lambda >= next * (1.0 - KNOT_TIE))
            .collect();
        firing.sort_by_key(|s| (s.entering, s.variable));
        just_dropped.clear();
        for s in firing {
            let j = s.variable;
            if s.entering {
                let gja: Vec<f64> = active.iter().map(|&i| g[(j, i)]).collect();
                let corr = c0[j] - dot(&gja, &u) + next * dot(&gja, &d);
                let sj = sign(corr);
                if last_sign[j].is_some_and(|prev| prev != sj) {
                    path.events.push(PathEvent {
                        knot,
                        variable: j,
                        kind: EventKind::SignCross,
                    });
                }
                last_sign[j] = Some(sj);
                active.push(j);
                signs.push(sj);
                path.events.push(PathEvent {
                    knot,
                    variable: j,
                    kind: EventKind::Activation,
                });
            } else {
                let pos = active.iter().position(|&i| i == j).expect("active");
                active.remove(pos);
                signs.remove(pos);
                beta[j] = 0.0;
                just_dropped.push(j);
                path.events.push(PathEvent {
                    knot,
                    variable: j,
                    kind: EventKind::Deactivation,
                });
            }
        }
        lam = next;
        path.knots.push(lam);
        path.coefs.push(beta.clone());
        path.det_coefs.push(proj.det_coefficients(&beta));

        if active.is_empty() {
            return Err(Error::Degenerate(
                "active set emptied below the first knot".into(),
            ));
        }
    }
    Err(Error::Degenerate(format!(
        "path did not terminate within {max_iter} steps"
    )))
}

fn interpolate(path: &LassoPath, series: &[Vec<f64>], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let knots = &path.knots;
    if knots.is_empty() || lambda >= knots[0] {
        return Ok(series[0].clone());
    }
    // knots[k] > lambda >= knots[k+1] (or the endpoint)
    let k = knots.partition_point(|&kn| kn > lambda) - 1;
    let hi = knots[k];
    let lo = path.lambda_at(k + 1);
    let w = (lambda - lo) / (hi - lo);
    Ok(series[k + 1]
        .iter()
        .zip(&series[k])
        .map(|(b_lo, b_hi)| if w == 0.0 { *b_lo } else { b_lo + w * (b_hi - b_lo) })
        .collect())
}

/// Penalised coefficients at `lambda`.
pub fn coefficients_at(path: &LassoPath, lambda: f64) -> Result<Vec<f64>> {
    interpolate(path, &path.coefs, lambda)
}

/// Deterministic-term coefficients at `lambda`.
pub fn det_coefficients_at(path: &LassoPath, lambda: f64) -> Result<Vec<f64>> {
    interpolate(path, &path.det_coefs, lambda)
}

/// Largest `λ` at which each penalised variable activates (`None` if never).
pub fn activation_knots(path: &LassoPath) -> Vec<Option<f64>> {
    let mut out = vec![None; path.n_penalized()];
    for e in &path.events {
        if e.kind == EventKind::Activation {
            let l = path.knots[e.knot];
            let slot = &mut out[e.variable];
            if slot.is_none_or(|cur| l > cur) {
                *slot = Some(l);
            }
        }
    }
    out
}

/// Variables ordered by activation knot, largest first; ties by column index.
pub fn first_activation_order(path: &LassoPath) -> Vec<usize> {
    let knots = activation_knots(path);
    let mut idx: Vec<usize> = (0..knots.len()).filter(|&i| knots[i].is_some()).collect();
    idx.sort_by(|&a, &b| knots[b].unwrap().total_cmp(&knots[a].unwrap()).then(a.cmp(&b)));
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    pub ok: bool,
    /// Largest scaled violation over all penalised coefficients.
    pub max_violation: f64,
    pub violating: Vec<usize>,
}

/// Check the stationarity conditions `X_i'r = λ f_i sign(β_i)` (active) and
/// `|X_i'r| ≤ λ f_i` (inactive), with the deterministic coefficients profiled
/// out. Violations are scaled by `λ f_i + ‖X_i‖‖y‖`.
pub fn kkt_check(prob: &PenalizedProblem, lambda: f64, beta: &[f64], tol: f64) -> Result<KktReport> {
    if beta.len() != prob.n_penalized() {
        return Err(Error::invalid("coefficient vector has the wrong length"));
    }
    let proj = Projected::new(prob)?;
    let r = proj.residuals(beta);
    let ynorm = dot(&proj.y, &proj.y).sqrt();
    let mut report = KktReport {
        ok: true,
        max_violation: 0.0,
        violating: vec![],
    };
    for i in 0..prob.n_penalized() {
        let f = prob.factors[i];
        let v = if f.is_infinite() {
            if beta[i] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            let xi = proj.x.column(i);
            let corr = dot(xi, &r);
            let scale = lambda * f + dot(xi, xi).sqrt() * ynorm;
            let excess = if beta[i] != 0.0 {
                (corr - lambda * f * sign(beta[i])).abs()
            } else {
                (corr.abs() - lambda * f).max(0.0)
            };
            if scale > 0.0 {
                excess / scale
            } else {
                excess
            }
        };
        report.max_violation = report.max_violation.max(v);
        if v > tol {
            report.ok = false;
            report.violating.push(i);
        }
    }
    Ok(report)
}

/// One CSV row per knot: `lambda`, the events at that knot, and the
/// penalised coefficients (`names` supplies the headers).
pub fn write_path_csv<W: Write>(path: &LassoPath, names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lambda".to_string(), "events".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (k, lam) in path.knots.iter().enumerate() {
        let events: Vec<String> = path
            .events_at(k)
            .map(|e| format!("{}:{}", e.kind.as_str(), names[e.variable]))
            .collect();
        let mut row = vec![format!("{lam:.16e}"), events.join(";")];
        row.extend(path.coefs[k].iter().map(|b| format!("{b:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
