use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, McResult};
use crate::enrich::Estimator;
use crate::error::{Error, Result};
use crate::prep::DetrendMode;

/// One row of the summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub dgp: String,
    pub estimator: Estimator,
    pub det: DetrendMode,
    #[serde(rename = "T")]
    pub t: usize,
    pub rho_star: f64,
    pub reps: usize,
    pub failures: usize,
    pub flagged: bool,
    pub activation_rate: Option<f64>,
    pub activation_se: Option<f64>,
    pub p_exact: Option<f64>,
    pub p_exact_se: Option<f64>,
    pub p_superset: Option<f64>,
    pub p_superset_se: Option<f64>,
    pub p_model: Option<f64>,
    pub p_model_se: Option<f64>,
    pub median_log_w1: Option<f64>,
    pub median_log_lambda0: Option<f64>,
}

const HEADER: [&str; 18] = [
    "dgp",
    "estimator",
    "det",
    "T",
    "rho_star",
    "reps",
    "failures",
    "flagged",
    "activation_rate",
    "activation_se",
    "p_exact",
    "p_exact_se",
    "p_superset",
    "p_superset_se",
    "p_model",
    "p_model_se",
    "median_log_w1",
    "median_log_lambda0",
];

/// 17 significant digits; enough to read back the identical `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(s: &str, line: u64) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Config(format!("line {line}: '{s}' is not a number")))
}

fn parse_opt(s: &str, line: u64) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, line).map(Some)
    }
}

/// Summary table, one row per cell in grid order.
pub fn write_csv<W: Write>(rows: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.dgp.clone(),
            r.estimator.to_string(),
            r.det.to_string(),
            r.t.to_string(),
            fmt_f64(r.rho_star),
            r.reps.to_string(),
            r.failures.to_string(),
            r.flagged.to_string(),
            fmt_opt(r.activation_rate),
            fmt_opt(r.activation_se),
            fmt_opt(r.p_exact),
            fmt_opt(r.p_exact_se),
            fmt_opt(r.p_superset),
            fmt_opt(r.p_superset_se),
            fmt_opt(r.p_model),
            fmt_opt(r.p_model_se),
            fmt_opt(r.median_log_w1),
            fmt_opt(r.median_log_lambda0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(result: &McResult, path: &Path) -> Result<()> {
    write_csv(&result.summaries(), std::fs::File::create(path)?)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CellSummary>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(HEADER) {
        return Err(Error::Config("unexpected summary header".into()));
    }
    let mut rows = vec![];
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != HEADER.len() {
            return Err(Error::Config(format!("line {line}: expected {} fields", HEADER.len())));
        }
        let int = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: '{}' is not an integer", &rec[i])))
        };
        rows.push(CellSummary {
            dgp: rec[0].to_string(),
            estimator: rec[1].parse()?,
            det: rec[2].parse()?,
            t: int(3)?,
            rho_star: parse_f64(&rec[4], line)?,
            reps: int(5)?,
            failures: int(6)?,
            flagged: rec[7]
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: bad flag '{}'", &rec[7])))?,
            activation_rate: parse_opt(&rec[8], line)?,
            activation_se: parse_opt(&rec[9], line)?,
            p_exact: parse_opt(&rec[10], line)?,
            p_exact_se: parse_opt(&rec[11], line)?,
            p_superset: parse_opt(&rec[12], line)?,
            p_superset_se: parse_opt(&rec[13], line)?,
            p_model: parse_opt(&rec[14], line)?,
            p_model_se: parse_opt(&rec[15], line)?,
            median_log_w1: parse_opt(&rec[16], line)?,
            median_log_lambda0: parse_opt(&rec[17], line)?,
        });
    }
    Ok(rows)
}

/// Per-replication samples (weights, activation knots, selections), for
/// density plots and further analysis outside the harness.
pub fn write_samples_csv<W: Write>(result: &McResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dgp",
        "estimator",
        "det",
        "T",
        "rho_star",
        "rep",
        "includes_inference",
        "log_w1",
        "log_lambda0",
        "lambda_bic",
        "lag_pattern",
        "error",
    ])?;
    for c in &result.cells {
        for (i, r) in c.replications.iter().enumerate() {
            let mut row = vec![
                c.key.dgp.clone(),
                c.key.estimator.to_string(),
                c.key.det.to_string(),
                c.key.t.to_string(),
                fmt_f64(c.key.rho_star),
                i.to_string(),
            ];
            match r {
                Ok(r) => row.extend([
                    r.includes_inference.to_string(),
                    fmt_f64(r.log_w1()),
                    fmt_f64(r.log_lambda0(0)),
                    fmt_f64(r.lambda_bic),
                    r.lag_pattern
                        .iter()
                        .map(|l| l.to_string())
                        .collect::<Vec<_>>()
                        .join(";"),
                    String::new(),
                ]),
                Err(e) => row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.clone(),
                ]),
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to rerun an experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a> {
    pub library: &'static str,
    pub version: &'static str,
    pub base_seed: u64,
    pub workers: usize,
    pub cells: usize,
    pub flagged_cells: usize,
    pub config: &'a ExperimentConfig,
}

pub fn write_manifest<W: Write>(config: &ExperimentConfig, result: &McResult, out: W) -> Result<()> {
    let m = Manifest {
        library: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        base_seed: config.base_seed,
        workers: config.workers,
        cells: result.cells.len(),
        flagged_cells: result.cells.iter().filter(|c| c.flagged()).count(),
        config,
    };
    serde_json::to_writer_pretty(out, &m)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rate: Option<f64>) -> CellSummary {
        CellSummary {
            dgp: "delta_A".into(),
            estimator: Estimator::Alie,
            det: DetrendMode::FdDetrend,
            t: 100,
            rho_star: -0.05,
            reps: 2000,
            failures: 1,
            flagged: false,
            activation_rate: rate,
            activation_se: rate.map(|p| (p * (1.0 - p) / 2000.0).sqrt()),
            p_exact: None,
            p_exact_se: None,
            p_superset: Some(0.1 + 0.2),
            p_superset_se: Some(1.0 / 3.0),
            p_model: Some(0.0),
            p_model_se: Some(0.0),
            median_log_w1: Some(-1e-300),
            median_log_lambda0: Some(f64::NEG_INFINITY),
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row(Some(0.123456789012345678)), row(None)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 3);
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn bad_number_reports_line() {
        let mut buf = Vec::new();
        write_csv(&[row(Some(0.5))], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("5.0000000000000000e-1", "half");
        let err = read_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
