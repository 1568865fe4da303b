use std::fmt;
use std::path::Path;

use alie::dgp::TimeSeries;

/// Problem with the user's input; reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub const MIN_ROWS: usize = 20;

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// Read the first numeric column of a CSV file. A leading row without any
/// numeric field is taken as a header.
pub fn read_series(path: &Path) -> anyhow::Result<TimeSeries> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    parse_series(&text)
}

pub fn parse_series(text: &str) -> anyhow::Result<TimeSeries> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut column: Option<usize> = None;
    let mut values = vec![];
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| input_err(format!("malformed CSV: {e}")))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let col = match column {
            Some(c) => c,
            None => match rec.iter().position(|f| f.parse::<f64>().is_ok()) {
                Some(c) => {
                    column = Some(c);
                    c
                }
                None if values.is_empty() && i == 0 => continue,
                None => return Err(input_err(format!("line {line}: no numeric field"))),
            },
        };
        let field = rec.get(col).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| input_err(format!("line {line}: '{field}' is not a number")))?;
        if !v.is_finite() {
            return Err(input_err(format!("line {line}: '{field}' is not finite")));
        }
        values.push(v);
    }
    if values.len() < MIN_ROWS {
        return Err(input_err(format!(
            "need at least {MIN_ROWS} observations, got {}",
            values.len()
        )));
    }
    Ok(TimeSeries::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize) -> String {
        (0..n).map(|i| format!("{}\n", i as f64 * 0.5)).collect()
    }

    #[test]
    fn header_is_optional() {
        assert_eq!(parse_series(&rows(25)).unwrap().len(), 25);
        let with_header = format!("value\n{}", rows(25));
        assert_eq!(parse_series(&with_header).unwrap().len(), 25);
    }

    #[test]
    fn first_numeric_column_is_used() {
        let text: String = (0..21).map(|i| format!("2020-{i},{i}.5,x\n")).collect();
        let y = parse_series(&format!("date,y,note\n{text}")).unwrap();
        assert_eq!(y.values()[3], 3.5);
    }

    #[test]
    fn bad_row_reports_its_line() {
        let text = format!("y\n{}abc\n{}", rows(10), rows(15));
        let err = parse_series(&text).unwrap_err().to_string();
        assert!(err.contains("line 12"), "{err}");
    }

    #[test]
    fn short_input_is_rejected() {
        assert!(parse_series(&rows(5)).is_err());
    }

    #[test]
    fn comma_decimal_is_rejected() {
        let text = format!("{}\"1,5\"\n", rows(25));
        assert!(parse_series(&text).is_err());
    }
}
