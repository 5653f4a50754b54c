//! Sample file formats.
//!
//! * `csv`: header `theta_1,...,theta_d,log_joint`, one sample per row.
//! * `ndjson`: one object per line, `{"theta": [..], "log_joint": x}`.
//!
//! Numbers may be written as JSON strings (`"inf"`, `"NaN"`) so that
//! non-finite values are reported as such rather than as parse errors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use arrogance::{Error as CoreError, EvaluatedSample, SampleSet};
use clap::ValueEnum;
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    Csv,
    Ndjson,
}

impl SampleFormat {
    /// `.ndjson`/`.jsonl` select ndjson, anything else csv.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ndjson" | "jsonl") => SampleFormat::Ndjson,
            _ => SampleFormat::Csv,
        }
    }
}

impl FromStr for SampleFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

fn parse_number(field: &str, row: usize, what: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| CliError::Parse {
        row,
        reason: format!("{what}: {field:?} is not a number"),
    })
}

pub fn parse_csv<R: Read>(reader: R) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let lj_col = names
        .iter()
        .position(|&n| n == "log_joint")
        .ok_or_else(|| CliError::Parse {
            row: 0,
            reason: "header has no log_joint column".into(),
        })?;
    let mut theta_cols = Vec::new();
    for (i, &name) in names.iter().enumerate() {
        if i == lj_col {
            continue;
        }
        let k = name
            .strip_prefix("theta_")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| CliError::Parse {
                row: 0,
                reason: format!("unexpected column {name:?}"),
            })?;
        theta_cols.push((k, i));
    }
    theta_cols.sort_unstable();
    if theta_cols.is_empty() || theta_cols.iter().enumerate().any(|(j, &(k, _))| k != j + 1) {
        return Err(CliError::Parse {
            row: 0,
            reason: "theta columns must be theta_1..theta_d".into(),
        });
    }
    let dim = theta_cols.len();

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Parse {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != names.len() {
            return Err(CoreError::DimensionMismatch {
                row,
                expected: dim,
                found: record.len().saturating_sub(1),
            }
            .into());
        }
        let theta = theta_cols
            .iter()
            .map(|&(k, c)| parse_number(&record[c], row, &format!("theta_{k}")))
            .collect::<Result<Vec<_>>>()?;
        let log_joint = parse_number(&record[lj_col], row, "log_joint")?;
        rows.push(EvaluatedSample::new(theta, log_joint));
    }
    Ok(SampleSet::new(rows)?)
}

fn json_number(v: &Value, row: usize, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| CliError::Parse {
            row,
            reason: format!("{what} out of range"),
        }),
        Value::String(s) => parse_number(s, row, what),
        other => Err(CliError::Parse {
            row,
            reason: format!("{what}: expected a number, found {other}"),
        }),
    }
}

pub fn parse_ndjson<R: Read>(reader: R) -> Result<SampleSet> {
    let mut rows = Vec::new();
    let mut row = 0;
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|e| CliError::Parse {
            row: row + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let value: Value = serde_json::from_str(&line).map_err(|e| CliError::Parse {
            row,
            reason: e.to_string(),
        })?;
        let theta = value
            .get("theta")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::Parse {
                row,
                reason: "missing \"theta\" array".into(),
            })?
            .iter()
            .enumerate()
            .map(|(k, v)| json_number(v, row, &format!("theta[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let log_joint = value.get("log_joint").ok_or_else(|| CliError::Parse {
            row,
            reason: "missing \"log_joint\"".into(),
        })?;
        let log_joint = json_number(log_joint, row, "log_joint")?;
        rows.push(EvaluatedSample::new(theta, log_joint));
    }
    Ok(SampleSet::new(rows)?)
}

pub fn parse_samples<R: Read>(reader: R, format: SampleFormat) -> Result<SampleSet> {
    match format {
        SampleFormat::Csv => parse_csv(reader),
        SampleFormat::Ndjson => parse_ndjson(reader),
    }
}

pub fn parse_samples_file(path: &Path, format: SampleFormat) -> Result<SampleSet> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_samples(BufReader::new(file), format)
}

/// Writes samples with shortest round-trip float formatting.
pub fn write_samples<W: Write>(
    writer: W,
    samples: &[EvaluatedSample],
    format: SampleFormat,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    match format {
        SampleFormat::Csv => {
            let dim = samples.first().map_or(0, |s| s.dim());
            let header: Vec<String> = (1..=dim)
                .map(|k| format!("theta_{k}"))
                .chain(std::iter::once("log_joint".to_string()))
                .collect();
            writeln!(w, "{}", header.join(","))?;
            for s in samples {
                for t in &s.theta {
                    write!(w, "{t},")?;
                }
                writeln!(w, "{}", s.log_joint)?;
            }
        }
        SampleFormat::Ndjson => {
            for s in samples {
                serde_json::to_writer(&mut w, s)?;
                writeln!(w)?;
            }
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_three_rows() {
        let data = "theta_1,theta_2,log_joint\n0,1,-1\n2,3,-2.5\n-1,0.5,-3\n";
        let s = parse_csv(data.as_bytes()).unwrap();
        assert_eq!((s.len(), s.dim()), (3, 2));
        assert_eq!(s.samples()[1].theta, vec![2.0, 3.0]);
        assert_eq!(s.samples()[1].log_joint, -2.5);
    }

    #[test]
    fn csv_column_order_is_by_name() {
        let data = "log_joint,theta_2,theta_1\n-1,5,4\n";
        let s = parse_csv(data.as_bytes()).unwrap();
        assert_eq!(s.samples()[0].theta, vec![4.0, 5.0]);
    }

    #[test]
    fn csv_missing_log_joint() {
        let err = parse_csv("theta_1,theta_2\n0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Parse { row: 0, .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn csv_bad_rows() {
        let err = parse_csv("theta_1,log_joint\n0,-1\nx,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Parse { row: 2, .. }));
        let err = parse_csv("theta_1,log_joint\n0,-1\n0,1,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            CliError::Estimation(CoreError::DimensionMismatch { row: 2, .. })
        ));
        let err = parse_csv("theta_1,log_joint\n0,-1\n0,NaN\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            CliError::Estimation(CoreError::NonFiniteValue { row: 2, .. })
        ));
        let err = parse_csv("theta_1,theta_3,log_joint\n0,0,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Parse { row: 0, .. }));
    }

    #[test]
    fn ndjson_records() {
        let data = "{\"theta\":[0.5,1],\"log_joint\":-2}\n\n{\"theta\":[1,2],\"log_joint\":-3}\n";
        let s = parse_ndjson(data.as_bytes()).unwrap();
        assert_eq!((s.len(), s.dim()), (2, 2));
    }

    #[test]
    fn ndjson_inf_string_is_non_finite() {
        let data = "{\"theta\":[0.5],\"log_joint\":\"inf\"}\n";
        let err = parse_ndjson(data.as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            CliError::Estimation(CoreError::NonFiniteValue { row: 1, .. })
        ));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ndjson_missing_fields() {
        let err = parse_ndjson("{\"log_joint\":1}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Parse { row: 1, .. }));
        let err = parse_ndjson("{\"theta\":[1]}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Parse { row: 1, .. }));
        let err = parse_ndjson("not json\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Parse { row: 1, .. }));
    }

    #[test]
    fn write_then_parse_is_exact() {
        let rows = vec![
            EvaluatedSample::new(vec![0.1, -1.0 / 3.0], -1234.5678901234567),
            EvaluatedSample::new(vec![1e-300, 7.0], 0.0),
        ];
        for fmt in [SampleFormat::Csv, SampleFormat::Ndjson] {
            let mut buf = Vec::new();
            write_samples(&mut buf, &rows, fmt).unwrap();
            let back = parse_samples(buf.as_slice(), fmt).unwrap();
            assert_eq!(back.samples(), rows.as_slice());
        }
    }
}
