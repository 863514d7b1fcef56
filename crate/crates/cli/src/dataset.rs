//! Dataset files: a header `cluster_id,y1,d1,y2,d2` followed by the
//! covariates of margin 1 (`x1_*`) and then of margin 2 (`x2_*`).

use std::path::Path;

use survcop::data::{BivariateData, MarginData};

use crate::error::{CliError, Result};
use crate::report::write_atomic;

const FIXED: [&str; 5] = ["cluster_id", "y1", "d1", "y2", "d2"];
/// Diagnostics beyond this many lines are summarized.
const MAX_DIAGNOSTICS: usize = 20;

pub fn read_dataset(path: &Path) -> Result<BivariateData> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(&text, path)
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<BivariateData> {
    let fail = |lines: Vec<String>| CliError::Dataset { path: path.to_path_buf(), lines };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> =
        reader.headers().map_err(|e| fail(vec![format!("line 1: {e}")]))?.iter().map(str::to_string).collect();
    if header.len() < FIXED.len() || header[..FIXED.len()] != FIXED {
        return Err(fail(vec![format!("line 1: header must start with {}", FIXED.join(","))]));
    }
    let covariates = &header[FIXED.len()..];
    let split = covariates.iter().position(|c| !c.starts_with("x1_")).unwrap_or(covariates.len());
    if let Some(bad) = covariates[split..].iter().find(|c| !c.starts_with("x2_")) {
        return Err(fail(vec![format!(
            "line 1: covariate column '{bad}' must be named x1_* (margin 1) or x2_* (margin 2), margin 1 first"
        )]));
    }
    let names1: Vec<String> = covariates[..split].iter().map(|c| c[3..].to_string()).collect();
    let names2: Vec<String> = covariates[split..].iter().map(|c| c[3..].to_string()).collect();

    let mut ids = Vec::new();
    let (mut y, mut d) = ([Vec::new(), Vec::new()], [Vec::new(), Vec::new()]);
    let (mut x1, mut x2) = (Vec::new(), Vec::new());
    let mut errors = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let mut problems = Vec::new();
        let mut number = |k: usize| -> f64 {
            match record.get(k).unwrap_or("") {
                "" => {
                    problems.push(format!("missing value in column {}", header[k]));
                    f64::NAN
                }
                s => s.parse::<f64>().unwrap_or_else(|_| {
                    problems.push(format!("column {}: '{s}' is not a number", header[k]));
                    f64::NAN
                }),
            }
        };
        let y1 = number(1);
        let d1 = number(2);
        let y2 = number(3);
        let d2 = number(4);
        let row1: Vec<f64> = (0..split).map(|k| number(FIXED.len() + k)).collect();
        let row2: Vec<f64> = (split..covariates.len()).map(|k| number(FIXED.len() + k)).collect();
        for (name, t) in [("y1", y1), ("y2", y2)] {
            if t.is_finite() && t <= 0.0 {
                problems.push(format!("{name} = {t} must be positive"));
            }
        }
        for (name, v) in [("d1", d1), ("d2", d2)] {
            if !v.is_nan() && v != 0.0 && v != 1.0 {
                problems.push(format!("{name} = {v} must be 0 or 1"));
            }
        }
        if record.get(0).unwrap_or("").is_empty() {
            problems.push("missing cluster_id".into());
        }
        if !problems.is_empty() {
            errors.push(format!("line {line}: {}", problems.join("; ")));
            continue;
        }
        ids.push(record[0].to_string());
        y[0].push(y1);
        y[1].push(y2);
        d[0].push(d1 == 1.0);
        d[1].push(d2 == 1.0);
        x1.push(row1);
        x2.push(row2);
    }
    if !errors.is_empty() {
        let extra = errors.len().saturating_sub(MAX_DIAGNOSTICS);
        errors.truncate(MAX_DIAGNOSTICS);
        if extra > 0 {
            errors.push(format!("... and {extra} more lines"));
        }
        return Err(fail(errors));
    }
    if ids.is_empty() {
        return Err(fail(vec!["no data rows".into()]));
    }
    let [y1, y2] = y;
    let [d1, d2] = d;
    let m1 = MarginData::new(y1, d1, &x1, names1)?;
    let m2 = MarginData::new(y2, d2, &x2, names2)?;
    Ok(BivariateData::new(ids, m1, m2)?)
}

/// CSV text of `data`. Numbers use the shortest representation that reads
/// back to the same value.
pub fn format_dataset(data: &BivariateData) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let [a, b] = &data.margins;
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(a.names.iter().map(|n| format!("x1_{n}")));
    header.extend(b.names.iter().map(|n| format!("x2_{n}")));
    let csv_err = |e: csv::Error| CliError::Input(format!("could not format dataset: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let flag = |d: bool| if d { "1" } else { "0" }.to_string();
    for i in 0..data.n() {
        let mut row = vec![data.ids[i].clone(), a.y[i].to_string(), flag(a.delta[i]), b.y[i].to_string(), flag(b.delta[i])];
        row.extend(a.row(i).iter().map(f64::to_string));
        row.extend(b.row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("could not format dataset: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_dataset(path: &Path, data: &BivariateData) -> Result<()> {
    write_atomic(path, format_dataset(data)?.as_bytes())
}
