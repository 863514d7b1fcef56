//! Semi-competing risks preparation. A subject with progression time `T`,
//! death time `T*` and censoring time `A` becomes the pair
//! `Y1 = min(T, T*, A)`, `δ1 = I(Y1 = T)` and `Y2 = min(T*, A)`,
//! `δ2 = I(Y2 = T*)`. Progression at the time of death counts as death only
//! and the subject is flagged.

use std::path::Path;

use serde::Serialize;
use survcop::data::{BivariateData, MarginData};

use crate::error::{CliError, Result};

/// One subject. `None` means the event was not observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subject {
    pub progression: Option<f64>,
    pub death: Option<f64>,
    pub censor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prepared {
    pub y1: f64,
    pub d1: bool,
    pub y2: f64,
    pub d2: bool,
    /// Progression and death coincide.
    pub tie: bool,
}

pub fn prepare_subject(s: &Subject) -> std::result::Result<Prepared, String> {
    for (name, t) in [("progression", s.progression), ("death", s.death), ("censor", s.censor)] {
        if let Some(t) = t {
            if !(t > 0.0) || !t.is_finite() {
                return Err(format!("{name} time {t} must be positive"));
            }
        }
    }
    let inf = f64::INFINITY;
    let (t, t_star, a) = (s.progression.unwrap_or(inf), s.death.unwrap_or(inf), s.censor.unwrap_or(inf));
    let y2 = t_star.min(a);
    if !y2.is_finite() {
        return Err("neither a death nor a censoring time is given".into());
    }
    let y1 = t.min(y2);
    let tie = s.progression.is_some() && t == t_star && t_star <= a;
    Ok(Prepared { y1, d1: t <= y2 && !tie, y2, d2: t_star <= a, tie })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepareSummary {
    pub subjects: usize,
    /// Subjects whose progression and death times coincide.
    pub ties: Vec<String>,
    pub tie_policy: &'static str,
    pub standardized: bool,
    pub covariates: Vec<String>,
    pub events: [usize; 2],
}

const REQUIRED: [&str; 4] = ["id", "progression", "death", "censor"];

/// Reads raw subjects from CSV with columns `id,progression,death,censor`
/// followed by covariates, which are copied to both margins. Empty event
/// times mean "not observed"; covariates may not be empty.
pub fn prepare_csv(text: &str, path: &Path, standardize: bool) -> Result<(BivariateData, PrepareSummary)> {
    let fail = |lines: Vec<String>| CliError::Dataset { path: path.to_path_buf(), lines };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> =
        reader.headers().map_err(|e| fail(vec![format!("line 1: {e}")]))?.iter().map(str::to_string).collect();
    if header.len() < REQUIRED.len() || header[..REQUIRED.len()] != REQUIRED {
        return Err(fail(vec![format!("line 1: header must start with {}", REQUIRED.join(","))]));
    }
    let names: Vec<String> = header[REQUIRED.len()..].to_vec();
    let mut ids = Vec::new();
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("line {}: {e}", e.position().map_or(0, |p| p.line())));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let mut problems = Vec::new();
        let mut time = |k: usize| -> Option<f64> {
            let s = record.get(k).unwrap_or("");
            if s.is_empty() {
                return None;
            }
            s.parse().map_err(|_| problems.push(format!("column {}: '{s}' is not a number", header[k]))).ok()
        };
        let subject = Subject { progression: time(1), death: time(2), censor: time(3) };
        let row: Vec<f64> = (REQUIRED.len()..header.len())
            .map(|k| match record.get(k).unwrap_or("") {
                "" => {
                    problems.push(format!("missing value in column {}", header[k]));
                    f64::NAN
                }
                s => s.parse().unwrap_or_else(|_| {
                    problems.push(format!("column {}: '{s}' is not a number", header[k]));
                    f64::NAN
                }),
            })
            .collect();
        if problems.is_empty() {
            match prepare_subject(&subject) {
                Ok(p) => {
                    ids.push(record.get(0).unwrap_or("").to_string());
                    out.push(p);
                    rows.push(row);
                }
                Err(e) => problems.push(e),
            }
        }
        if !problems.is_empty() {
            errors.push(format!("line {line}: {}", problems.join("; ")));
        }
    }
    if !errors.is_empty() {
        return Err(fail(errors));
    }
    if ids.is_empty() {
        return Err(fail(vec!["no data rows".into()]));
    }
    if standardize {
        standardize_columns(&mut rows, &names)?;
    }
    let ties: Vec<String> = ids.iter().zip(&out).filter(|(_, p)| p.tie).map(|(id, _)| id.clone()).collect();
    for id in &ties {
        log::warn!("subject {id}: progression and death coincide; treated as death only");
    }
    let m1 = MarginData::new(out.iter().map(|p| p.y1).collect(), out.iter().map(|p| p.d1).collect(), &rows, names.clone())?;
    let m2 = MarginData::new(out.iter().map(|p| p.y2).collect(), out.iter().map(|p| p.d2).collect(), &rows, names.clone())?;
    let summary = PrepareSummary {
        subjects: ids.len(),
        ties,
        tie_policy: "progression at the death time counts as death only",
        standardized: standardize,
        covariates: names,
        events: [m1.events(), m2.events()],
    };
    Ok((BivariateData::new(ids, m1, m2)?, summary))
}

/// Centers each column and scales it to unit sample standard deviation.
fn standardize_columns(rows: &mut [Vec<f64>], names: &[String]) -> Result<()> {
    let n = rows.len() as f64;
    for (k, name) in names.iter().enumerate() {
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        if !(var > 0.0) {
            return Err(CliError::Input(format!("covariate {name} is constant and cannot be standardized")));
        }
        let sd = var.sqrt();
        rows.iter_mut().for_each(|r| r[k] = (r[k] - mean) / sd);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prep(t: Option<f64>, ts: Option<f64>, a: Option<f64>) -> Prepared {
        prepare_subject(&Subject { progression: t, death: ts, censor: a }).unwrap()
    }

    #[test]
    fn progression_then_death() {
        let p = prep(Some(2.0), Some(5.0), Some(10.0));
        assert_eq!((p.y1, p.d1, p.y2, p.d2, p.tie), (2.0, true, 5.0, true, false));
    }

    #[test]
    fn censored_before_death() {
        let p = prep(None, Some(5.0), Some(3.0));
        assert_eq!((p.y1, p.d1, p.y2, p.d2), (3.0, false, 3.0, false));
    }

    #[test]
    fn tie_counts_as_death_only() {
        let p = prep(Some(4.0), Some(4.0), Some(10.0));
        assert_eq!((p.y1, p.d1, p.y2, p.d2, p.tie), (4.0, false, 4.0, true, true));
    }

    #[test]
    fn death_before_progression_censors_the_first_margin() {
        let p = prep(Some(6.0), Some(5.0), None);
        assert_eq!((p.y1, p.d1, p.y2, p.d2), (5.0, false, 5.0, true));
    }

    #[test]
    fn bad_times_are_rejected() {
        assert!(prepare_subject(&Subject { progression: Some(0.0), death: Some(1.0), censor: None }).is_err());
        assert!(prepare_subject(&Subject { progression: None, death: Some(-1.0), censor: Some(2.0) }).is_err());
        assert!(prepare_subject(&Subject { progression: Some(1.0), death: None, censor: None }).is_err());
    }

    #[test]
    fn csv_with_ties_and_standardization() {
        let text = "id,progression,death,censor,age\n\
                    p1,2,5,10,50\n\
                    p2,,5,3,60\n\
                    p3,4,4,10,70\n";
        let (d, s) = prepare_csv(text, Path::new("raw.csv"), true).unwrap();
        assert_eq!(s.ties, ["p3"]);
        assert_eq!(s.events, [1, 2]);
        assert_eq!(d.margin(0).names, ["age"]);
        assert_eq!(d.margin(1).row(0), [-1.0]);
        assert_eq!(d.margin(0).row(2), [1.0]);
        let e = prepare_csv("id,progression,death,censor\nq,0,1,2\n", Path::new("raw.csv"), false).unwrap_err();
        assert!(e.to_string().contains("line 2: progression time 0 must be positive"), "{e}");
    }
}
