//! Trace ingestion from CSV files with header `t,y,sem[,label]`.

use crate::AppError;
use emlfit::trace::Trace;
use std::collections::BTreeMap;
use std::path::Path;

struct Row {
    line: u64,
    t: f64,
    y: f64,
    sem: f64,
    label: String,
}

fn parse_field(raw: &str, name: &str, line: u64) -> Result<f64, AppError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| AppError::Data(format!("line {line}: cannot parse {name} value '{raw}'")))
}

/// Read one trace per label, sorted by time, with floored weights and the
/// deterministic split attached. Empty `sem` fields count as missing and
/// trigger the documented flooring fallback when the whole column is empty.
pub fn read_traces(path: &Path, split_offset: usize) -> Result<Vec<Trace>, AppError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |name: &str| names.iter().position(|h| h == name);
    let (t_idx, y_idx, sem_idx) = match (find("t"), find("y"), find("sem")) {
        (Some(t), Some(y), Some(s)) => (t, y, s),
        _ => {
            return Err(AppError::Data(format!(
                "{}: header must contain columns t, y, sem (got '{}')",
                path.display(),
                names.join(",")
            )))
        }
    };
    let label_idx = find("label");
    let expected = 3 + usize::from(label_idx.is_some());
    if names.len() != expected {
        return Err(AppError::Data(format!(
            "{}: unexpected columns beyond t,y,sem[,label]: '{}'",
            path.display(),
            names.join(",")
        )));
    }

    let mut rows: Vec<Row> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(rows.len() as u64 + 2);
        if record.len() != names.len() {
            return Err(AppError::Data(format!(
                "line {line}: expected {} fields, got {}",
                names.len(),
                record.len()
            )));
        }
        let sem_raw = &record[sem_idx];
        let sem = if sem_raw.trim().is_empty() {
            0.0
        } else {
            parse_field(sem_raw, "sem", line)?
        };
        if sem < 0.0 {
            return Err(AppError::Data(format!("line {line}: sem must be nonnegative")));
        }
        rows.push(Row {
            line,
            t: parse_field(&record[t_idx], "t", line)?,
            y: parse_field(&record[y_idx], "y", line)?,
            sem,
            label: label_idx.map(|i| record[i].to_string()).unwrap_or_default(),
        });
    }
    if rows.is_empty() {
        return Err(AppError::Data(format!("{}: no data rows", path.display())));
    }

    let mut by_label: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for row in rows {
        by_label.entry(row.label.clone()).or_default().push(row);
    }

    let mut traces = Vec::new();
    for (label, mut group) in by_label {
        group.sort_by(|a, b| a.t.total_cmp(&b.t));
        for pair in group.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(AppError::Data(format!(
                    "label '{label}': non-increasing time at line {} (t = {})",
                    pair[1].line, pair[1].t
                )));
            }
        }
        let times: Vec<f64> = group.iter().map(|r| r.t).collect();
        let values: Vec<f64> = group.iter().map(|r| r.y).collect();
        let sems: Vec<f64> = group.iter().map(|r| r.sem).collect();
        let trace = Trace::new(label.clone(), times, values, sems, split_offset)
            .map_err(|e| AppError::Data(e.to_string()))?;
        traces.push(trace);
    }
    Ok(traces)
}

/// Attach doses for the dose-response embedding: explicit map first, then
/// numeric labels.
pub fn attach_doses(
    traces: Vec<Trace>,
    doses: &BTreeMap<String, f64>,
) -> Result<Vec<Trace>, AppError> {
    traces
        .into_iter()
        .map(|trace| {
            let dose = match doses.get(&trace.label) {
                Some(&d) => d,
                None => trace.label.parse::<f64>().map_err(|_| {
                    AppError::Config(format!(
                        "dose-ode embedding: no dose for label '{}' (add [embedding.doses])",
                        trace.label
                    ))
                })?,
            };
            if dose < 0.0 {
                return Err(AppError::Config(format!(
                    "dose for label '{}' must be nonnegative",
                    trace.label
                )));
            }
            Ok(trace.with_dose(dose))
        })
        .collect()
}
