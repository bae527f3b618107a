//! CSV and JSON output. Floats are written in shortest round-trip notation
//! so files re-read to the same bits and repeated runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::attractor::{ScanOutcome, ScanResult};
use crate::integrate::Trajectory;
use crate::model::State;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("serializing {what}: {source}")]
    Json { what: &'static str, source: serde_json::Error },
}

fn write_file(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

pub fn timeseries_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,P,Z,F\n");
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let _ = writeln!(out, "{t:?},{:?},{:?},{:?}", s.p, s.z, s.f);
    }
    out
}

pub fn write_timeseries_csv(traj: &Trajectory, path: &Path) -> Result<(), ReportError> {
    write_file(path, &timeseries_csv(traj))
}

pub fn read_timeseries_csv(path: &Path) -> Result<(Vec<f64>, Vec<State>), ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    let bad = |line: usize, reason: &str| ReportError::Parse { path: path.to_path_buf(), line, reason: reason.into() };
    let mut lines = text.lines();
    if lines.next() != Some("t,P,Z,F") {
        return Err(bad(1, "expected header 't,P,Z,F'"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (i, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(i + 2, "unparseable number"))?;
        let [t, p, z, f] = vals[..] else {
            return Err(bad(i + 2, "expected four columns"));
        };
        times.push(t);
        states.push(State::new(p, z, f));
    }
    Ok((times, states))
}

/// One row per grid value; peak levels joined by `;`.
pub fn scan_csv(scan: &ScanResult) -> String {
    let mut out = format!("{},status,kind,n,period_days,lambda1,P,Z,F,peaks\n", scan.param);
    for (v, outcome) in scan.values.iter().zip(&scan.summaries) {
        match outcome {
            ScanOutcome::Ok(s) => {
                let (n, period) = match s.kind {
                    crate::attractor::AttractorKind::PeriodicN { n, period_days } => {
                        (n.to_string(), format!("{period_days:?}"))
                    }
                    _ => (String::new(), String::new()),
                };
                let f = s.diagnostics.final_state;
                let peaks: Vec<String> = s.peak_values.iter().map(|p| format!("{p:?}")).collect();
                let _ = writeln!(
                    out,
                    "{v:?},ok,{},{n},{period},{:?},{:?},{:?},{:?},{}",
                    s.kind.label(),
                    s.lambda1,
                    f.p,
                    f.z,
                    f.f,
                    peaks.join(";")
                );
            }
            ScanOutcome::Failed { .. } => {
                let _ = writeln!(out, "{v:?},failed,,,,,,,,");
            }
        }
    }
    out
}

/// A JSON document stamped with the configuration fingerprint.
#[derive(Debug, Serialize)]
pub struct Stamped<'a, T: Serialize> {
    pub command: &'a str,
    pub fingerprint: &'a str,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_json<T: Serialize>(what: &'static str, value: &T) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| ReportError::Json { what, source })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(what: &'static str, value: &T, path: &Path) -> Result<(), ReportError> {
    write_file(path, &to_json(what, value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    write_file(path, text)
}
