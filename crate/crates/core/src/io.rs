//! File formats: telemetry CSV, datasets as JSON lines, JSON documents.
//!
//! A dataset file holds one JSON object per window with a `theta` array of
//! 0/1 flags and either a `window_path` to a telemetry CSV (relative to the
//! dataset file) or inline `omega` / `f_hat` arrays.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnomalyStatus, LabeledDataset, RawTelemetry, TelemetryWindow};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in BufReader::new(open(path)?).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes serializable rows as a CSV file with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct TelemetryRow {
    k: usize,
    omega: f64,
    f_hat: f64,
}

pub fn write_telemetry_csv(path: &Path, window: &TelemetryWindow) -> Result<()> {
    let rows: Vec<TelemetryRow> = window
        .omega()
        .iter()
        .zip(window.f_hat())
        .enumerate()
        .map(|(k, (&omega, &f_hat))| TelemetryRow { k, omega, f_hat })
        .collect();
    write_csv(path, &rows)
}

pub fn read_telemetry_csv(path: &Path) -> Result<TelemetryWindow> {
    let mut r = csv::Reader::from_reader(BufReader::new(open(path)?));
    let (mut omega, mut f_hat) = (Vec::new(), Vec::new());
    for row in r.deserialize() {
        let row: TelemetryRow = row?;
        omega.push(row.omega);
        f_hat.push(row.f_hat);
    }
    TelemetryWindow::new(omega, f_hat)
}

#[derive(Debug, Deserialize)]
struct RawRow {
    t: f64,
    omega: f64,
    #[serde(rename = "I")]
    current: f64,
    #[serde(rename = "V")]
    voltage: f64,
}

/// Reads a `t,omega,I,V` file; the wheel constants come from the caller.
pub fn read_raw_csv(path: &Path, inertia: f64, torque_constant: f64) -> Result<RawTelemetry> {
    let mut r = csv::Reader::from_reader(BufReader::new(open(path)?));
    let mut raw = RawTelemetry {
        t: Vec::new(),
        omega: Vec::new(),
        current: Vec::new(),
        voltage: Vec::new(),
        inertia,
        torque_constant,
    };
    for row in r.deserialize() {
        let row: RawRow = row?;
        raw.t.push(row.t);
        raw.omega.push(row.omega);
        raw.current.push(row.current);
        raw.voltage.push(row.voltage);
    }
    raw.validate()?;
    Ok(raw)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_hat: Option<Vec<f64>>,
    pub theta: AnomalyStatus,
}

/// Writes each window as `windows/run_NNNN.csv` under `dir` and the index
/// as `dir/dataset.jsonl`. Returns the index path.
pub fn write_dataset(dir: &Path, data: &LabeledDataset) -> Result<PathBuf> {
    let mut records = Vec::with_capacity(data.len());
    for (i, (w, status)) in data.entries.iter().enumerate() {
        let rel = format!("windows/run_{i:04}.csv");
        write_telemetry_csv(&dir.join(&rel), w)?;
        records.push(DatasetRecord {
            window_path: Some(rel),
            omega: None,
            f_hat: None,
            theta: status.clone(),
        });
    }
    let index = dir.join("dataset.jsonl");
    write_jsonl(&index, &records)?;
    Ok(index)
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let base = path.parent().unwrap_or(Path::new("."));
    let records: Vec<DatasetRecord> = read_jsonl(path)?;
    let mut entries = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        let w = match (r.window_path, r.omega, r.f_hat) {
            (Some(p), _, _) => read_telemetry_csv(&base.join(p))?,
            (None, Some(o), Some(f)) => TelemetryWindow::new(o, f)?,
            _ => {
                return Err(Error::InvalidTelemetry(format!(
                    "dataset record {i} has neither window_path nor omega/f_hat"
                )))
            }
        };
        entries.push((w, r.theta));
    }
    LabeledDataset::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telemetry_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let w = TelemetryWindow::new(vec![0.1, 1.0 / 3.0, -2.5e-7], vec![1.0, 2.0_f64.sqrt(), 1e300]).unwrap();
        write_telemetry_csv(&p, &w).unwrap();
        assert_eq!(read_telemetry_csv(&p).unwrap(), w);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("k,omega,f_hat\n0,"));
    }

    #[test]
    fn dataset_inline_and_path_records() {
        let dir = tempfile::tempdir().unwrap();
        let w = TelemetryWindow::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let data = LabeledDataset::new(vec![(w.clone(), AnomalyStatus::single(1, 2))]).unwrap();
        let idx = write_dataset(dir.path(), &data).unwrap();
        assert_eq!(read_dataset(&idx).unwrap(), data);

        let inline = dir.path().join("inline.jsonl");
        fs::write(&inline, "{\"omega\":[1.0,2.0],\"f_hat\":[3.0,4.0],\"theta\":[0,0,1]}\n").unwrap();
        assert_eq!(read_dataset(&inline).unwrap(), data);
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_telemetry_csv(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.csv"));
        assert!(!err.is_validation());
    }
}
