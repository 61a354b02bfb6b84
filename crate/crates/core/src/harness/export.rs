//! Result persistence: tidy CSV with a fixed column set, and JSON that
//! mirrors the records losslessly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::experiment::ResultRecord;

/// CSV column order; capacity columns `ipc_1..ipc_6` hold the per-degree
/// sums (0 where a config evaluated fewer degrees).
pub const CSV_COLUMNS: [&str; 17] = [
    "parameter",
    "seed",
    "ham_index",
    "ipc_1",
    "ipc_2",
    "ipc_3",
    "ipc_4",
    "ipc_5",
    "ipc_6",
    "ipc_linear",
    "ipc_nonlinear",
    "ipc_total",
    "nrmse_lxx",
    "nrmse_lxz",
    "nrmse_mg",
    "runtime_s",
    "config_hash",
];

/// 17 significant digits: enough to round-trip any f64 exactly.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_optional(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn io_context<T>(r: std::io::Result<T>, path: &Path) -> Result<T> {
    r.map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// Renders records as CSV text with the documented column set.
pub fn csv_string(records: &[ResultRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let degree = |d: usize| fmt_float(r.ipc.per_degree.get(d).copied().unwrap_or(0.0));
        w.write_record([
            fmt_optional(r.parameter),
            r.seed.to_string(),
            r.ham_index.to_string(),
            degree(0),
            degree(1),
            degree(2),
            degree(3),
            degree(4),
            degree(5),
            fmt_float(r.ipc.linear),
            fmt_float(r.ipc.nonlinear),
            fmt_float(r.ipc.total),
            fmt_optional(r.nrmse_lxx),
            fmt_optional(r.nrmse_lxz),
            fmt_optional(r.nrmse_mg),
            fmt_float(r.runtime_s),
            r.config_hash.clone(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidConfig(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidConfig(format!("csv encoding: {e}")))
}

/// Writes records as CSV with the documented column set.
pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let text = csv_string(records)?;
    io_context(std::fs::write(path, text), path)
}

/// Writes records as a JSON array preserving every field.
pub fn write_json(records: &[ResultRecord], path: &Path) -> Result<()> {
    let file = io_context(File::create(path), path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, records)?;
    io_context(w.write_all(b"\n"), path)?;
    io_context(w.flush(), path)?;
    Ok(())
}

/// Reads back a JSON export.
pub fn read_json(path: &Path) -> Result<Vec<ResultRecord>> {
    let file = io_context(File::open(path), path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Output formats selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// Writes records in the requested format.
pub fn export(records: &[ResultRecord], format: ExportFormat, path: &Path) -> Result<()> {
    match format {
        ExportFormat::Csv => write_csv(records, path),
        ExportFormat::Json => write_json(records, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipc::IpcReport;

    fn sample_record(i: usize) -> ResultRecord {
        ResultRecord {
            parameter: Some(0.1 * i as f64 + 0.123456789012345678),
            seed: 42,
            ham_index: i,
            ipc: IpcReport {
                per_degree: vec![5.1, 2.2, 0.3, 0.0, 0.0, 0.0],
                linear: 5.1,
                nonlinear: 2.5,
                total: 7.6,
                cutoff_value: 0.01,
                n_targets_evaluated: 100,
                n_targets_surviving: 7,
                n_readouts: 120,
            },
            nrmse_lxx: Some(1.0 / 3.0),
            nrmse_lxz: None,
            nrmse_mg: Some(0.05),
            runtime_s: 1.25,
            config_hash: "deadbeefdeadbeef".into(),
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.json");
        let records: Vec<ResultRecord> = (0..3).map(sample_record).collect();
        write_json(&records, &path).unwrap();
        let back = read_json(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn csv_has_fixed_header_and_full_precision_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records = vec![sample_record(0)];
        write_csv(&records, &path).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let headers = reader.headers().unwrap().clone();
        assert_eq!(headers.iter().collect::<Vec<_>>(), CSV_COLUMNS.to_vec());
        let row = reader.records().next().unwrap().unwrap();
        let parameter: f64 = row[0].parse().unwrap();
        assert_eq!(parameter, records[0].parameter.unwrap());
        let lxx: f64 = row[12].parse().unwrap();
        assert_eq!(lxx, 1.0 / 3.0);
        assert_eq!(&row[13], "");
        assert_eq!(&row[16], "deadbeefdeadbeef");
    }

    #[test]
    fn empty_record_list_yields_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("parameter,seed,ham_index"));
    }
}
