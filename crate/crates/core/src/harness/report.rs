//! CSV output of sweep results.

use std::fs::{File, OpenOptions};
use std::path::Path;

use super::{SweepResult, SweepRow};
use crate::{Error, Result};

/// Column names, in order.
pub const CSV_HEADER: [&str; 10] = [
    "snr_db",
    "modulation",
    "order",
    "n_symbols",
    "alpha",
    "m_lags",
    "trials",
    "p_reject",
    "ci_lo",
    "ci_hi",
];

fn csv_error(path: &Path, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_rows(file: File, path: &Path, rows: &[SweepRow], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if header {
        w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the header and every row in grid order, replacing any existing file.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(file, path, &result.rows, true)
}

/// Appends rows, writing the header first only when the file is new or empty.
pub fn append_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let needs_header = match std::fs::metadata(path) {
        Ok(meta) => meta.len() == 0,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => true,
        Err(e) => return Err(Error::io(path, e)),
    };
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    write_rows(file, path, &result.rows, needs_header)
}

/// Reads a file written by [`emit_csv`] or [`append_csv`].
pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Modulation;

    fn row(snr_db: f64, p: f64) -> SweepRow {
        SweepRow {
            snr_db,
            modulation: Modulation::ScQam,
            order: 32,
            n_symbols: 1024,
            alpha: 0.01,
            m_lags: 6,
            trials: 200,
            p_reject: p,
            ci_lo: p * 0.9,
            ci_hi: (p * 1.1).min(1.0),
        }
    }

    #[test]
    fn empty_result_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&SweepResult::default(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
        assert_eq!(read_csv(&path).unwrap(), SweepResult::default());
    }

    #[test]
    fn round_trip_and_column_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let result = SweepResult {
            rows: vec![row(-4.0, 0.125), row(0.5, 0.9), row(15.0, 1.0)],
        };
        emit_csv(&result, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), result);
        let text = std::fs::read_to_string(&path).unwrap();
        for line in text.lines() {
            assert_eq!(line.split(',').count(), 10, "{line}");
        }
        assert!(text.lines().nth(1).unwrap().starts_with("-4.0,sc-qam,32,1024,0.01,6,200,0.125,"));
    }

    #[test]
    fn append_adds_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let a = SweepResult { rows: vec![row(1.0, 0.5)] };
        let b = SweepResult { rows: vec![row(2.0, 0.75)] };
        append_csv(&a, &path).unwrap();
        append_csv(&b, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.rows, vec![a.rows[0].clone(), b.rows[0].clone()]);
    }

    #[test]
    fn errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("no/such/dir/out.csv");
        let err = emit_csv(&SweepResult::default(), &missing).unwrap_err();
        assert!(err.to_string().contains("out.csv"));
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "a,b\n1,2\n").unwrap();
        assert!(read_csv(&bad).unwrap_err().is_config());
    }
}
