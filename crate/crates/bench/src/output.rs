//! Atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::BenchError;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| BenchError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| BenchError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| BenchError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| BenchError::io(path, e.error))?;
    Ok(())
}

/// Serializes `rows` as CSV with a header line.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    Ok(writer.into_inner().expect("writing to memory cannot fail"))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let bytes = csv_bytes(rows).map_err(|e| BenchError::io(path, std::io::Error::other(e)))?;
    write_atomic(path, &bytes)
}

/// `trace.csv`. An empty trace still gets its header.
pub fn write_trace(path: &Path, rows: &[crate::run::TraceRow]) -> Result<(), BenchError> {
    if rows.is_empty() {
        return write_atomic(path, b"k,res_norm,merit,tau,backtracks,oracle_calls,time_s\n");
    }
    write_csv(path, rows)
}
