//! CSV matrix reader/writer: row-major RFC-4180 numeric tables, optional
//! header row, `.` decimal separator.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Read a numeric matrix happily with or without a single header row: if the
/// first record fails to parse as numbers it is treated as a header.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite value in csv row {idx}"
                    )));
                }
                rows.push(vals);
            }
            Err(_) if idx == 0 => continue, // header
            Err(e) => {
                return Err(Error::InvalidParameter(format!("csv row {idx} is not numeric: {e}")))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("csv contains no numeric rows".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("csv rows have inconsistent lengths".into()));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), cols, &data))
}

/// Write a matrix row-major, no header.
pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_float(m[(i, j)])).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Full round-trip precision without scientific-notation surprises for
/// common magnitudes.
pub fn format_float(v: f64) -> String {
    let s = format!("{v}");
    // `{}` on f64 is the shortest representation that round-trips
    s
}
