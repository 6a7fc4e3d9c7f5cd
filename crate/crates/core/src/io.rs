//! CSV and report files.
//!
//! Every CSV starts with the line `# format=1`, then a header row, then
//! comma-separated numeric rows. Floats are written in shortest round-trip
//! form, so reading a file back reproduces the values bit for bit.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const FORMAT_LINE: &str = "# format=1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => Error::Config(format!("{}: malformed CSV ({other:?})", path.display())),
    }
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes a numeric table.
pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut buf = Vec::new();
    buf.extend_from_slice(FORMAT_LINE.as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| csv_err(path, e))?;
        for row in rows {
            if row.len() != header.len() {
                return Err(Error::Dimension(format!(
                    "{}: row of {} values under {} columns",
                    path.display(),
                    row.len(),
                    header.len()
                )));
            }
            w.write_record(row.iter().map(|v| format_float(*v)))
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(io_err(path))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// A table read back by [`read_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first = text.lines().next().unwrap_or_default();
    if first.trim() != FORMAT_LINE {
        return Err(Error::Config(format!(
            "{}: expected first line `{FORMAT_LINE}`, found `{first}`",
            path.display()
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = record
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("{}: data row {}: `{f}` is not a number", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Matrix with a leading 1-based `row_label` index column.
pub fn write_matrix(path: &Path, row_label: &str, col_names: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut header = vec![row_label.to_string()];
    header.extend(col_names.iter().cloned());
    write_csv(
        path,
        &header,
        m.row_iter().enumerate().map(|(i, r)| {
            let mut row = vec![(i + 1) as f64];
            row.extend(r.iter().copied());
            row
        }),
    )
}

/// Inverse of [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let t = read_csv(path)?;
    let cols = t.header.len().saturating_sub(1);
    if cols == 0 || t.rows.is_empty() {
        return Err(Error::Config(format!("{}: empty matrix", path.display())));
    }
    let data: Vec<f64> = t.rows.iter().flat_map(|r| r[1..].iter().copied()).collect();
    Ok(DMatrix::from_row_slice(t.rows.len(), cols, &data))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-300, -2.5e-7, 123456.789, 1e20, f64::MIN_POSITIVE, 1.0 / 3.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1e-7), "1e-7");
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_fn(3, 4, |i, j| ((i * 7 + j) as f64).sin() / 3.0 * 10f64.powi(j as i32 * 5 - 8));
        write_matrix(&path, "row", &numbered("c", 4), &m).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# format=1\nrow,c1,c2,c3,c4\n1,"));
        assert_eq!(read_matrix(&path).unwrap(), m);
    }

    #[test]
    fn missing_format_line_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Config(_))));
    }
}
