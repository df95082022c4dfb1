//! Plain-text formats: headerless CSV matrices, a whitespace tensor format
//! and row-index mask files.
//!
//! Tensor files start with a `dims: n m1 m2` line followed by the `n·m1·m2`
//! entries in row-first order (last index fastest), separated by any
//! whitespace. Mask files hold one zero-based row index per line; blank
//! lines and `#` comments are ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use dlra_core::linalg::DenseMatrix;
use dlra_core::tensor::Tensor3;

use crate::error::{io_err, Result, ToolError};

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ToolError + '_ {
    move |source| ToolError::Csv { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> ToolError {
    ToolError::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(path, i + 1, format!("'{f}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "empty matrix"));
    }
    Ok(DenseMatrix::from_rows(&rows))
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:e}"))).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_tensor(path: &Path) -> Result<Tensor3> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (ln, header) = lines.next().ok_or_else(|| parse_err(path, 0, "empty tensor file"))?;
    let dims_text = header
        .trim()
        .strip_prefix("dims:")
        .ok_or_else(|| parse_err(path, ln + 1, "expected 'dims: n m1 m2'"))?;
    let dims: Vec<usize> = dims_text
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| parse_err(path, ln + 1, format!("dimension '{t}': {e}"))))
        .collect::<Result<_>>()?;
    let [n, m1, m2] = dims[..] else {
        return Err(parse_err(path, ln + 1, format!("expected 3 dimensions, got {}", dims.len())));
    };
    let mut values = Vec::with_capacity(n * m1 * m2);
    for (ln, line) in lines {
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|e| parse_err(path, ln + 1, format!("'{tok}': {e}")))?);
        }
    }
    Ok(Tensor3::new((n, m1, m2), values)?)
}

pub fn write_tensor(path: &Path, t: &Tensor3) -> Result<()> {
    let (n, m1, m2) = t.dims();
    let mut out = format!("dims: {n} {m1} {m2}\n");
    for chunk in t.as_slice().chunks(m2.max(1)) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_mask(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        rows.push(line.parse().map_err(|e| parse_err(path, i + 1, format!("row index '{line}': {e}")))?);
    }
    rows.sort_unstable();
    if rows.windows(2).any(|w| w[0] == w[1]) {
        return Err(parse_err(path, 0, "duplicate row index"));
    }
    Ok(rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
