//! Plain-text CSV/JSON helpers shared by the symmetric and asymmetric formats.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_text(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    write_text(path, |w| writeln!(w, "{text}"))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// Headerless CSV, one matrix row per line.
pub(crate) fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, |w| {
        for row in m.row_iter() {
            let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    })
}

pub(crate) fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, n + 1, format!("bad number: {e}")))?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(path, n + 1, "non-finite value"));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    n + 1,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "empty matrix file"));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub(crate) const ENTRIES_HEADER: &str = "i,j,k,value";

pub(crate) fn write_entries_csv<'a>(
    path: &Path,
    entries: impl Iterator<Item = (usize, usize, usize, f64)> + 'a,
) -> Result<()> {
    write_text(path, |w| {
        writeln!(w, "{ENTRIES_HEADER}")?;
        for (i, j, k, v) in entries {
            writeln!(w, "{i},{j},{k},{}", fmt_f64(v))?;
        }
        Ok(())
    })
}

/// Parsed `(line number, i, j, k, value)` rows; `check` validates each row.
pub(crate) fn read_entries_csv(
    path: &Path,
    mut check: impl FnMut(usize, usize, usize) -> std::result::Result<(), String>,
) -> Result<Vec<(usize, usize, usize, f64)>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ENTRIES_HEADER => {}
        _ => return Err(parse_err(path, 1, format!("expected header `{ENTRIES_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(path, n + 1, format!("expected 4 fields, found {}", fields.len())));
        }
        let idx = |f: &str| {
            f.parse::<usize>()
                .map_err(|e| parse_err(path, n + 1, format!("bad index `{f}`: {e}")))
        };
        let (i, j, k) = (idx(fields[0])?, idx(fields[1])?, idx(fields[2])?);
        let v: f64 = fields[3]
            .parse()
            .map_err(|e| parse_err(path, n + 1, format!("bad value: {e}")))?;
        if !v.is_finite() {
            return Err(parse_err(path, n + 1, "non-finite value"));
        }
        check(i, j, k).map_err(|msg| parse_err(path, n + 1, msg))?;
        out.push((i, j, k, v));
    }
    Ok(out)
}
