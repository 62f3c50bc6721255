//! CSV ingestion: a header row, then numeric rows. Columns are picked by name.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::Sample2D;

/// Numeric columns read from a CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

/// Reads the requested columns (all of them when `wanted` is empty).
/// Every selected cell must parse as a finite number; errors carry the
/// 1-based line number.
pub fn read_table<R: Read>(reader: R, wanted: &[&str]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("line 1: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Input("line 1: missing header row".into()));
    }
    let names: Vec<String> = if wanted.is_empty() {
        headers.iter().map(str::to_string).collect()
    } else {
        wanted.iter().map(|w| w.to_string()).collect()
    };
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers.iter().position(|h| h == n).ok_or_else(|| {
                Error::Input(format!(
                    "column '{n}' not found; available: {}",
                    headers.iter().collect::<Vec<_>>().join(", ")
                ))
            })
        })
        .collect::<Result<_>>()?;

    let mut columns = vec![Vec::new(); idx.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Input(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for (k, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                Error::Input(format!(
                    "line {line}: column '{}' has non-numeric value '{cell}'",
                    names[k]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Input(format!(
                    "line {line}: column '{}' is not finite",
                    names[k]
                )));
            }
            columns[k].push(v);
        }
    }
    Ok(Table { names, columns })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Paired sample from two named columns; the first two columns by default.
pub fn read_pairs<R: Read>(
    reader: R,
    x_col: Option<&str>,
    y_col: Option<&str>,
) -> Result<Sample2D> {
    let t = match (x_col, y_col) {
        (Some(x), Some(y)) => read_table(reader, &[x, y])?,
        _ => {
            let all = read_table(reader, &[])?;
            let pick = |name: Option<&str>, default: usize| -> Result<usize> {
                match name {
                    Some(n) => all
                        .names
                        .iter()
                        .position(|h| h == n)
                        .ok_or_else(|| Error::Input(format!("column '{n}' not found"))),
                    None if default < all.names.len() => Ok(default),
                    None => Err(Error::Input("need at least two columns".into())),
                }
            };
            let (i, j) = (pick(x_col, 0)?, pick(y_col, 1)?);
            Table {
                names: vec![all.names[i].clone(), all.names[j].clone()],
                columns: vec![all.columns[i].clone(), all.columns[j].clone()],
            }
        }
    };
    Sample2D::from_columns(&t.columns[0], &t.columns[1])
}

pub fn load_pairs(path: &Path, x_col: Option<&str>, y_col: Option<&str>) -> Result<Sample2D> {
    read_pairs(open(path)?, x_col, y_col)
}

/// One named column; the first by default.
pub fn read_column<R: Read>(reader: R, col: Option<&str>) -> Result<Vec<f64>> {
    let mut t = match col {
        Some(c) => read_table(reader, &[c])?,
        None => read_table(reader, &[])?,
    };
    if t.columns.is_empty() {
        return Err(Error::Input("no columns".into()));
    }
    Ok(t.columns.swap_remove(0))
}

pub fn load_column(path: &Path, col: Option<&str>) -> Result<Vec<f64>> {
    read_column(open(path)?, col)
}

/// `x,y` CSV text at full precision.
pub fn write_pairs(s: &Sample2D) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in s.pairs() {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}
