//! CSV tables with a `#` metadata preamble. Floats use nine significant
//! digits in scientific notation so output bytes depend only on the values.

use std::path::Path;

use crate::error::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One table cell.
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(|e| CliError::io("csv", e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::io("csv", e))?;
        }
        w.into_inner().map_err(|e| CliError::io("csv", e))
    }

    pub fn write(&self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes).map_err(|e| CliError::io(path.display(), e))?;
        Ok(bytes)
    }
}

/// Reads a table written by [`Table::write`]: header plus string rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::io(path.display(), e))?;
    let header = r
        .headers()
        .map_err(|e| CliError::io(path.display(), e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path.display(), e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.00000000e-1");
        assert_eq!(fmt_f64(-115.364), "-1.15364000e2");
        assert_eq!(fmt_f64(0.0), "0.00000000e0");
        let v: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert!((v - std::f64::consts::PI).abs() < 5e-9);
    }

    #[test]
    fn preamble_then_csv() {
        let mut t = Table::new(&["step", "x"]).meta("seed", 3);
        t.push(vec![0usize.into(), 1.5.into()]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "# seed: 3\nstep,x\n0,1.50000000e0\n");
    }
}
