//! Whole-file atomic artifact writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory; every write goes to a temporary file in the same
/// directory and is renamed into place.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.path(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)
            .with_context(|| format!("creating a temporary file in {}", self.root.display()))?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        tmp.persist(&target).with_context(|| format!("renaming into {}", target.display()))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write_bytes(name, &table.to_csv()?)
    }
}

/// A CSV cell: numbers are written with 17 significant digits.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
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
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

/// Numeric view of a CSV file, used by the plotting code.
#[derive(Debug, Clone)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
    pub text: Vec<Vec<String>>,
}

impl NumericTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); header.len()];
        let mut text = vec![Vec::new(); header.len()];
        for record in r.records() {
            let record = record?;
            for (i, field) in record.iter().enumerate().take(header.len()) {
                columns[i].push(field.parse::<f64>().ok());
                text[i].push(field.to_string());
            }
        }
        Ok(Self { header, columns, text })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn numbers(&self, col: usize) -> Vec<f64> {
        self.columns[col].iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        let mut t = Table::new(["x", "label", "k"]);
        let vals = [std::f64::consts::PI, -1e-300, 0.1 + 0.2];
        for (i, v) in vals.iter().enumerate() {
            t.push(vec![(*v).into(), format!("r{i}").into(), i.into()]);
        }
        let path = out.write_table("t.csv", &t).unwrap();
        let back = NumericTable::read(&path).unwrap();
        assert_eq!(back.numbers(0), vals.to_vec());
        assert_eq!(back.text[1], vec!["r0", "r1", "r2"]);
        let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
