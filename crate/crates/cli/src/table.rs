//! Flat CSV tables: UTF-8, comma separated, `.` decimals, `\n` line ends.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        match self.header.iter().position(|h| h == name) {
            Some(i) => Ok(i),
            None => bail!("no column {name:?} in {:?}", self.header),
        }
    }

    /// Column `name` parsed as numbers.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .with_context(|| format!("column {name:?}: {:?} is not a number", r[i]))
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                bail!(
                    "row has {} fields, header has {}",
                    row.len(),
                    self.header.len()
                );
            }
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(&bytes)?;
        Ok(())
    }

    /// Read a table, requiring a header and the same field count on every line.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(bytes);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            bail!("missing header row");
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}
