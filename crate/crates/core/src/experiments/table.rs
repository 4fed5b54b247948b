//! CSV tables with RFC-4180 quoting and shortest round-trip float formatting.

use std::path::Path;

use crate::error::{EdgeError, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| EdgeError::Format(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| EdgeError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| EdgeError::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e7)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_when_needed() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["plain".into(), num(0.5)]);
        t.push(vec!["a,b \"c\"".into(), num(1e-12)]);
        assert_eq!(t.to_csv().unwrap(), "name,value\nplain,0.5\n\"a,b \"\"c\"\"\",1e-12\n");
    }
}
