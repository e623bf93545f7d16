//! Tabular results and their table, CSV and JSON renderings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Text(v.to_string())
        }
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    /// Per-column override of the number of decimals.
    #[serde(default)]
    pub digits: Vec<Option<usize>>,
    pub rows: Vec<Vec<Cell>>,
}

/// Fixed notation for ordinary magnitudes, scientific otherwise.
pub fn format_number(x: f64, precision: usize) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e12).contains(&a) {
        format!("{x:.precision$}")
    } else {
        format!("{x:.precision$e}")
    }
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            meta: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            digits: vec![None; columns.len()],
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn digits(&mut self, column: &str, digits: usize) -> &mut Self {
        if let Some(i) = self.columns.iter().position(|c| c == column) {
            self.digits[i] = Some(digits);
        }
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> &mut Self {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
        self
    }

    fn column_digits(&self, j: usize, precision: usize) -> usize {
        self.digits.get(j).copied().flatten().unwrap_or(precision)
    }

    fn text(&self, j: usize, cell: &Cell, precision: usize) -> String {
        match cell {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_number(*v, self.column_digits(j, precision)),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    /// Numbers replaced by the values their printed form denotes.
    pub fn rounded(&self, precision: usize) -> Report {
        let mut out = self.clone();
        for row in &mut out.rows {
            for (j, cell) in row.iter_mut().enumerate() {
                if let Cell::Num(v) = cell {
                    let s = format_number(*v, self.column_digits(j, precision));
                    *v = s.parse().expect("formatted number parses");
                }
            }
        }
        out
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Table => self.render_table(precision),
            Format::Csv => self.render_csv(precision),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.rounded(precision)).expect("report serialises");
                s.push('\n');
                s
            }
        }
    }

    fn render_table(&self, precision: usize) -> String {
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, c)| self.text(j, c, precision)).collect())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| body.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|j| self.rows.iter().all(|r| matches!(r[j], Cell::Int(_) | Cell::Num(_) | Cell::Missing)))
            .collect();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    if numeric[j] {
                        format!("{c:>w$}", w = widths[j])
                    } else {
                        format!("{c:<w$}", w = widths[j])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("{k}: {v}\n"));
        }
        if !self.meta.is_empty() {
            out.push('\n');
        }
        out.push_str(&line(&self.columns));
        out.push('\n');
        out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
        out.push('\n');
        for r in &body {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    fn render_csv(&self, precision: usize) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            let rec: Vec<String> = r.iter().enumerate().map(|(j, c)| self.text(j, c, precision)).collect();
            w.write_record(&rec).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
        out
    }
}
