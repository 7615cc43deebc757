//! Report model and its CSV / aligned-text renderings.
//!
//! Cells are formatted once, when a table is built, so both renderings
//! print identical digits.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use optofabric::link_budget::reported_ber;

use crate::error::{CliError, CliResult};
use crate::input::Reference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell lookup by row index and column name.
    pub fn cell(&self, row: usize, column: &str) -> Option<&str> {
        let c = self.column(column)?;
        self.rows.get(row).map(|r| r[c].as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for r in &self.rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    s.push_str(&format!("{cell:<w$}"));
                } else {
                    s.push_str(&format!("  {cell:>w$}"));
                }
            }
            s.trim_end().to_owned() + "\n"
        };
        let mut out = line(&self.columns);
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: String, input_digest: String) -> Self {
        Self {
            command,
            input_digest,
            ..Default::default()
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "command: optofabric {}\ninput sha256: {}\n",
            self.command, self.input_digest
        );
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for t in &self.tables {
            out.push_str(&format!("\n[{}]\n", t.name));
            if t.rows.is_empty() {
                out.push_str("(no rows)\n");
            } else {
                out.push_str(&t.to_text());
            }
        }
        if !self.notes.is_empty() {
            out.push_str("\nnotes:\n");
            for n in &self.notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        out
    }

    /// The primary (first) table as plain CSV; empty if there is none.
    pub fn render_csv(&self) -> String {
        self.tables.first().map(Table::to_csv).unwrap_or_default()
    }

    /// Files this report writes into an output directory.
    pub fn files(&self, stem: &str, format: Format) -> Vec<(String, String)> {
        match format {
            Format::Text => vec![(format!("{stem}.txt"), self.render_text())],
            Format::Csv => self
                .tables
                .iter()
                .map(|t| (format!("{stem}_{}.csv", t.name), t.to_csv()))
                .collect(),
        }
    }
}

/// Write each file via a temporary in the same directory, then rename.
pub fn write_atomically(dir: &Path, files: &[(String, String)]) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let target = dir.join(name);
        let io =
            |e: std::io::Error| CliError::input(format!("cannot write {}: {e}", target.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        written.push(target);
    }
    Ok(written)
}

/// Fixed decimals without a `-0.00`.
pub fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_owned(),
        _ => s,
    }
}

pub fn db(v: f64) -> String {
    fixed(v, 2)
}

/// Scientific notation, three significant digits.
pub fn ber(v: f64) -> String {
    format!("{:.2e}", reported_ber(v))
}

/// Up to `decimals` places, trailing zeros dropped.
pub fn num(v: f64, decimals: usize) -> String {
    let s = fixed(v, decimals);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

pub fn flag(b: bool) -> String {
    if b { "yes" } else { "no" }.to_owned()
}

/// Values computed by a command, keyed by (item, quantity).
pub type Computed = BTreeMap<(String, String), f64>;

pub fn key(item: impl Into<String>, quantity: &str) -> (String, String) {
    (item.into(), quantity.to_owned())
}

/// Pair references with computed values: a long table with one `computed`
/// and one `reference` row per matched quantity, and a note for every
/// difference beyond tolerance. References for quantities the command does
/// not produce are skipped.
pub fn provenance(computed: &Computed, refs: &[Reference], notes: &mut Vec<String>) -> Table {
    let mut t = Table::new("provenance", &["item", "quantity", "value", "provenance"]);
    for r in refs {
        let Some(&v) = computed.get(&key(r.item.as_str(), &r.quantity)) else {
            continue;
        };
        t.push(vec![
            r.item.clone(),
            r.quantity.clone(),
            num(v, 4),
            "computed".into(),
        ]);
        t.push(vec![
            r.item.clone(),
            r.quantity.clone(),
            num(r.value, 6),
            "reference".into(),
        ]);
        let diff = v - r.value;
        if diff.abs() > r.tolerance() {
            let mut n = format!(
                "discrepancy: {} {}: computed {} vs reference {} (difference {}, tolerance {})",
                r.item,
                r.quantity,
                num(v, 4),
                num(r.value, 6),
                num(diff, 4),
                num(r.tolerance(), 4)
            );
            if let Some(extra) = &r.note {
                n.push_str(&format!("; {extra}"));
            }
            notes.push(n);
        } else if let Some(extra) = &r.note {
            notes.push(format!("{} {}: {extra}", r.item, r.quantity));
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(db(-0.001), "0.00");
        assert_eq!(db(18.1028), "18.10");
        assert_eq!(ber(1e-12), "1.00e-12");
        assert_eq!(ber(1e-320), "0.00e0");
        assert_eq!(num(0.5, 4), "0.5");
        assert_eq!(num(1260.0, 4), "1260");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",1\n");
    }

    #[test]
    fn text_alignment() {
        let mut t = Table::new("t", &["name", "v"]);
        t.push(vec!["long-name".into(), "1.00".into()]);
        t.push(vec!["n".into(), "10.00".into()]);
        assert_eq!(
            t.to_text(),
            "name           v\nlong-name   1.00\nn          10.00\n"
        );
    }

    #[test]
    fn provenance_flags_beyond_tolerance() {
        let mut computed = Computed::new();
        computed.insert(key("20 Gbps", "optical_fraction"), 0.7492);
        computed.insert(key("10 Gbps", "optical_fraction"), 0.381);
        let refs = vec![
            Reference {
                item: "20 Gbps".into(),
                quantity: "optical_fraction".into(),
                value: 0.83,
                tolerance: Some(0.01),
                note: None,
            },
            Reference {
                item: "10 Gbps".into(),
                quantity: "optical_fraction".into(),
                value: 0.38,
                tolerance: Some(0.01),
                note: None,
            },
            Reference {
                item: "absent".into(),
                quantity: "x".into(),
                value: 1.0,
                tolerance: None,
                note: None,
            },
        ];
        let mut notes = vec![];
        let t = provenance(&computed, &refs, &mut notes);
        assert_eq!(t.rows.len(), 4);
        assert_eq!(notes.len(), 1);
        assert!(notes[0].starts_with("discrepancy: 20 Gbps"));
    }
}
