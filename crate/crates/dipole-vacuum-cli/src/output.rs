//! CSV tables with a `#` metadata block, and JSON-lines records.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub struct Metadata<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub units: String,
}

pub fn render_csv(meta: &Metadata<'_>, table: &Table) -> String {
    let mut s = String::new();
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(s, "# dipvac {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# command: {}", meta.command);
    let _ = writeln!(s, "# config_sha256: {}", meta.config_hash);
    let _ = writeln!(s, "# units: {}", meta.units);
    let _ = writeln!(s, "# generated_unix: {stamp}");
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for r in &table.rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(contents.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![num(1.0), num(0.25)]);
        let meta = Metadata {
            command: "x",
            config_hash: "abc",
            units: "none".into(),
        };
        let s = render_csv(&meta, &t);
        let data: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["a,b", "1e0,2.5e-1"]);
        assert!(s.contains("# config_sha256: abc"));
    }
}
