//! Delimited reports, plot-data tables and the machine-readable summary.
//!
//! `report.tsv` holds `category<TAB>key<TAB>value` rows where the category is
//! `reference` (quantities with a published counterpart) or `diagnostic`.
//! `summary.toml` carries the same values and is byte-identical for
//! identical configs; wall-clock data goes to `metadata.toml` only.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use toml::{Table, Value as TomlValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Reference,
    Diagnostic,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Reference => "reference",
            Category::Diagnostic => "diagnostic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Value {
    fn to_toml(&self) -> TomlValue {
        match self {
            Value::Int(i) => TomlValue::Integer(*i),
            Value::UInt(u) => match i64::try_from(*u) {
                Ok(i) => TomlValue::Integer(i),
                Err(_) => TomlValue::String(u.to_string()),
            },
            Value::Float(x) if x.is_finite() => TomlValue::Float(*x),
            Value::Float(x) => TomlValue::String(x.to_string()),
            Value::Bool(b) => TomlValue::Boolean(*b),
            Value::Str(s) => TomlValue::String(s.clone()),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::UInt(u) => write!(f, "{u}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub category: Category,
    pub key: String,
    pub value: Value,
}

/// Plot-data or listing table written to `<name>.tsv`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Builds a table row from displayable cells.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(format!("{}", $x)),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub lines: Vec<Line>,
    pub tables: Vec<DataTable>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self { command: command.into(), lines: Vec::new(), tables: Vec::new() }
    }

    pub fn reference(&mut self, key: &str, value: impl Into<Value>) {
        self.lines.push(Line { category: Category::Reference, key: key.into(), value: value.into() });
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Value>) {
        self.lines.push(Line { category: Category::Diagnostic, key: key.into(), value: value.into() });
    }

    pub fn table(&mut self, t: DataTable) {
        self.tables.push(t);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.lines.iter().find(|l| l.key == key).map(|l| &l.value)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tkey\tvalue\n");
        for l in &self.lines {
            let _ = writeln!(out, "{}\t{}\t{}", l.category.name(), l.key, l.value);
        }
        out
    }

    /// Deterministic TOML: top-level `command`, then one table per category.
    pub fn to_summary(&self) -> String {
        let mut doc = Table::new();
        doc.insert("command".into(), TomlValue::String(self.command.clone()));
        for cat in [Category::Reference, Category::Diagnostic] {
            let mut t = Table::new();
            for l in self.lines.iter().filter(|l| l.category == cat) {
                t.insert(l.key.clone(), l.value.to_toml());
            }
            doc.insert(cat.name().into(), TomlValue::Table(t));
        }
        let mut tables = Table::new();
        for t in &self.tables {
            tables.insert(t.name.clone(), TomlValue::String(format!("{}.tsv", t.name)));
        }
        doc.insert("tables".into(), TomlValue::Table(tables));
        toml::to_string(&doc).expect("plain values serialize")
    }

    /// Writes `report.tsv`, `summary.toml`, every table and `metadata.toml`.
    pub fn write(&self, dir: &Path, metadata: &Table) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> io::Result<()> {
            let p = dir.join(name);
            fs::write(&p, body)?;
            written.push(p);
            Ok(())
        };
        put("report.tsv".into(), self.to_tsv())?;
        put("summary.toml".into(), self.to_summary())?;
        for t in &self.tables {
            put(format!("{}.tsv", t.name), t.to_tsv())?;
        }
        put("metadata.toml".into(), toml::to_string(metadata).expect("plain values serialize"))?;
        Ok(written)
    }
}
