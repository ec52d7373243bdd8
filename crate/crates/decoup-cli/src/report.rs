use crate::config::{ExperimentConfig, Kind};
use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub type Row = Map<String, Value>;

/// Builds a row from `json!({...})`; every row carries a boolean `pass`.
pub fn row(v: Value) -> Row {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("rows are objects"),
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub kind: Kind,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    /// Whole-sweep checks beyond the per-row `pass` flags.
    pub checks: Vec<Check>,
    /// Extra summary fields such as growth fits.
    pub summary: Row,
}

impl Report {
    pub fn new(kind: Kind, config: ExperimentConfig) -> Self {
        Self { kind, config, rows: Vec::new(), checks: Vec::new(), summary: Row::new() }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.into(), pass });
    }

    fn row_pass(r: &Row) -> bool {
        r.get("pass").and_then(Value::as_bool).unwrap_or(false)
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !Self::row_pass(r)).count()
    }

    pub fn all_pass(&self) -> bool {
        self.failed_rows() == 0 && self.checks.iter().all(|c| c.pass)
    }

    pub fn jsonl_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.jsonl", self.kind.name()))
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.kind.name()))
    }

    pub fn to_jsonl(&self) -> String {
        let mut config = self.config.clone();
        config.experiment = Some(self.kind);
        config.out = None;
        let header = json!({
            "record": "header",
            "experiment": self.kind.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "rng": "ChaCha8Rng seeded from a 64-bit seed",
            "seeds": self.config.seed_list(),
            "config": config,
        });
        let mut lines = vec![header.to_string()];
        for r in &self.rows {
            let mut m = Row::new();
            m.insert("record".into(), "row".into());
            m.extend(r.clone());
            lines.push(Value::Object(m).to_string());
        }
        let mut summary = Row::new();
        summary.insert("record".into(), "summary".into());
        summary.insert("rows".into(), self.rows.len().into());
        summary.insert("failed_rows".into(), self.failed_rows().into());
        summary.insert(
            "checks".into(),
            Value::Array(self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass})).collect()),
        );
        summary.extend(self.summary.clone());
        summary.insert("all_pass".into(), self.all_pass().into());
        lines.push(Value::Object(summary).to_string());
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    /// Columns are the union of row keys in first-seen order; missing cells are empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut cols: Vec<String> = Vec::new();
        for r in &self.rows {
            for k in r.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&cols)?;
        for r in &self.rows {
            w.write_record(cols.iter().map(|c| cell(r.get(c))))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut f = std::fs::File::create(self.jsonl_path(dir))?;
        f.write_all(self.to_jsonl().as_bytes())?;
        self.write_csv(&self.csv_path(dir))
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}
