//! Assertions, CSV tables and the summary files of a run.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured <= threshold`
    AtMost,
    /// `measured >= threshold`
    AtLeast,
    /// `lo <= measured <= hi`
    Between,
}

/// One declared pass/fail criterion with its measured value.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub description: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    /// Upper end of the interval for [`Relation::Between`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, measured: f64, relation: Relation, threshold: f64, upper: Option<f64>) -> Self {
        let pass = match relation {
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Between => measured >= threshold && measured <= upper.unwrap_or(f64::NAN),
        };
        Self { name: name.into(), description: String::new(), measured, relation, threshold, upper, pass }
    }

    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, threshold, None)
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::AtLeast, threshold, None)
    }

    pub fn between(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, measured, Relation::Between, lo, Some(hi))
    }

    /// Human form of the requirement, e.g. `<= 0.05`.
    pub fn requirement(&self) -> String {
        match self.relation {
            Relation::AtMost => format!("<= {:e}", self.threshold),
            Relation::AtLeast => format!(">= {:e}", self.threshold),
            Relation::Between => format!("in [{}, {}]", self.threshold, self.upper.unwrap_or(f64::NAN)),
        }
    }
}

/// Named CSV output. Cells are preformatted so reruns are byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Formats a number for a table cell: shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Everything a recipe produces.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Headline numbers for the summary, e.g. fitted slopes.
    pub values: Vec<(String, f64)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: Experiment,
    version: &'a str,
    started_unix: u64,
    config: &'a ExperimentConfig,
    assertions: Vec<DeclaredAssertion<'a>>,
}

#[derive(Serialize)]
struct DeclaredAssertion<'a> {
    name: &'a str,
    description: &'a str,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: Experiment,
    passed: bool,
    assertions: &'a [Check],
    values: &'a [(String, f64)],
    tables: Vec<&'a str>,
}

/// Writes `manifest.json` with the declared assertions. Called before the
/// experiment starts, so the criteria cannot depend on the results.
pub fn write_manifest(dir: &Path, config: &ExperimentConfig, declared: &[(&str, &str)], version: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let started_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        experiment: config.experiment,
        version,
        started_unix,
        config,
        assertions: declared.iter().map(|&(name, description)| DeclaredAssertion { name, description }).collect(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}

/// Writes every table, `summary.json` and `summary.md`.
pub fn emit_report(dir: &Path, experiment: Experiment, outcome: &Outcome) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for t in &outcome.tables {
        fs::write(dir.join(&t.file), t.to_csv()?)?;
    }
    let summary = Summary {
        experiment,
        passed: outcome.passed(),
        assertions: &outcome.checks,
        values: &outcome.values,
        tables: outcome.tables.iter().map(|t| t.file.as_str()).collect(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    fs::write(dir.join("summary.md"), markdown(experiment, outcome))?;
    Ok(())
}

/// Tables longer than this are only referenced from the markdown summary.
const INLINE_ROWS: usize = 40;

fn markdown(experiment: Experiment, outcome: &Outcome) -> String {
    let mut s = String::new();
    let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "# {experiment}: {verdict}\n");
    if outcome.checks.is_empty() {
        s.push_str("No assertions.\n");
    } else {
        s.push_str("| assertion | measured | required | result |\n|---|---|---|---|\n");
        for c in &outcome.checks {
            let r = if c.pass { "pass" } else { "FAIL" };
            let _ = writeln!(s, "| {} | {:.6e} | {} | {r} |", c.name, c.measured, c.requirement());
        }
        s.push('\n');
        for c in &outcome.checks {
            let _ = writeln!(s, "- `{}`: {}", c.name, c.description);
        }
    }
    if !outcome.values.is_empty() {
        s.push_str("\n| quantity | value |\n|---|---|\n");
        for (n, v) in &outcome.values {
            let _ = writeln!(s, "| {n} | {v:.6e} |");
        }
    }
    for t in &outcome.tables {
        let _ = writeln!(s, "\n## {}\n", t.file);
        if t.rows.len() > INLINE_ROWS {
            let _ = writeln!(s, "{} rows, see the CSV file.", t.rows.len());
            continue;
        }
        let _ = writeln!(s, "| {} |", t.header.join(" | "));
        let _ = writeln!(s, "|{}|", vec!["---"; t.header.len()].join("|"));
        for r in &t.rows {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
        assert!(Check::at_least("a", 2.0, 1.0).pass);
        assert!(Check::between("a", 2.0, 1.5, 3.0).pass);
        assert!(!Check::between("a", 3.5, 1.5, 3.0).pass);
    }

    #[test]
    fn empty_report_is_valid() {
        let dir = std::env::temp_dir().join(format!("scbf-report-{}", std::process::id()));
        let out = Outcome::default();
        assert!(out.passed());
        emit_report(&dir, Experiment::Identities, &out).unwrap();
        let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["passed"], true);
        assert!(fs::read_to_string(dir.join("summary.md")).unwrap().contains("No assertions"));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn tables_render_as_csv_and_markdown() {
        let mut t = Table::new("usc.csv", &["epsilon", "distance", "std_error"]);
        t.push(vec![num(0.5), num(0.25), num(0.01)]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "epsilon,distance,std_error\n0.5,0.25,0.01\n");
        let out = Outcome { tables: vec![t], ..Default::default() };
        let md = markdown(Experiment::Usc, &out);
        assert!(md.contains("| epsilon | distance | std_error |"));
        assert!(md.contains("| 0.5 | 0.25 | 0.01 |"));
    }
}
