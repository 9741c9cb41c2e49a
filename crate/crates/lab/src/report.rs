//! Sweep reports and their on-disk form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scl_core::fmt::sci;
use scl_core::{Error, Result};

use crate::fit::{self, Fit, FitKind};
use crate::spec::ScenarioSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub j: u32,
    pub h: f64,
    /// Aligned with `SweepReport::columns`.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub observable: String,
    pub against: String,
    pub fit: Fit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub created_unix: u64,
}

impl Provenance {
    pub fn now() -> Self {
        let created_unix = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()).unwrap_or_else(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
        });
        Self { code_version: env!("CARGO_PKG_VERSION").to_string(), created_unix }
    }
}

/// A named CSV written beside the report, e.g. a density grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub csv: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: ScenarioSpec,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub fits: Vec<FitRecord>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl SweepReport {
    pub fn new(spec: ScenarioSpec, columns: &[&str]) -> Self {
        Self {
            spec,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            fits: Vec::new(),
            provenance: Provenance::now(),
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::Parameter(format!("no column '{name}'")))
    }

    /// Column by name; `h` and `j` are always available.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        match name {
            "h" => Ok(self.rows.iter().map(|r| r.h).collect()),
            "j" => Ok(self.rows.iter().map(|r| r.j as f64).collect()),
            _ => {
                let i = self.column_index(name)?;
                Ok(self.rows.iter().map(|r| r.values[i]).collect())
            }
        }
    }

    pub fn value(&self, j: u32, name: &str) -> Result<f64> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .find(|r| r.j == j)
            .map(|r| r.values[i])
            .ok_or_else(|| Error::Parameter(format!("no row for j = {j}")))
    }

    pub fn last_j(&self) -> Option<u32> {
        self.rows.last().map(|r| r.j)
    }

    /// Fits `observable` against `against` and records the result.
    pub fn fit(&mut self, observable: &str, against: &str, kind: FitKind) -> Result<Fit> {
        let f = sweep_fit(self, observable, against, kind)?;
        self.fits.push(FitRecord { observable: observable.to_string(), against: against.to_string(), fit: f });
        Ok(f)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "j,h")?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(w, "{},{}", r.j, sci(r.h))?;
            for v in &r.values {
                write!(w, ",{}", sci(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Least-squares fit of one observable over the ladder.
pub fn sweep_fit(report: &SweepReport, observable: &str, against: &str, kind: FitKind) -> Result<Fit> {
    let ys = report.column(observable)?;
    let xs = report.column(against)?;
    fit::fit(kind, &xs, &ys)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Writes `<name>.csv` plus artifacts, or `<name>.json`, into `dir`.
pub fn emit_report(report: &SweepReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = report.spec.name.as_str();
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, report.to_csv())?;
            written.push(path);
            for a in &report.artifacts {
                let path = dir.join(format!("{name}_{}.csv", a.name));
                fs::write(&path, &a.csv)?;
                written.push(path);
            }
        }
        Format::Json => {
            let path = dir.join(format!("{name}.json"));
            fs::write(&path, report.to_json()?)?;
            written.push(path);
        }
    }
    Ok(written)
}
