//! Report documents and their plain-table, CSV and JSON renderings.
//!
//! CSV and JSON carry full round-trip precision; the plain table rounds to
//! four decimals.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::{CurveRow, FitReport, ModelKind};
use crate::simulation::{LoadingPattern, SimulationCell};

/// Column order of the simulation CSV. Part of the file contract.
pub const SIMULATION_CSV_HEADER: &str = "n,l,r,p,pattern,population_srmr,mean_srmr_s,sd_srmr_s";

pub const CURVE_CSV_HEADER: &str = "p,srmr_level,required_r";

/// Marker for curve cells that no `r` in `[0, 1]` reaches.
pub const UNATTAINABLE: &str = "unattainable";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Dimensions and content hash of an input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEcho {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub checksum: String,
}

impl InputEcho {
    pub fn of_matrix(name: impl Into<String>, m: &DMatrix<f64>) -> Self {
        InputEcho {
            name: name.into(),
            rows: m.nrows(),
            cols: m.ncols(),
            checksum: checksum(m.as_slice()),
        }
    }
}

/// First 16 hex digits of the SHA-256 over the little-endian bytes.
pub fn checksum(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub model: ModelKind,
    pub srmr: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<Vec<f64>>>,
}

impl FitEntry {
    pub fn from_report(report: &FitReport, with_residuals: bool) -> Self {
        FitEntry {
            model: report.model_kind,
            srmr: report.srmr,
            warnings: report.warnings.clone(),
            residuals: with_residuals.then(|| {
                report
                    .residuals
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    #[serde(default)]
    pub inputs: Vec<InputEcho>,
    #[serde(default)]
    pub fits: Vec<FitEntry>,
    #[serde(default)]
    pub values: Vec<NamedValue>,
    #[serde(default)]
    pub curve: Vec<CurveRow>,
    #[serde(default)]
    pub simulation: Vec<SimulationCell>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ReportDocument {
    pub fn new(command: impl Into<String>) -> Self {
        ReportDocument {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn fit(&self, model: ModelKind) -> Option<&FitEntry> {
        self.fits.iter().find(|f| f.model == model)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.to_table(),
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut sections = Vec::new();
        if !self.fits.is_empty() {
            let mut s = String::from("model,srmr\n");
            for f in &self.fits {
                writeln!(s, "{},{}", f.model.label(), f.srmr).unwrap();
            }
            for f in &self.fits {
                if let Some(res) = &f.residuals {
                    writeln!(s, "\nresiduals,{}", f.model.label()).unwrap();
                    for row in res {
                        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                        writeln!(s, "{}", cells.join(",")).unwrap();
                    }
                }
            }
            sections.push(s);
        }
        if !self.values.is_empty() {
            let mut s = String::from("name,value\n");
            for v in &self.values {
                writeln!(s, "{},{}", v.name, v.value).unwrap();
            }
            sections.push(s);
        }
        if !self.curve.is_empty() {
            let mut s = format!("{CURVE_CSV_HEADER}\n");
            for row in &self.curve {
                let r = row.required_r.map_or(UNATTAINABLE.to_string(), |r| r.to_string());
                writeln!(s, "{},{},{}", row.p, row.srmr_level, r).unwrap();
            }
            sections.push(s);
        }
        if !self.simulation.is_empty() {
            sections.push(simulation_csv(&self.simulation));
        }
        sections.join("\n")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for input in &self.inputs {
            writeln!(
                s,
                "input {:<14} {:>7}  checksum {}",
                input.name,
                format!("{}x{}", input.rows, input.cols),
                input.checksum
            )
            .unwrap();
        }
        if !self.inputs.is_empty() {
            s.push('\n');
        }
        if !self.fits.is_empty() {
            writeln!(s, "{:<22} {:>7}", "model", "SRMR").unwrap();
            for f in &self.fits {
                writeln!(s, "{:<22} {:>7.4}", f.model.label(), f.srmr).unwrap();
            }
            for f in &self.fits {
                if let Some(res) = &f.residuals {
                    writeln!(s, "\nresiduals ({})", f.model.label()).unwrap();
                    for row in res {
                        let cells: Vec<String> = row.iter().map(|v| format!("{v:7.4}")).collect();
                        writeln!(s, "{}", cells.join(" ")).unwrap();
                    }
                }
            }
        }
        for v in &self.values {
            writeln!(s, "{:<22} {:>7.4}", v.name, v.value).unwrap();
        }
        if !self.curve.is_empty() {
            writeln!(s, "{:>5} {:>7} {:>12}", "p", "SRMR", "required r").unwrap();
            for row in &self.curve {
                let r = row.required_r.map_or(UNATTAINABLE.to_string(), |r| format!("{r:.4}"));
                writeln!(s, "{:>5} {:>7.4} {:>12}", row.p, row.srmr_level, r).unwrap();
            }
        }
        if !self.simulation.is_empty() {
            writeln!(
                s,
                "{:>5} {:>5} {:>6} {:>4} {:>9} {:>8} {:>8} {:>8} {:>6}",
                "n", "l", "r", "p", "pattern", "SRMR", "M", "SD", "used"
            )
            .unwrap();
            for c in &self.simulation {
                writeln!(
                    s,
                    "{:>5} {:>5.2} {:>6.4} {:>4} {:>9} {:>8.4} {:>8.4} {:>8.4} {:>6}",
                    c.n,
                    c.l,
                    c.l * c.l,
                    c.p,
                    c.pattern.label(),
                    c.population_srmr,
                    c.mean_srmr_s,
                    c.sd_srmr_s,
                    c.replications_used
                )
                .unwrap();
            }
        }
        for w in &self.warnings {
            writeln!(s, "warning: {w}").unwrap();
        }
        s
    }
}

fn nominal_r(l: f64) -> f64 {
    ((l * l) * 1e12).round() / 1e12
}

pub fn simulation_csv(cells: &[SimulationCell]) -> String {
    let mut s = format!("{SIMULATION_CSV_HEADER}\n");
    for c in cells {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.n,
            c.l,
            nominal_r(c.l),
            c.p,
            c.pattern.label(),
            c.population_srmr,
            c.mean_srmr_s,
            c.sd_srmr_s
        )
        .unwrap();
    }
    s
}

/// Reads a simulation table written by [`simulation_csv`]. The
/// replication count is not part of the CSV and comes back as zero.
pub fn parse_simulation_csv(text: &str) -> Result<Vec<SimulationCell>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SIMULATION_CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {SIMULATION_CSV_HEADER:?}"),
            })
        }
    }
    let mut cells = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let bad = |message: String| Error::Parse { line: line_no, message };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(format!("bad number {:?}", f[k])));
        let int = |k: usize| {
            f[k].parse::<usize>()
                .map_err(|_| bad(format!("bad integer {:?}", f[k])))
        };
        let pattern = match f[4] {
            "constant" => LoadingPattern::Constant,
            "variable" => LoadingPattern::Variable,
            other => return Err(bad(format!("unknown pattern {other:?}"))),
        };
        cells.push(SimulationCell {
            n: int(0)?,
            l: num(1)?,
            p: int(3)?,
            pattern,
            population_srmr: num(5)?,
            mean_srmr_s: num(6)?,
            sd_srmr_s: num(7)?,
            replications_used: 0,
        });
    }
    Ok(cells)
}
