//! Residual records, report assembly, and serialization.
//!
//! Every check produces `(name, residual, gate class)` triples. Gate classes
//! are resolved against the active [`ToleranceProfile`] when the report is
//! assembled, so the gates printed in a report always match the profile that
//! produced it. Informational rows (angles, norms, condition statuses that
//! legitimately depend on the scenario) carry no gate and never affect the
//! exit code.

use crate::error::{Error, Result};
use crate::numerics::ToleranceProfile;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Gate class for a check: resolved to a numeric threshold per profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `tol_first`: identities using at most first derivatives.
    First,
    /// `tol_second`: identities with a finite-difference layer.
    Second,
    /// `tol_eig`: eigenvalue spreads.
    Eig,
    /// A fixed threshold (construction invariants).
    Fixed(f64),
    /// Informational value; never gates the run.
    Info,
}

impl Gate {
    pub fn resolve(self, profile: &ToleranceProfile) -> Option<f64> {
        match self {
            Gate::First => Some(profile.tol_first),
            Gate::Second => Some(profile.tol_second),
            Gate::Eig => Some(profile.tol_eig),
            Gate::Fixed(x) => Some(x),
            Gate::Info => None,
        }
    }
}

/// One named residual produced at one point.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: &'static str,
    pub residual: f64,
    pub gate: Gate,
}

impl CheckItem {
    pub fn new(name: &'static str, residual: f64, gate: Gate) -> Self {
        CheckItem {
            name,
            residual,
            gate,
        }
    }

    pub fn info(name: &'static str, value: f64) -> Self {
        CheckItem {
            name,
            residual: value,
            gate: Gate::Info,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(Error::Usage {
                message: format!("unknown format `{other}` (expected json, csv, or text)"),
            }),
        }
    }
}

/// One row of a report: a check evaluated at a sample point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub point_index: usize,
    pub u: Vec<f64>,
    pub check: String,
    pub residual: f64,
    pub gate: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckSummary {
    pub check: String,
    pub max_residual: f64,
    pub gate: Option<f64>,
    pub pass_count: usize,
    pub fail_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointCounts {
    pub requested: usize,
    pub admitted: usize,
    pub guard_skipped: usize,
    pub degenerate_skipped: usize,
}

/// Full report: provenance, per-point records, and per-check summary.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub tool_version: String,
    pub command: String,
    pub scenario_source: String,
    pub scenario_sha256: String,
    pub tolerances: ToleranceProfile,
    pub points: PointCounts,
    pub records: Vec<CheckRecord>,
    pub summary: Vec<CheckSummary>,
}

impl CheckReport {
    /// Sort records deterministically and rebuild the summary.
    pub fn finalize(&mut self) {
        self.records
            .sort_by(|a, b| (a.point_index, &a.check).cmp(&(b.point_index, &b.check)));
        let mut names: Vec<String> = Vec::new();
        for r in &self.records {
            if !names.contains(&r.check) {
                names.push(r.check.clone());
            }
        }
        names.sort();
        self.summary = names
            .into_iter()
            .map(|name| {
                let rows: Vec<&CheckRecord> =
                    self.records.iter().filter(|r| r.check == name).collect();
                CheckSummary {
                    check: name,
                    max_residual: rows
                        .iter()
                        .map(|r| r.residual)
                        .fold(f64::NEG_INFINITY, f64::max),
                    gate: rows.first().and_then(|r| r.gate),
                    pass_count: rows.iter().filter(|r| r.pass).count(),
                    fail_count: rows.iter().filter(|r| !r.pass).count(),
                }
            })
            .collect();
    }

    /// True when every gated record passes.
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.gate.is_none() || r.pass)
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    /// JSON with floats printed at 17 significant digits so that values
    /// round-trip bit-exactly and reports are byte-reproducible.
    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigitsFormatter);
        self.serialize(&mut ser).expect("report serialization");
        let mut s = String::from_utf8(out).expect("json is utf-8");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per (point, check): `point_index,u1..um,check,residual,gate,pass`.
    pub fn to_csv(&self) -> String {
        let m = self.records.first().map(|r| r.u.len()).unwrap_or(0);
        let mut s = String::from("point_index");
        for i in 1..=m {
            let _ = write!(s, ",u{i}");
        }
        s.push_str(",check,residual,gate,pass\n");
        for r in &self.records {
            let _ = write!(s, "{}", r.point_index);
            for x in &r.u {
                let _ = write!(s, ",{}", fmt_f64(*x));
            }
            let gate = r.gate.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                s,
                ",{},{},{},{}",
                r.check,
                fmt_f64(r.residual),
                gate,
                r.pass
            );
        }
        s
    }

    /// Human-readable summary table (floats at 6 significant digits).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "bislant v{} - {}", self.tool_version, self.command);
        let _ = writeln!(s, "scenario: {}", self.scenario_source);
        let _ = writeln!(s, "scenario sha256: {}", self.scenario_sha256);
        let _ = writeln!(
            s,
            "tolerances: first={:.1e} second={:.1e} eig={:.1e} fd_step={:.1e}",
            self.tolerances.tol_first,
            self.tolerances.tol_second,
            self.tolerances.tol_eig,
            self.tolerances.fd_step
        );
        let _ = writeln!(
            s,
            "points: requested={} admitted={} guard_skipped={} degenerate_skipped={}",
            self.points.requested,
            self.points.admitted,
            self.points.guard_skipped,
            self.points.degenerate_skipped
        );
        let name_width = self
            .summary
            .iter()
            .map(|r| r.check.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            s,
            "{:<name_width$}  {:>12}  {:>12}  {:>6}  {:>6}  status",
            "check", "max residual", "gate", "pass", "fail"
        );
        for row in &self.summary {
            let gate = row
                .gate
                .map(|g| format!("{:.5e}", g))
                .unwrap_or_else(|| "-".into());
            let status = if row.gate.is_none() {
                "info"
            } else if row.fail_count == 0 {
                "ok"
            } else {
                "FAIL"
            };
            let _ = writeln!(
                s,
                "{:<name_width$}  {:>12.5e}  {:>12}  {:>6}  {:>6}  {}",
                row.check, row.max_residual, gate, row.pass_count, row.fail_count, status
            );
        }
        let verdict = if self.all_pass() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "overall: {verdict}");
        s
    }
}

/// `{:.16e}` gives one leading digit plus 16 fractional digits: 17
/// significant digits, enough to reproduce any f64 exactly on re-parse.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON with the f64 rendering replaced; all other formatting keeps
/// the `serde_json` defaults.
struct SignificantDigitsFormatter;

impl serde_json::ser::Formatter for SignificantDigitsFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}
