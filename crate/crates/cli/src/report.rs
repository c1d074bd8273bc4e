//! Verify reports and their JSON/CSV renderings.

use anyhow::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

/// One checked property. The case passes when
/// `|measured − expected| ≤ tolerance`; for error-style checks `measured`
/// is the worst error seen and `expected` is 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub suite: String,
    pub id: String,
    pub description: String,
    /// The property the case checks.
    pub reference: String,
    pub status: Status,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Case {
    pub fn new(
        suite: &str,
        id: &str,
        description: impl Into<String>,
        reference: &str,
        measured: f64,
        expected: f64,
        tolerance: f64,
    ) -> Self {
        let ok = (measured - expected).abs() <= tolerance;
        Case {
            suite: suite.to_string(),
            id: format!("{suite}.{id}"),
            description: description.into(),
            reference: reference.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            measured,
            expected,
            tolerance,
        }
    }

    pub fn skipped(suite: &str, id: &str, description: impl Into<String>, reference: &str) -> Self {
        Case {
            suite: suite.to_string(),
            id: format!("{suite}.{id}"),
            description: description.into(),
            reference: reference.to_string(),
            status: Status::Skip,
            measured: 0.0,
            expected: 0.0,
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub tol_rel: f64,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub cases: Vec<Case>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl VerifyReport {
    pub fn new(suite: &str, seed: u64, tol_rel: f64, cases: Vec<Case>) -> Self {
        let count = |s| cases.iter().filter(|c| c.status == s).count();
        VerifyReport {
            suite: suite.to_string(),
            seed,
            tol_rel,
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            skipped: count(Status::Skip),
            cases,
            wall_time: None,
        }
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn cases_csv(cases: &[Case]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "description",
        "measured",
        "expected",
        "status",
        "tolerance",
        "reference",
    ])?;
    for c in cases {
        w.write_record([
            c.id.as_str(),
            c.description.as_str(),
            &fmt_float(c.measured),
            &fmt_float(c.expected),
            c.status.name(),
            &fmt_float(c.tolerance),
            c.reference.as_str(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// One row of a γ-versus-width sweep over shattering nets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "D")]
    pub dim: usize,
    pub d: usize,
    #[serde(rename = "H")]
    pub width: usize,
    pub p: f64,
    #[serde(serialize_with = "netcap_core::norms::serialize_exponent_value")]
    pub q: f64,
    pub gamma_measured: f64,
    pub gamma_formula: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["D", "d", "H", "p", "q", "gamma_measured", "gamma_formula"])?;
    for r in rows {
        w.write_record([
            r.dim.to_string(),
            r.d.to_string(),
            r.width.to_string(),
            r.p.to_string(),
            r.q.to_string(),
            fmt_float(r.gamma_measured),
            fmt_float(r.gamma_formula),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
