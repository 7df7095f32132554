//! Check outcomes and their JSON, CSV and text renderings.

use serde::{Deserialize, Serialize};

use super::scenario::{Certification, CheckKind};
use crate::model_kernels::BoundReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The curvature or parameter precondition did not hold; the bound was
    /// not judged.
    PreconditionViolation,
    /// The computation itself failed.
    Error,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::PreconditionViolation => "precondition_violation",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub scenario: String,
    pub check: CheckKind,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification: Option<Certification>,
    pub reports: Vec<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CheckReport {
    pub fn new(scenario: &str, check: CheckKind, status: Status) -> Self {
        CheckReport {
            scenario: scenario.to_string(),
            check,
            status,
            certification: None,
            reports: Vec::new(),
            message: None,
        }
    }

    pub fn with_message(mut self, msg: impl Into<String>) -> Self {
        self.message = Some(msg.into());
        self
    }

    pub fn report(&self, label: &str) -> Option<&BoundReport> {
        self.reports.iter().find(|r| r.label == label)
    }

    pub fn equality(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.equality)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenarios: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub precondition_violations: usize,
    pub errors: usize,
    pub equality_flags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub summary: Summary,
    pub checks: Vec<CheckReport>,
}

const CSV_HEADER: [&str; 13] = [
    "scenario",
    "check",
    "status",
    "label",
    "measured",
    "bound",
    "slack",
    "tolerance",
    "passed",
    "equality",
    "error_estimate",
    "certified_margin",
    "note",
];

fn num(x: f64) -> String {
    format!("{x:e}")
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, scenarios: usize, checks: Vec<CheckReport>) -> Self {
        let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
        let summary = Summary {
            scenarios,
            checks: checks.len(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            precondition_violations: count(Status::PreconditionViolation),
            errors: count(Status::Error),
            equality_flags: checks.iter().flat_map(|c| &c.reports).filter(|r| r.equality).count(),
        };
        SuiteReport { suite: suite.into(), summary, checks }
    }

    /// No bound failed and nothing errored; precondition violations are not
    /// failures.
    pub fn success(&self) -> bool {
        self.summary.failed == 0 && self.summary.errors == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per bound report; checks without reports get one row with
    /// empty numeric fields.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for c in &self.checks {
            let margin = c.certification.as_ref().map(|x| num(x.margin)).unwrap_or_default();
            if c.reports.is_empty() {
                let note = c.message.clone().unwrap_or_default();
                w.write_record([
                    &c.scenario,
                    c.check.name(),
                    c.status.name(),
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    &margin,
                    &note,
                ])
                .expect("in-memory write");
            }
            for r in &c.reports {
                w.write_record([
                    c.scenario.as_str(),
                    c.check.name(),
                    c.status.name(),
                    &r.label,
                    &num(r.measured),
                    &num(r.bound),
                    &num(r.slack),
                    &num(r.tolerance),
                    if r.passed { "true" } else { "false" },
                    if r.equality { "true" } else { "false" },
                    &num(r.error_estimate),
                    &margin,
                    r.note.as_deref().unwrap_or(""),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
    }

    pub fn human_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let worst = c
                .reports
                .iter()
                .min_by(|a, b| a.slack.total_cmp(&b.slack))
                .map(|r| format!(" worst {} slack {:.3e}", r.label, r.slack))
                .unwrap_or_default();
            let eq = if c.equality() { " [equality]" } else { "" };
            out.push_str(&format!("{:<24} {:<20} {:<24}{worst}{eq}\n", c.scenario, c.check.name(), c.status.name()));
            if let Some(m) = &c.message {
                out.push_str(&format!("    {m}\n"));
            }
        }
        let s = &self.summary;
        out.push_str(&format!(
            "suite {}: {} scenarios, {} checks, {} passed, {} failed, {} precondition violations, {} errors\n",
            self.suite, s.scenarios, s.checks, s.passed, s.failed, s.precondition_violations, s.errors
        ));
        out
    }
}
