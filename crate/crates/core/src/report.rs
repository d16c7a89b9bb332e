//! Pass/fail records shared by every verification routine.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One verification outcome: `{check, anchor, status, detail}`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    /// Where the expected value comes from (a table, an identity, an oracle).
    pub anchor: String,
    pub status: Status,
    pub detail: Value,
}

impl CheckReport {
    pub fn new(check: &str, anchor: &str, ok: bool, detail: Value) -> Self {
        CheckReport {
            check: check.to_string(),
            anchor: anchor.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Single-line text rendering.
    pub fn line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!("[{tag}] {} ({})", self.check, self.anchor)
    }
}

/// True when every report passed.
pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().all(CheckReport::passed)
}
