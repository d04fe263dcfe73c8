//! Consolidated experiment reporting: named pass/fail verdicts collected
//! across an experiment run, serialized with the schedule provenance.

use serde::Serialize;

/// One named check outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

/// Aggregated verdicts plus arbitrary provenance.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Report {
    pub verdicts: Vec<Verdict>,
    pub provenance: serde_json::Value,
}

impl Report {
    pub fn new(provenance: serde_json::Value) -> Self {
        Self {
            verdicts: Vec::new(),
            provenance,
        }
    }

    pub fn record(&mut self, id: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            id: id.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Human-readable one-line-per-check summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&format!(
                "[{}] {} — {}\n",
                if v.passed { "PASS" } else { "FAIL" },
                v.id,
                v.detail
            ));
        }
        out
    }
}
