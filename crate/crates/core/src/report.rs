//! Named residual records for invariant checks.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not applicable to the input (for example a unitarity check at non-real λ).
    Skipped,
    /// Reported for information only; never fails the report.
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub metadata: BTreeMap<String, String>,
}

impl CheckRecord {
    /// Pass iff the residual is finite and `<= tolerance`.
    pub fn measured(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let passed = residual.is_finite() && residual <= tolerance;
        Self {
            name: name.into(),
            max_residual: Some(residual),
            tolerance,
            passed,
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            note: None,
            metadata: BTreeMap::new(),
        }
    }

    /// Pass iff `lo <= value <= hi`; the stored residual is the value itself.
    pub fn in_range(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let passed = value.is_finite() && value >= lo && value <= hi;
        let mut rec = Self::measured(name, value, hi);
        rec.passed = passed;
        rec.status = if passed { CheckStatus::Pass } else { CheckStatus::Fail };
        rec.with_meta("accepted_range", format!("[{lo}, {hi}]"))
    }

    pub fn skipped(name: impl Into<String>, tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            max_residual: None,
            tolerance,
            passed: true,
            status: CheckStatus::Skipped,
            note: Some(note.into()),
            metadata: BTreeMap::new(),
        }
    }

    pub fn info(name: impl Into<String>, residual: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            max_residual: Some(residual),
            tolerance: f64::INFINITY,
            passed: true,
            status: CheckStatus::Info,
            note: Some(note.into()),
            metadata: BTreeMap::new(),
        }
    }

    pub fn failed(name: impl Into<String>, tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            max_residual: None,
            tolerance,
            passed: false,
            status: CheckStatus::Fail,
            note: Some(note.into()),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    /// Prefix every check name, e.g. with the stage that produced it.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.name = format!("{prefix}.{}", c.name);
        }
        self
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Residual of the named check, `NaN` when absent or unmeasured.
    pub fn residual(&self, name: &str) -> f64 {
        self.get(name).and_then(|c| c.max_residual).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_fail_and_skip() {
        let mut r = VerificationReport::new();
        r.push(CheckRecord::measured("a", 1e-12, 1e-10));
        r.push(CheckRecord::skipped("b", 1e-10, "not applicable"));
        assert!(r.all_passed());
        r.push(CheckRecord::measured("c", f64::NAN, 1.0));
        assert!(!r.all_passed());
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.failures()[0].name, "c");
    }

    #[test]
    fn range_checks() {
        assert!(CheckRecord::in_range("ratio", 4.1, 3.2, 4.8).passed);
        assert!(!CheckRecord::in_range("ratio", 2.0, 3.2, 4.8).passed);
    }
}
