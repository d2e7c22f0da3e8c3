//! Persisted run reports: one structured-text (JSON) file per run in the
//! report directory, keyed by run id, written atomically at run end.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Mismatch,
    OracleError,
    IutError,
    IutTimeout,
}

/// One oracle query paired with the implementation's answer and the
/// comparator verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub case_id: u32,
    pub entry: String,
    /// Input tokens in their report rendering.
    pub inputs: Vec<String>,
    pub oracle_outcome: String,
    pub iut_outcome: String,
    pub comparator: bool,
    pub failure_kind: Option<FailureKind>,
    /// Set when the suite's advisory label disagrees with the oracle; the
    /// oracle, not the stored label, is authoritative.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub mismatch: usize,
    pub oracle_error: usize,
    pub iut_error: usize,
    pub iut_timeout: usize,
}

impl Summary {
    pub fn from_records(records: &[VerdictRecord]) -> Summary {
        let mut s = Summary { total: records.len(), ..Summary::default() };
        for r in records {
            match r.failure_kind {
                None => s.passed += 1,
                Some(FailureKind::Mismatch) => s.mismatch += 1,
                Some(FailureKind::OracleError) => s.oracle_error += 1,
                Some(FailureKind::IutError) => s.iut_error += 1,
                Some(FailureKind::IutTimeout) => s.iut_timeout += 1,
            }
        }
        s
    }
}

/// A complete suite execution, diffable across runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub spec_digest: String,
    pub suite_digest: String,
    /// The configured maximum-natural bound, as a decimal string.
    pub m: String,
    pub iut: String,
    pub records: Vec<VerdictRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn save(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.run_id));
        let tmp = dir.join(format!(".{}.json.tmp", self.run_id));
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> std::io::Result<RunReport> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Timestamp-based run identifier, made unique within `dir` by a numeric
/// suffix when two runs land in the same millisecond.
pub fn fresh_run_id(dir: &Path) -> String {
    let now = chrono::Utc::now();
    let base = format!("run-{}", now.format("%Y%m%d-%H%M%S%3f"));
    let mut candidate = base.clone();
    let mut counter = 1;
    while dir.join(format!("{}.json", candidate)).exists() {
        counter += 1;
        candidate = format!("{}-{}", base, counter);
    }
    candidate
}
