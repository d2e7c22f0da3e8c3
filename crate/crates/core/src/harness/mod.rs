//! The comparator and test oracle manager: runs suites through the oracle
//! and an implementation under test, compares verdicts, persists run
//! history, and diffs runs for regression tracking.

mod iut;
mod report;

pub use iut::{
    encode_request_line, mutant_iut, reference_iut, BuiltinIut, IutAdapter, IutFailure, MutantId,
    SubprocessAdapter,
};
pub use report::{fresh_run_id, sha256_hex, FailureKind, RunReport, Summary, VerdictRecord};

use std::path::PathBuf;
use std::time::Duration;

use num_bigint::BigInt;
use thiserror::Error;

use crate::eval::{
    expected_result_cfg, EvalConfig, InputToken, MSymbol, OracleOutcome,
};
use crate::resolve::ResolvedClass;
use crate::value::{parse_rendered, Value};

/// One oracle query: an entry point and its raw inputs. `expected_label` is
/// advisory documentation only; the oracle is authoritative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: u32,
    pub entry: String,
    pub inputs: Vec<InputToken>,
    pub expected_label: Option<String>,
}

/// A loaded suite plus the content digest of its canonical encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub cases: Vec<TestCase>,
    pub digest: String,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("failed to read suite: {0}")]
    Io(String),
    #[error("malformed suite: {0}")]
    Parse(String),
    #[error("suite is empty")]
    Empty,
    #[error("case ids must be strictly increasing (case {0} follows {1})")]
    IdsNotIncreasing(u32, u32),
    #[error("entry point '{0}' does not resolve to a public function")]
    UnresolvedEntry(String),
    #[error("failed to persist report: {0}")]
    Persist(String),
}

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("reports cover different suites (digest {0} vs {1})")]
    SuiteMismatch(String, String),
}

impl Suite {
    pub fn from_cases(cases: Vec<TestCase>) -> Result<Suite, SuiteError> {
        validate_cases(&cases)?;
        let digest = report::sha256_hex(render_suite(&cases).as_bytes());
        Ok(Suite { cases, digest })
    }

    /// Parse the suite file format: a JSON array of
    /// `{id, entry, inputs, expected_label?}` where inputs encode integers
    /// as numbers, characters as 1-character strings, and the M symbols as
    /// the literal strings "M", "M+1", "M-1".
    pub fn from_json(text: &str) -> Result<Suite, SuiteError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SuiteError::Parse(e.to_string()))?;
        let array = value.as_array().ok_or_else(|| {
            SuiteError::Parse("suite file must be a JSON array of test cases".to_string())
        })?;
        let mut cases = Vec::with_capacity(array.len());
        for (index, entry) in array.iter().enumerate() {
            cases.push(parse_case(entry).map_err(|msg| {
                SuiteError::Parse(format!("case at index {}: {}", index, msg))
            })?);
        }
        validate_cases(&cases)?;
        // The digest covers the canonical rendering, so formatting-only
        // edits to the file do not invalidate regression diffs.
        let digest = report::sha256_hex(render_suite(&cases).as_bytes());
        Ok(Suite { cases, digest })
    }

    pub fn load(path: &std::path::Path) -> Result<Suite, SuiteError> {
        let text = std::fs::read_to_string(path).map_err(|e| SuiteError::Io(e.to_string()))?;
        Suite::from_json(&text)
    }
}

fn validate_cases(cases: &[TestCase]) -> Result<(), SuiteError> {
    if cases.is_empty() {
        return Err(SuiteError::Empty);
    }
    for pair in cases.windows(2) {
        if pair[1].id <= pair[0].id {
            return Err(SuiteError::IdsNotIncreasing(pair[1].id, pair[0].id));
        }
    }
    Ok(())
}

fn parse_case(entry: &serde_json::Value) -> Result<TestCase, String> {
    let obj = entry.as_object().ok_or("expected an object")?;
    let id = obj
        .get("id")
        .and_then(|v| v.as_u64())
        .ok_or("missing or non-integer 'id'")? as u32;
    if id == 0 {
        return Err("case ids are positive".to_string());
    }
    let entry_name = obj
        .get("entry")
        .and_then(|v| v.as_str())
        .ok_or("missing 'entry'")?
        .to_string();
    let inputs_value = obj.get("inputs").and_then(|v| v.as_array()).ok_or("missing 'inputs'")?;
    let mut inputs = Vec::with_capacity(inputs_value.len());
    for v in inputs_value {
        inputs.push(parse_input_token(v)?);
    }
    let expected_label = match obj.get("expected_label") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("'expected_label' must be a string".to_string()),
    };
    Ok(TestCase { id, entry: entry_name, inputs, expected_label })
}

fn parse_input_token(v: &serde_json::Value) -> Result<InputToken, String> {
    match v {
        serde_json::Value::Number(n) => {
            let text = n.to_string();
            text.parse::<BigInt>()
                .map(InputToken::Int)
                .map_err(|_| format!("input {} is not an integer", text))
        }
        serde_json::Value::String(s) => match s.as_str() {
            "M" => Ok(InputToken::Symbol(MSymbol::M)),
            "M+1" => Ok(InputToken::Symbol(MSymbol::MPlus1)),
            "M-1" => Ok(InputToken::Symbol(MSymbol::MMinus1)),
            other => {
                let mut chars = other.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(InputToken::Char(c)),
                    _ => Err(format!(
                        "string input {:?} must be 1 character or one of M, M+1, M-1",
                        other
                    )),
                }
            }
        },
        other => Err(format!("unsupported input encoding: {}", other)),
    }
}

/// Canonical suite rendering used for digests.
fn render_suite(cases: &[TestCase]) -> String {
    let mut out = String::new();
    for case in cases {
        out.push_str(&format!(
            "{}|{}|{}\n",
            case.id,
            case.entry,
            case.inputs.iter().map(InputToken::render).collect::<Vec<_>>().join(",")
        ));
    }
    out
}

/// True when the implementation's rendered answer matches the oracle's
/// outcome: a `Result` compares by decoding the answer to a value; error
/// outcomes compare true only against the designated rejection rendering.
pub fn comparator_with_rejection(
    expected: &OracleOutcome,
    actual: &str,
    rejection: Option<&str>,
) -> bool {
    match expected {
        OracleOutcome::Result(v) => match parse_rendered(actual) {
            Some(decoded) => decoded == *v,
            None => false,
        },
        _ => match rejection {
            Some(r) => actual.trim() == r,
            None => false,
        },
    }
}

pub fn comparator(expected: &OracleOutcome, actual: &str) -> bool {
    comparator_with_rejection(expected, actual, None)
}

/// Check an advisory label against the oracle verdict. Labels may list
/// alternatives separated by " or ".
fn label_matches(label: &str, verdict: &Value) -> bool {
    let rendered = verdict.to_string();
    label
        .split(" or ")
        .any(|alternative| alternative.trim().eq_ignore_ascii_case(&rendered))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub m: BigInt,
    pub report_dir: PathBuf,
    /// Rendering an implementation may answer to match an oracle-side
    /// contract violation or evaluation error.
    pub rejection_rendering: Option<String>,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: crate::eval::default_max_nat(),
            report_dir: PathBuf::from("runs"),
            rejection_rendering: None,
            eval: EvalConfig::default(),
        }
    }
}

/// Default per-case timeout for external implementations.
pub const DEFAULT_CASE_TIMEOUT: Duration = Duration::from_secs(5);

/// Run every case through the expected-result generator and the adapter,
/// compare, and persist one report. Adapter failures are recorded per case;
/// they never abort the run.
pub fn run_suite(
    spec_source: &str,
    ctx: &ResolvedClass,
    suite: &Suite,
    iut: &mut dyn IutAdapter,
    config: &RunConfig,
) -> Result<RunReport, SuiteError> {
    for case in &suite.cases {
        let is_public = ctx
            .class
            .find_functions(&case.entry)
            .iter()
            .any(|f| f.access == crate::ast::Access::Public);
        if !is_public {
            return Err(SuiteError::UnresolvedEntry(case.entry.clone()));
        }
    }
    let mut records = Vec::with_capacity(suite.cases.len());
    for case in &suite.cases {
        let expected = expected_result_cfg(ctx, &config.eval, &case.entry, &case.inputs, &config.m);
        let (iut_outcome, iut_failure) = match iut.run_case(&case.inputs, &config.m) {
            Ok(answer) => (answer, None),
            Err(IutFailure::Error(msg)) => (format!("<error: {}>", msg), Some(FailureKind::IutError)),
            Err(IutFailure::Timeout) => ("<timeout>".to_string(), Some(FailureKind::IutTimeout)),
        };
        let agreed = iut_failure.is_none()
            && comparator_with_rejection(
                &expected,
                &iut_outcome,
                config.rejection_rendering.as_deref(),
            );
        let failure_kind = if agreed {
            None
        } else if let Some(kind) = iut_failure {
            Some(kind)
        } else if !expected.is_result() {
            Some(FailureKind::OracleError)
        } else {
            Some(FailureKind::Mismatch)
        };
        let note = match (&case.expected_label, &expected) {
            (Some(label), OracleOutcome::Result(v)) if !label_matches(label, v) => Some(format!(
                "oracle verdict {} overrides the stored label {:?}",
                v, label
            )),
            _ => None,
        };
        records.push(VerdictRecord {
            case_id: case.id,
            entry: case.entry.clone(),
            inputs: case.inputs.iter().map(InputToken::render).collect(),
            oracle_outcome: expected.to_string(),
            iut_outcome,
            comparator: agreed,
            failure_kind,
            note,
        });
    }
    records.sort_by_key(|r| r.case_id);
    let summary = Summary::from_records(&records);
    let report = RunReport {
        run_id: report::fresh_run_id(&config.report_dir),
        spec_digest: report::sha256_hex(spec_source.as_bytes()),
        suite_digest: suite.digest.clone(),
        m: config.m.to_string(),
        iut: iut.describe(),
        records,
        summary,
    };
    report
        .save(&config.report_dir)
        .map_err(|e| SuiteError::Persist(e.to_string()))?;
    Ok(report)
}

/// Case ids whose comparator verdict changed between two runs of the same
/// suite, split into regressions (true to false) and fixes (false to true).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegressionDiff {
    pub regressions: Vec<u32>,
    pub fixes: Vec<u32>,
}

impl RegressionDiff {
    pub fn is_empty(&self) -> bool {
        self.regressions.is_empty() && self.fixes.is_empty()
    }
}

pub fn diff_runs(older: &RunReport, newer: &RunReport) -> Result<RegressionDiff, DiffError> {
    if older.suite_digest != newer.suite_digest {
        return Err(DiffError::SuiteMismatch(
            older.suite_digest.clone(),
            newer.suite_digest.clone(),
        ));
    }
    let mut diff = RegressionDiff::default();
    for old in &older.records {
        let Some(new) = newer.records.iter().find(|r| r.case_id == old.case_id) else {
            continue;
        };
        match (old.comparator, new.comparator) {
            (true, false) => diff.regressions.push(old.case_id),
            (false, true) => diff.fixes.push(old.case_id),
            _ => {}
        }
    }
    Ok(diff)
}
