//! Execution harness: wraps translated functions in generated drivers,
//! compiles/runs them under per-language toolchains in isolated working
//! directories, judges outputs, and aggregates pass rates.

mod acc;
mod driver;
mod judge;
mod runner;
mod toolchain;

pub use acc::{compute_sut_acc, AccTable, ModelAcc, PairKey};
pub use driver::generate_driver;
pub use judge::judge;
pub use runner::{compile_and_run, run_suite, RunOptions};
pub use toolchain::{ToolchainCommands, ToolchainSet};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Language;
use crate::value::ValueType;

/// A candidate translation of a corpus case by a named model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub case_id: String,
    pub source_language: Language,
    pub target_language: Language,
    pub model_id: String,
    pub attempt: u32,
    pub translated_source: String,
}

/// Categorical outcome of executing one translated case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    WrongOutput,
    CompileError,
    RuntimeError,
    Timeout,
    DriverError,
}

impl Verdict {
    pub const ALL: [Verdict; 6] = [
        Verdict::Pass,
        Verdict::WrongOutput,
        Verdict::CompileError,
        Verdict::RuntimeError,
        Verdict::Timeout,
        Verdict::DriverError,
    ];
}

/// Outcome for a single input tuple: the decoded (or raw) stdout value and
/// whether it matched the expected output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputOutcome {
    pub actual: Option<serde_json::Value>,
    pub matched: bool,
}

/// Full execution outcome for one translation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub record: TranslationRecord,
    pub verdict: Verdict,
    pub per_input: Vec<InputOutcome>,
    pub diagnostics: String,
    pub wall_time_ms: u64,
}

/// Resource limits for one case execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub compile_timeout_s: u64,
    pub run_timeout_s: u64,
    pub max_output_bytes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            compile_timeout_s: 60,
            run_timeout_s: 10,
            max_output_bytes: 1024 * 1024,
        }
    }
}

/// Cap on diagnostics (compiler/runtime message) text.
pub const DIAGNOSTICS_CAP: usize = 8 * 1024;

/// Which phase a raw execution ended in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Compile,
    Run,
}

/// Raw result of compiling and running a driver, before judging.
#[derive(Debug, Clone)]
pub struct RawRun {
    pub exit_code: Option<i32>,
    pub stdout_lines: Vec<String>,
    pub stderr: String,
    pub phase: Phase,
    pub timed_out: bool,
}

/// Run-level metadata persisted as the JSONL header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model_id: String,
    pub timestamp_unix_s: u64,
    pub toolchain_versions: BTreeMap<String, String>,
    pub limits: Limits,
    pub parallelism: usize,
}

/// All case results from one run plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub metadata: RunMetadata,
    pub results: Vec<CaseResult>,
}

impl SuiteResult {
    /// Serialize as JSON-lines: metadata header then one result per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.metadata).expect("metadata serializes");
        out.push('\n');
        for result in &self.results {
            out.push_str(&serde_json::to_string(result).expect("result serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<SuiteResult, ExecError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| ExecError::BadSuiteFile {
            reason: "empty suite file".into(),
        })?;
        let metadata: RunMetadata =
            serde_json::from_str(header).map_err(|e| ExecError::BadSuiteFile {
                reason: format!("metadata line: {e}"),
            })?;
        let results = lines
            .map(|line| {
                serde_json::from_str(line).map_err(|e| ExecError::BadSuiteFile {
                    reason: format!("result line: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SuiteResult { metadata, results })
    }

    /// Verdict counts, for the report histogram.
    pub fn verdict_histogram(&self) -> BTreeMap<String, usize> {
        let mut hist = BTreeMap::new();
        for v in Verdict::ALL {
            hist.insert(format!("{v:?}"), 0usize);
        }
        for r in &self.results {
            *hist.get_mut(&format!("{:?}", r.verdict)).expect("verdict key") += 1;
        }
        hist
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("unknown case id `{0}` in translation records")]
    UnknownCase(String),
    #[error("no usable toolchain for {0}")]
    ToolchainMissing(Language),
    #[error("sandbox failure: {0}")]
    SandboxFailure(String),
    #[error("type {ty} not representable in {language}")]
    UnsupportedType { language: Language, ty: ValueType },
    #[error("suite contains no results")]
    EmptySuite,
    #[error("bad suite file: {reason}")]
    BadSuiteFile { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn truncate_utf8(text: &str, cap: usize) -> String {
    if text.len() <= cap {
        return text.to_string();
    }
    let mut end = cap;
    while end > 0 && !text.is_char_boundary(end) {
        end -= 1;
    }
    format!("{} …[truncated]", &text[..end])
}
