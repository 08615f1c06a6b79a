//! Verdict assignment: decode driver stdout under the case signature and
//! compare against expected outputs.

use crate::corpus::SutCase;
use crate::exec::{
    truncate_utf8, CaseResult, InputOutcome, Phase, RawRun, TranslationRecord, Verdict,
    DIAGNOSTICS_CAP,
};
use crate::value::Value;

/// Judge a raw execution. Every failure mode becomes a verdict; this never
/// errors.
pub fn judge(raw: &RawRun, case: &SutCase, record: &TranslationRecord, wall_time_ms: u64) -> CaseResult {
    let diagnostics = truncate_utf8(&raw.stderr, DIAGNOSTICS_CAP);
    let mut result = CaseResult {
        record: record.clone(),
        verdict: Verdict::Pass,
        per_input: Vec::new(),
        diagnostics,
        wall_time_ms,
    };

    if raw.phase == Phase::Compile {
        result.verdict = Verdict::CompileError;
        return result;
    }
    if raw.timed_out {
        result.verdict = Verdict::Timeout;
        return result;
    }
    if raw.exit_code != Some(0) || raw.stdout_lines.len() < case.inputs.len() {
        result.verdict = Verdict::RuntimeError;
        // Keep whatever partial matches we can decode for diagnosis.
        result.per_input = decode_lines(raw, case).0;
        return result;
    }

    let (per_input, any_undecodable) = decode_lines(raw, case);
    let all_matched = per_input.iter().all(|o| o.matched);
    result.per_input = per_input;
    result.verdict = if any_undecodable {
        Verdict::DriverError
    } else if all_matched {
        Verdict::Pass
    } else {
        Verdict::WrongOutput
    };
    result
}

fn decode_lines(raw: &RawRun, case: &SutCase) -> (Vec<InputOutcome>, bool) {
    let mut outcomes = Vec::with_capacity(case.expected.len());
    let mut any_undecodable = false;
    for (i, expected) in case.expected.iter().enumerate() {
        let Some(line) = raw.stdout_lines.get(i) else {
            outcomes.push(InputOutcome {
                actual: None,
                matched: false,
            });
            continue;
        };
        match serde_json::from_str::<serde_json::Value>(line) {
            Ok(json) => match Value::from_json(&json, &case.signature.returns.ty) {
                Ok(actual) => {
                    let matched = actual.matches(expected);
                    outcomes.push(InputOutcome {
                        actual: Some(json),
                        matched,
                    });
                }
                Err(_) => {
                    any_undecodable = true;
                    outcomes.push(InputOutcome {
                        actual: Some(json),
                        matched: false,
                    });
                }
            },
            Err(_) => {
                any_undecodable = true;
                outcomes.push(InputOutcome {
                    actual: Some(serde_json::Value::String(line.clone())),
                    matched: false,
                });
            }
        }
    }
    (outcomes, any_undecodable)
}
