//! Subprocess execution: compile (when the language has a compile phase) and
//! run generated drivers with timeouts, output caps and per-case isolation.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use crate::corpus::Corpus;
use crate::exec::driver::{artifact_file_name, driver_file_name, generate_driver};
use crate::exec::toolchain::{substitute, ToolchainSet};
use crate::exec::{
    judge, CaseResult, ExecError, Limits, Phase, RawRun, RunMetadata, SuiteResult,
    TranslationRecord, Verdict,
};
use crate::lang::Language;
use crate::value::Value;

/// Env var naming the directory temporary sandboxes are created under.
pub const WORKROOT_ENV: &str = "SYNTAXPROBE_WORKROOT";

/// Options for [`run_suite`] beyond the corpus and records.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub limits: Limits,
    pub parallelism: usize,
    pub toolchains: ToolchainSet,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            limits: Limits::default(),
            parallelism: 1,
            toolchains: ToolchainSet::default(),
        }
    }
}

/// Encode one input tuple as its JSON-array wire line.
fn input_line(tuple: &[Value]) -> String {
    let array: Vec<serde_json::Value> = tuple.iter().map(Value::to_json).collect();
    serde_json::to_string(&array).expect("tuple serializes")
}

/// Compile (if applicable) and run a driver in `workdir`, streaming all
/// inputs on stdin. The child is killed once the phase deadline passes.
pub fn compile_and_run(
    driver: &str,
    target: Language,
    inputs: &[Vec<Value>],
    limits: &Limits,
    toolchains: &ToolchainSet,
    workdir: &Path,
) -> Result<RawRun, ExecError> {
    let commands = toolchains.resolve(target)?;
    let src = workdir.join(driver_file_name(target));
    let out = workdir.join(artifact_file_name(target));
    std::fs::write(&src, driver).map_err(|e| ExecError::SandboxFailure(e.to_string()))?;

    if let Some(compile_template) = &commands.compile_cmd {
        let argv = substitute(compile_template, &src, &out, workdir);
        let run = spawn_capture(
            &argv,
            workdir,
            None,
            Duration::from_secs(limits.compile_timeout_s),
            limits.max_output_bytes,
        )?;
        if run.timed_out || run.exit_code != Some(0) {
            return Ok(RawRun {
                phase: Phase::Compile,
                ..run
            });
        }
    }

    let stdin_payload = inputs.iter().map(|t| input_line(t) + "\n").collect::<String>();
    let argv = substitute(&commands.run_cmd, &src, &out, workdir);
    let run = spawn_capture(
        &argv,
        workdir,
        Some(stdin_payload),
        Duration::from_secs(limits.run_timeout_s),
        limits.max_output_bytes,
    )?;
    Ok(run)
}

/// Spawn a process, feed stdin, capture capped stdout/stderr, enforce a
/// deadline.
fn spawn_capture(
    argv: &[String],
    workdir: &Path,
    stdin_payload: Option<String>,
    timeout: Duration,
    max_output: usize,
) -> Result<RawRun, ExecError> {
    let (bin, args) = argv
        .split_first()
        .ok_or_else(|| ExecError::SandboxFailure("empty argv".into()))?;
    let mut child = Command::new(bin)
        .args(args)
        .current_dir(workdir)
        .stdin(if stdin_payload.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| ExecError::SandboxFailure(format!("spawn {bin}: {e}")))?;

    let stdin_handle = stdin_payload.map(|payload| {
        let mut stdin = child.stdin.take().expect("piped stdin");
        std::thread::spawn(move || {
            let _ = stdin.write_all(payload.as_bytes());
            // stdin dropped here: EOF for the child
        })
    });
    let stdout_handle = capped_reader(child.stdout.take().expect("piped stdout"), max_output);
    let stderr_handle = capped_reader(child.stderr.take().expect("piped stderr"), max_output);

    let timed_out = !wait_with_deadline(&mut child, timeout)?;
    if timed_out {
        let _ = child.kill();
        let _ = child.wait();
    }
    let exit_code = if timed_out {
        None
    } else {
        child.wait().ok().and_then(|s| s.code())
    };

    if let Some(handle) = stdin_handle {
        let _ = handle.join();
    }
    let stdout = stdout_handle.join().unwrap_or_default();
    let stderr = stderr_handle.join().unwrap_or_default();

    Ok(RawRun {
        exit_code,
        stdout_lines: stdout.lines().map(str::to_string).collect(),
        stderr,
        phase: Phase::Run,
        timed_out,
    })
}

/// Returns Ok(true) if the child exited before the deadline.
fn wait_with_deadline(child: &mut Child, timeout: Duration) -> Result<bool, ExecError> {
    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => return Ok(true),
            Ok(None) => {
                if Instant::now() >= deadline {
                    return Ok(false);
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(ExecError::SandboxFailure(e.to_string())),
        }
    }
}

fn capped_reader(
    mut reader: impl Read + Send + 'static,
    cap: usize,
) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut collected = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            match reader.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    if collected.len() < cap {
                        let take = n.min(cap - collected.len());
                        collected.extend_from_slice(&buf[..take]);
                    }
                    // keep draining past the cap so the child never blocks
                }
            }
        }
        String::from_utf8_lossy(&collected).into_owned()
    })
}

/// Execute one record end to end in a fresh temporary directory.
fn run_one(
    corpus: &Corpus,
    record: &TranslationRecord,
    options: &RunOptions,
    workroot: Option<&Path>,
) -> Result<CaseResult, ExecError> {
    let case = corpus
        .get(&record.case_id)
        .ok_or_else(|| ExecError::UnknownCase(record.case_id.clone()))?;

    // Failed/empty translations short-circuit to CompileError; there is
    // nothing meaningful to build.
    if record.translated_source.trim().is_empty() {
        return Ok(CaseResult {
            record: record.clone(),
            verdict: Verdict::CompileError,
            per_input: Vec::new(),
            diagnostics: "empty translation".into(),
            wall_time_ms: 0,
        });
    }

    let started = Instant::now();
    let mut builder = tempfile::Builder::new();
    builder.prefix("sut-");
    let tempdir = match workroot {
        Some(root) => {
            std::fs::create_dir_all(root).map_err(|e| ExecError::SandboxFailure(e.to_string()))?;
            builder.tempdir_in(root)
        }
        None => builder.tempdir(),
    }
    .map_err(|e| ExecError::SandboxFailure(e.to_string()))?;

    let driver = generate_driver(case, &record.translated_source, record.target_language)?;
    let raw = compile_and_run(
        &driver,
        record.target_language,
        &case.inputs,
        &options.limits,
        &options.toolchains,
        tempdir.path(),
    )?;
    let wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(judge(&raw, case, record, wall_time_ms))
}

/// Run every record through the harness with a bounded worker pool.
///
/// Results are ordered like the input records, so verdicts are identical
/// regardless of `parallelism`.
pub fn run_suite(
    corpus: &Corpus,
    records: &[TranslationRecord],
    options: &RunOptions,
) -> Result<SuiteResult, ExecError> {
    for record in records {
        if corpus.get(&record.case_id).is_none() {
            return Err(ExecError::UnknownCase(record.case_id.clone()));
        }
    }
    let mut targets: Vec<Language> = records.iter().map(|r| r.target_language).collect();
    targets.sort();
    targets.dedup();
    if let Some(&missing) = options.toolchains.missing(&targets).first() {
        return Err(ExecError::ToolchainMissing(missing));
    }

    let workroot = std::env::var(WORKROOT_ENV).ok().map(std::path::PathBuf::from);
    let workers = options.parallelism.max(1).min(records.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<CaseResult, ExecError>>>> =
        Mutex::new((0..records.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= records.len() {
                    break;
                }
                let outcome = run_one(corpus, &records[i], options, workroot.as_deref());
                slots.lock().expect("result lock")[i] = Some(outcome);
            });
        }
    });

    let mut results = Vec::with_capacity(records.len());
    for slot in slots.into_inner().expect("result lock") {
        results.push(slot.expect("every record executed")?);
    }

    let model_id = records
        .first()
        .map(|r| r.model_id.clone())
        .unwrap_or_else(|| "none".into());
    let metadata = RunMetadata {
        model_id,
        timestamp_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        toolchain_versions: options.toolchains.versions(&targets),
        limits: options.limits,
        parallelism: options.parallelism,
    };
    Ok(SuiteResult { metadata, results })
}
