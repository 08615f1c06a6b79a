//! Command implementations behind the binary's subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{load_corpus, validate_case};
use crate::exec::{
    compute_sut_acc, run_suite, Limits, RunOptions, SuiteResult, ToolchainSet, TranslationRecord,
};
use crate::extract::{build_incidence, ElementMapSet};
use crate::lang::Language;
use crate::report::{render, ReportBundle, ReportFormat};
use crate::sets::{sets_report, LambdaChoice, LassoConfig, DEFAULT_SMOOTHING_ALPHA};
use crate::stune::{build_stuning_pairs, BuildConfig, RuleId};
use crate::translator::{batch_translate, Cache, TranslatorClient, TranslatorConfig};

/// Exit codes: 0 success, 1 check failed, 2 usage/environment error.
pub type ExitCode = i32;

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    2
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn parse_pairs(spec: &str) -> Result<Vec<(Language, Language)>, String> {
    spec.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (src, tgt) = pair
                .split_once(':')
                .ok_or_else(|| format!("pair `{pair}` is not src:tgt"))?;
            Ok((src.trim().parse()?, tgt.trim().parse()?))
        })
        .collect()
}

fn default_maps_dir(corpus_dir: &Path) -> PathBuf {
    corpus_dir
        .parent()
        .map(|p| p.join("elementmaps"))
        .unwrap_or_else(|| PathBuf::from("elementmaps"))
}

/// `validate`: static checks plus identity self-consistency execution for
/// every language whose toolchain is available.
pub fn cmd_validate(corpus_dir: &Path, jobs: usize, limits: Limits) -> ExitCode {
    if !corpus_dir.is_dir() {
        return fail(format!("corpus directory {} not found", corpus_dir.display()));
    }
    let corpus = match load_corpus(corpus_dir) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut violations = 0usize;
    for case in corpus.iter() {
        for violation in validate_case(case) {
            eprintln!("INVALID {}: {violation}", case.id);
            violations += 1;
        }
    }
    if violations > 0 {
        eprintln!("{violations} violation(s)");
        return 1;
    }
    println!("static checks: {} cases OK", corpus.len());

    let toolchains = match ToolchainSet::from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let mut failures = 0usize;
    for lang in corpus.languages() {
        if !toolchains.is_available(lang) {
            println!("self-consistency {lang}: SKIP (toolchain missing)");
            continue;
        }
        let subset = corpus.filter(Some(lang), None, None).expect("language filter");
        let records: Vec<TranslationRecord> = subset
            .iter()
            .map(|case| TranslationRecord {
                case_id: case.id.clone(),
                source_language: lang,
                target_language: lang,
                model_id: "identity".into(),
                attempt: 0,
                translated_source: case.source.clone(),
            })
            .collect();
        let options = RunOptions {
            limits,
            parallelism: jobs,
            toolchains: toolchains.clone(),
        };
        match run_suite(&subset, &records, &options) {
            Ok(suite) => {
                let failed: Vec<_> = suite
                    .results
                    .iter()
                    .filter(|r| r.verdict != crate::exec::Verdict::Pass)
                    .collect();
                if failed.is_empty() {
                    println!("self-consistency {lang}: {} cases PASS", suite.results.len());
                } else {
                    for result in &failed {
                        eprintln!(
                            "SELF-FAIL {} -> {:?}\n{}",
                            result.record.case_id, result.verdict, result.diagnostics
                        );
                    }
                    failures += failed.len();
                }
            }
            Err(e) => return fail(e),
        }
    }
    if failures > 0 {
        eprintln!("{failures} self-consistency failure(s)");
        1
    } else {
        0
    }
}

pub struct RunArgs {
    pub corpus_dir: PathBuf,
    pub pairs: Vec<(Language, Language)>,
    pub model_config: PathBuf,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub attempts: u32,
    pub limits: Limits,
}

/// On-disk run configuration; CLI flags override any field present here.
#[derive(Debug, Default, serde::Deserialize)]
pub struct RunConfigFile {
    pub corpus: Option<PathBuf>,
    pub pairs: Option<Vec<String>>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub attempts: Option<u32>,
    pub compile_timeout: Option<u64>,
    pub run_timeout: Option<u64>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// `run`: translate the corpus over the requested pairs, execute, and write
/// suite JSONL plus accuracy reports.
pub fn cmd_run(args: &RunArgs) -> ExitCode {
    let corpus = match load_corpus(&args.corpus_dir) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if args.pairs.is_empty() {
        return fail("no language pairs given (--pairs src:tgt[,src:tgt...])");
    }
    let toolchains = match ToolchainSet::from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let targets: Vec<Language> = args.pairs.iter().map(|&(_, t)| t).collect();
    let missing = toolchains.missing(&targets);
    if !missing.is_empty() {
        for lang in &missing {
            eprintln!("toolchain missing: {lang}");
        }
        return 2;
    }

    let config = match TranslatorConfig::load(&args.model_config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let cache = match Cache::from_env() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let client = TranslatorClient::new(config, cache);
    let records = batch_translate(&corpus, &args.pairs, &client, args.attempts, args.jobs);
    println!(
        "translated {} records ({} backend calls)",
        records.len(),
        client.backend_calls()
    );

    let options = RunOptions {
        limits: args.limits,
        parallelism: args.jobs,
        toolchains,
    };
    let suite = match run_suite(&corpus, &records, &options) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let table = match compute_sut_acc(&suite) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };

    let suite_path = args.out_dir.join("suite.jsonl");
    if let Err(e) = write_atomic(&suite_path, &suite.to_jsonl()) {
        return fail(e);
    }
    let bundle = ReportBundle::from_suite(&client.config.model_id, suite, table);
    for (name, format) in [
        ("report.json", ReportFormat::Json),
        ("report.md", ReportFormat::Markdown),
        ("results.csv", ReportFormat::Csv),
    ] {
        if let Err(e) = write_atomic(&args.out_dir.join(name), &render(&bundle, format)) {
            return fail(e);
        }
    }
    println!("wrote {}", suite_path.display());
    for (model, acc) in &bundle.acc_table.models {
        println!("{model}: Avg. {:.2}%", acc.average * 100.0);
    }
    0
}

pub struct SetsArgs {
    pub run_file: PathBuf,
    pub corpus_dir: PathBuf,
    pub maps_dir: Option<PathBuf>,
    pub lambda: LambdaChoice,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// `sets`: attribute suite failures to syntax elements.
pub fn cmd_sets(args: &SetsArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.run_file) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", args.run_file.display())),
    };
    let suite = match SuiteResult::from_jsonl(&text) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let corpus = match load_corpus(&args.corpus_dir) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let maps_dir = args
        .maps_dir
        .clone()
        .unwrap_or_else(|| default_maps_dir(&args.corpus_dir));
    let maps = match ElementMapSet::load_dir(&maps_dir) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };

    // restrict the corpus to the cases the run actually exercised
    let mut run_ids: Vec<String> = suite
        .results
        .iter()
        .map(|r| r.record.case_id.clone())
        .collect();
    run_ids.sort();
    run_ids.dedup();
    let subset = match corpus.filter(None, None, Some(&run_ids)) {
        Ok(s) => s,
        Err(e) => return fail(format!("corpus does not match run: {e}")),
    };
    let matrix = match build_incidence(&subset, &maps) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let config = LassoConfig {
        lambda: args.lambda,
        seed: args.seed,
        ..LassoConfig::default()
    };
    let report = match sets_report(&matrix, &suite, &maps, &config, DEFAULT_SMOOTHING_ALPHA) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };

    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Err(e) = write_atomic(&args.out_dir.join("sets.json"), &json) {
        return fail(e);
    }
    let mut md = String::from("| Rank | Element | Category | Log fail rate | Fail probability |\n|---|---|---|---|---|\n");
    for score in &report.scores {
        md.push_str(&format!(
            "| {} | {} | {} | {:.4} | {:.4} |\n",
            score.rank, score.element, score.category, score.log_fail_rate, score.fail_probability
        ));
    }
    if let Err(e) = write_atomic(&args.out_dir.join("sets.md"), &md) {
        return fail(e);
    }
    println!(
        "lambda={:.6} converged={} elements={}",
        report.lambda,
        report.converged,
        report.scores.len()
    );
    if let Some(top) = report.scores.first() {
        println!("worst element: {} ({})", top.element, top.category);
    }
    0
}

/// `report`: re-render a persisted run.
pub fn cmd_report(
    run_file: &Path,
    sets_file: Option<&Path>,
    format: ReportFormat,
    out: Option<&Path>,
) -> ExitCode {
    let text = match fs::read_to_string(run_file) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", run_file.display())),
    };
    let suite = match SuiteResult::from_jsonl(&text) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let table = match compute_sut_acc(&suite) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let model_id = suite.metadata.model_id.clone();
    let mut bundle = ReportBundle::from_suite(&model_id, suite, table);
    if let Some(path) = sets_file {
        match fs::read_to_string(path) {
            Ok(text) => match serde_json::from_str(&text) {
                Ok(sets) => bundle.sets = Some(sets),
                Err(e) => return fail(format!("{}: {e}", path.display())),
            },
            Err(e) => return fail(format!("{}: {e}", path.display())),
        }
    }
    let rendered = render(&bundle, format);
    match out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &rendered) {
                return fail(e);
            }
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    0
}

pub struct StuneArgs {
    pub mono_dir: PathBuf,
    pub rules: Vec<RuleId>,
    pub model_config: PathBuf,
    pub target: Language,
    pub out_file: PathBuf,
    pub jobs: usize,
    pub seed: u64,
    pub limits: Limits,
}

/// `stune`: build the rewrite dataset from a directory of C++ functions.
pub fn cmd_stune(args: &StuneArgs) -> ExitCode {
    let mut files: Vec<PathBuf> = match fs::read_dir(&args.mono_dir) {
        Ok(entries) => entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "cpp" || e == "cc" || e == "cxx"))
            .collect(),
        Err(e) => return fail(format!("{}: {e}", args.mono_dir.display())),
    };
    files.sort();
    if files.is_empty() {
        eprintln!("no C++ sources in {}", args.mono_dir.display());
        return 1;
    }
    let mut sources = Vec::with_capacity(files.len());
    for path in &files {
        match fs::read_to_string(path) {
            Ok(text) => sources.push((path.display().to_string(), text)),
            Err(e) => return fail(format!("{}: {e}", path.display())),
        }
    }

    let config = match TranslatorConfig::load(&args.model_config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let cache = match Cache::from_env() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let client = TranslatorClient::new(config, cache);
    let toolchains = match ToolchainSet::from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    if !toolchains.is_available(Language::Cpp) {
        return fail("stune requires a C++ toolchain for the equivalence gate");
    }

    let build = BuildConfig {
        rules: &args.rules,
        target: args.target,
        limits: args.limits,
        toolchains: &toolchains,
        probe_count: 5,
        seed: args.seed,
        parallelism: args.jobs,
    };
    let (pairs, stats) = build_stuning_pairs(&sources, &client, &build);

    let mut jsonl = String::new();
    for pair in &pairs {
        jsonl.push_str(&serde_json::to_string(pair).expect("pair serializes"));
        jsonl.push('\n');
    }
    if let Err(e) = write_atomic(&args.out_file, &jsonl) {
        return fail(e);
    }
    println!("pairs: {}", stats.pairs);
    for (rule, count) in &stats.rule_counts {
        println!("  {rule}: {count}");
    }
    for (name, reason) in &stats.drops {
        eprintln!("dropped {name}: {reason:?}");
    }
    if pairs.is_empty() {
        1
    } else {
        0
    }
}

/// `toolchains-check`: report availability and versions.
pub fn cmd_toolchains_check() -> ExitCode {
    let toolchains = match ToolchainSet::from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let mut missing = 0;
    for lang in Language::ALL {
        match toolchains.resolve(lang) {
            Ok(commands) => {
                let version = commands.version().unwrap_or_else(|| "unknown version".into());
                println!("{lang}: OK ({version})");
            }
            Err(_) => {
                println!("{lang}: MISSING");
                missing += 1;
            }
        }
    }
    if missing > 0 {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_spec_parses_lists() {
        let pairs = parse_pairs("cpp:python,java:csharp").unwrap();
        assert_eq!(
            pairs,
            vec![
                (Language::Cpp, Language::Python),
                (Language::Java, Language::Csharp)
            ]
        );
        assert!(parse_pairs("cpp-python").is_err());
        assert!(parse_pairs("cpp:klingon").is_err());
    }

    #[test]
    fn atomic_write_creates_parents_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/file.txt");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
    }
}
