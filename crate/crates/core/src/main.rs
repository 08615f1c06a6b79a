use std::path::PathBuf;

use clap::{Parser, Subcommand};

use syntaxprobe::cli;
use syntaxprobe::exec::Limits;
use syntaxprobe::report::ReportFormat;
use syntaxprobe::sets::LambdaChoice;
use syntaxprobe::stune::RuleId;
use syntaxprobe::Language;

#[derive(Parser)]
#[command(
    name = "syntaxprobe",
    about = "Syntactic unit tests and per-element failure attribution for program translators",
    version
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct LimitFlags {
    /// Per-case compile timeout in seconds
    #[arg(long, default_value_t = 60)]
    compile_timeout: u64,
    /// Per-case run timeout in seconds
    #[arg(long, default_value_t = 10)]
    run_timeout: u64,
}

impl LimitFlags {
    fn limits(&self) -> Limits {
        Limits {
            compile_timeout_s: self.compile_timeout,
            run_timeout_s: self.run_timeout,
            ..Limits::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus: static checks plus identity self-consistency
    Validate {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[command(flatten)]
        limits: LimitFlags,
    },
    /// Translate a corpus over language pairs, execute, and report
    Run {
        /// Optional run config JSON; explicit flags override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated src:tgt pairs, e.g. cpp:python,java:python
        #[arg(long)]
        pairs: Option<String>,
        /// Translator config JSON
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Attempts per case (pass@K)
        #[arg(long)]
        attempts: Option<u32>,
        #[arg(long)]
        compile_timeout: Option<u64>,
        #[arg(long)]
        run_timeout: Option<u64>,
    },
    /// Attribute failures in a run to syntax elements
    Sets {
        /// Suite JSONL produced by `run`
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        /// Element map directory (default: sibling `elementmaps` of corpus)
        #[arg(long)]
        maps: Option<PathBuf>,
        /// Regularization: a number or `auto`
        #[arg(long, default_value = "auto")]
        lambda: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a persisted run as json, markdown or csv
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Optional sets.json to include
        #[arg(long)]
        sets: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build rewrite pairs from a directory of C++ functions
    Stune {
        /// Directory of .cpp files, one function each
        #[arg(long)]
        mono: PathBuf,
        /// Comma-separated rule ids, or `all`
        #[arg(long, default_value = "all")]
        rules: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "python")]
        target: Language,
        #[arg(long, default_value = "stuning_pairs.jsonl")]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        limits: LimitFlags,
    },
    /// Report toolchain availability and versions
    ToolchainsCheck,
}

#[allow(clippy::too_many_arguments)]
fn build_run_args(
    config: Option<PathBuf>,
    corpus: Option<PathBuf>,
    pairs: Option<String>,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    attempts: Option<u32>,
    compile_timeout: Option<u64>,
    run_timeout: Option<u64>,
) -> Result<cli::RunArgs, String> {
    let file = match config {
        Some(path) => cli::RunConfigFile::load(&path)?,
        None => cli::RunConfigFile::default(),
    };
    let pairs_spec = pairs
        .or_else(|| file.pairs.as_ref().map(|p| p.join(",")))
        .ok_or("no language pairs given (--pairs or config `pairs`)")?;
    let model_config = model
        .or(file.model)
        .ok_or("no translator config given (--model or config `model`)")?;
    Ok(cli::RunArgs {
        corpus_dir: corpus.or(file.corpus).unwrap_or_else(|| PathBuf::from("corpus")),
        pairs: cli::parse_pairs(&pairs_spec)?,
        model_config,
        out_dir: out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        jobs: jobs.or(file.jobs).unwrap_or(4).max(1),
        attempts: attempts.or(file.attempts).unwrap_or(1).max(1),
        limits: Limits {
            compile_timeout_s: compile_timeout.or(file.compile_timeout).unwrap_or(60).max(1),
            run_timeout_s: run_timeout.or(file.run_timeout).unwrap_or(10).max(1),
            ..Limits::default()
        },
    })
}

fn parse_lambda(text: &str) -> Result<LambdaChoice, String> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(LambdaChoice::Auto);
    }
    let value: f64 = text.parse().map_err(|_| format!("bad lambda `{text}`"))?;
    if value < 0.0 {
        return Err("lambda must be nonnegative".into());
    }
    Ok(LambdaChoice::Fixed(value))
}

fn parse_rules(text: &str) -> Result<Vec<RuleId>, String> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(RuleId::ALL.to_vec());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect()
}

fn main() {
    let args = Args::parse();
    let code = match args.command {
        Command::Validate { corpus, jobs, limits } => {
            cli::cmd_validate(&corpus, jobs, limits.limits())
        }
        Command::Run {
            config,
            corpus,
            pairs,
            model,
            out,
            jobs,
            attempts,
            compile_timeout,
            run_timeout,
        } => match build_run_args(
            config, corpus, pairs, model, out, jobs, attempts, compile_timeout, run_timeout,
        ) {
            Ok(args) => cli::cmd_run(&args),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::Sets {
            run,
            corpus,
            maps,
            lambda,
            seed,
            out,
        } => match parse_lambda(&lambda) {
            Ok(lambda) => cli::cmd_sets(&cli::SetsArgs {
                run_file: run,
                corpus_dir: corpus,
                maps_dir: maps,
                lambda,
                seed,
                out_dir: out,
            }),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::Report { run, sets, format, out } => match format.parse::<ReportFormat>() {
            Ok(format) => cli::cmd_report(&run, sets.as_deref(), format, out.as_deref()),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::Stune {
            mono,
            rules,
            model,
            target,
            out,
            jobs,
            seed,
            limits,
        } => match parse_rules(&rules) {
            Ok(rules) => cli::cmd_stune(&cli::StuneArgs {
                mono_dir: mono,
                rules,
                model_config: model,
                target,
                out_file: out,
                jobs,
                seed,
                limits: limits.limits(),
            }),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::ToolchainsCheck => cli::cmd_toolchains_check(),
    };
    std::process::exit(code);
}
