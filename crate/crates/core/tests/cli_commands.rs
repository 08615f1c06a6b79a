//! Binary-level tests of the CLI subcommands and their exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_syntaxprobe"));
    cmd.env_remove("SYNTAXPROBE_TOOLCHAINS")
        .env_remove("SYNTAXPROBE_CACHE")
        .env_remove("SYNTAXPROBE_WORKROOT");
    cmd
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn write_identity_config(dir: &Path) -> PathBuf {
    let path = dir.join("identity.json");
    fs::write(
        &path,
        r#"{"model_id": "identity", "command": {"argv": ["cp", "{src_file}", "{out_file}"]}}"#,
    )
    .unwrap();
    path
}

#[test]
fn validate_seed_corpus_exits_zero() {
    let output = bin()
        .args(["validate", "--corpus"])
        .arg(repo_root().join("corpus"))
        .args(["--jobs", "8"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("static checks: 100 cases OK"));
}

#[test]
fn validate_broken_case_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cpp/operator");
    fs::create_dir_all(&sub).unwrap();
    fs::write(
        sub.join("broken.json"),
        serde_json::json!({
            "id": "cpp/operator/broken",
            "language": "cpp",
            "element": {"name": "x", "category": "Operator"},
            "entry": "bar",
            "signature": {"params": [{"type": "int"}], "returns": {"type": "int"}},
            "source": "int foo(int a) { return a; }",
            "inputs": [[1]],
            "expected": [1]
        })
        .to_string(),
    )
    .unwrap();
    let output = bin().args(["validate", "--corpus"]).arg(dir.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("INVALID"));
}

#[test]
fn validate_missing_directory_exits_two() {
    let output = bin()
        .args(["validate", "--corpus", "/nonexistent/corpus/dir"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn run_identity_reports_full_accuracy_and_is_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_identity_config(dir.path());
    let out_dir = dir.path().join("out");
    let cache_dir = dir.path().join("cache");

    let run = |out: &Path| {
        bin()
            .args(["run", "--corpus"])
            .arg(repo_root().join("corpus"))
            .args(["--pairs", "python:python", "--model"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .args(["--jobs", "8"])
            .env("SYNTAXPROBE_CACHE", &cache_dir)
            .output()
            .unwrap()
    };
    let output = run(&out_dir);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("identity: Avg. 100.00%"), "{stdout}");
    assert!(out_dir.join("suite.jsonl").is_file());
    assert!(out_dir.join("report.md").is_file());
    assert!(out_dir.join("report.json").is_file());
    assert!(out_dir.join("results.csv").is_file());

    // warm cache: second run performs zero backend calls
    let out2 = dir.path().join("out2");
    let output = run(&out2);
    assert!(String::from_utf8_lossy(&output.stdout).contains("(0 backend calls)"));

    // sets on the produced run
    let output = bin()
        .args(["sets", "--run"])
        .arg(out_dir.join("suite.jsonl"))
        .args(["--corpus"])
        .arg(repo_root().join("corpus"))
        .args(["--lambda", "auto", "--out"])
        .arg(dir.path().join("sets_out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(dir.path().join("sets_out/sets.json").is_file());

    // report re-render round-trips through the sets schema
    let output = bin()
        .args(["report", "--run"])
        .arg(out_dir.join("suite.jsonl"))
        .args(["--sets"])
        .arg(dir.path().join("sets_out/sets.json"))
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let bundle: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(bundle["sets"]["scores"].as_array().is_some());
}

#[test]
fn run_with_empty_translator_yields_all_compile_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.json");
    // translator that always produces an empty file -> empty translations
    fs::write(
        &config,
        r#"{"model_id": "empty", "command": {"argv": ["touch", "{out_file}"]}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["run", "--corpus"])
        .arg(repo_root().join("corpus"))
        .args(["--pairs", "python:python", "--model"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--jobs", "8"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).contains("empty: Avg. 0.00%"));
    let suite = fs::read_to_string(out_dir.join("suite.jsonl")).unwrap();
    let results: Vec<serde_json::Value> = suite
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!results.is_empty());
    assert!(results.iter().all(|r| r["verdict"] == "CompileError"));
}

#[test]
fn run_fails_fast_when_target_toolchain_missing() {
    // this environment has no Java toolchain; the command must list it and
    // exit before translating or executing anything
    let dir = tempfile::tempdir().unwrap();
    let config = write_identity_config(dir.path());
    let output = bin()
        .args(["run", "--corpus"])
        .arg(repo_root().join("corpus"))
        .args(["--pairs", "cpp:java", "--model"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    if output.status.code() == Some(0) {
        // machines with a full JDK run this pair for real; nothing to check
        return;
    }
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("toolchain missing: java"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn stune_emits_pairs_for_published_examples() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono");
    fs::create_dir_all(&mono).unwrap();
    let sources = [
        ("row1.cpp", "int foo(int a) {\n    int b = ++a;\n    return b;\n}\n"),
        ("row2.cpp", "long foo() {\n    long a(1);\n    return a;\n}\n"),
        ("row3.cpp", "int foo() {\n    int i, j;\n    for (i = 0, j = 0;\n        i < 5; i++) {\n        j += i;\n    }\n    return j;\n}\n"),
        ("row4.cpp", "int foo() {\n    int a = 0;\n    do {\n        a = a + 1;\n    } while (a < 5);\n    return a;\n}\n"),
        ("row5.cpp", "int foo() {\n    int a = 0, b = 0;\n    switch (a) {\n        case 0:\n            b = 1; break;\n        case 1:\n            b = 2; break;\n        default:\n            b = 3;\n    }\n    return b;\n}\n"),
        ("row6.cpp", "int foo() {\n    int a = 1;\n    int b;\n    b = (a > 0) ? 1 : -1;\n    return b;\n}\n"),
    ];
    for (name, text) in sources {
        fs::write(mono.join(name), text).unwrap();
    }
    let config = write_identity_config(dir.path());
    let out_file = dir.path().join("pairs.jsonl");
    let output = bin()
        .args(["stune", "--mono"])
        .arg(&mono)
        .args(["--rules", "all", "--model"])
        .arg(&config)
        .args(["--target", "python", "--out"])
        .arg(&out_file)
        .args(["--jobs", "4"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("pairs: 6"), "{stdout}");
    for rule in [
        "update_expression",
        "long_keyword",
        "comma_expression",
        "do_while",
        "switch_case",
        "conditional_expression",
    ] {
        assert!(stdout.contains(rule), "missing rule count for {rule}: {stdout}");
    }
    let pairs: Vec<serde_json::Value> = fs::read_to_string(&out_file)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(pairs.len(), 6);
    for pair in &pairs {
        assert!(pair["src"].as_str().is_some());
        assert!(pair["src_modified"] != pair["src"]);
        assert_eq!(pair["src_lang"], "cpp");
        assert_eq!(pair["tgt_lang"], "python");
        assert!(!pair["rules"].as_array().unwrap().is_empty());
    }
}

#[test]
fn stune_rule_filter_limits_matches() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono");
    fs::create_dir_all(&mono).unwrap();
    fs::write(
        mono.join("dowhile.cpp"),
        "int foo() {\n    int a = 0;\n    do {\n        a = a + 1;\n    } while (a < 5);\n    return a;\n}\n",
    )
    .unwrap();
    fs::write(
        mono.join("ternary.cpp"),
        "int foo() {\n    int a = 1;\n    int b;\n    b = (a > 0) ? 1 : -1;\n    return b;\n}\n",
    )
    .unwrap();
    let config = write_identity_config(dir.path());
    let out_file = dir.path().join("pairs.jsonl");
    let output = bin()
        .args(["stune", "--mono"])
        .arg(&mono)
        .args(["--rules", "do_while", "--model"])
        .arg(&config)
        .args(["--out"])
        .arg(&out_file)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let pairs: Vec<serde_json::Value> = fs::read_to_string(&out_file)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(pairs.len(), 1, "only the do-while source matches");
    assert_eq!(pairs[0]["rules"], serde_json::json!(["do_while"]));
}

#[test]
fn stune_empty_directory_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono");
    fs::create_dir_all(&mono).unwrap();
    let config = write_identity_config(dir.path());
    let output = bin()
        .args(["stune", "--mono"])
        .arg(&mono)
        .args(["--model"])
        .arg(&config)
        .args(["--out"])
        .arg(dir.path().join("pairs.jsonl"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn toolchains_check_lists_all_languages() {
    let output = bin().arg("toolchains-check").output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    for lang in ["cpp", "java", "python", "csharp"] {
        assert!(stdout.contains(lang), "{stdout}");
    }
}

#[test]
fn run_config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_identity_config(dir.path());
    let corpus = repo_root().join("corpus");
    let out_a = dir.path().join("out_a");
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        serde_json::json!({
            "corpus": corpus,
            "pairs": ["python:python"],
            "model": model,
            "out": out_a,
            "jobs": 8
        })
        .to_string(),
    )
    .unwrap();

    let output = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(out_a.join("suite.jsonl").is_file());

    // an explicit flag overrides the config's output directory
    let out_b = dir.path().join("out_b");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_b)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(out_b.join("suite.jsonl").is_file());
}
