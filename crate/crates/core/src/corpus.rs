//! The syntactic unit test case model, its on-disk JSON format, and
//! validation.
//!
//! One JSON document per case; case ids are path-like
//! (`cpp/operator/division_operator`) and double as the file path below the
//! corpus root.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::extract::{self, FunctionInfo};
use crate::lang::{Category, Language};
use crate::value::{Signature, Value};

/// One syntax-element test: a source function, typed signature, input tuples
/// and expected outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SutCase {
    pub id: String,
    pub language: Language,
    pub element_name: String,
    pub element_category: Category,
    pub entry: String,
    pub signature: Signature,
    pub source: String,
    pub inputs: Vec<Vec<Value>>,
    pub expected: Vec<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ElementDecl {
    name: String,
    category: Category,
}

/// On-disk shape; inputs/expected stay raw JSON until typed by the signature.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCase {
    id: String,
    language: Language,
    element: ElementDecl,
    entry: String,
    signature: Signature,
    source: String,
    inputs: Vec<Vec<Json>>,
    expected: Vec<Json>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed case {file}: {reason}")]
    MalformedCase { file: String, reason: String },
    #[error("duplicate case id `{0}`")]
    DuplicateId(String),
    #[error("unknown case id `{0}`")]
    UnknownId(String),
    #[error("corpus root {0} does not exist or is not a directory")]
    BadRoot(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SutCase {
    fn from_raw(raw: RawCase, file: &str) -> Result<Self, CorpusError> {
        let malformed = |reason: String| CorpusError::MalformedCase {
            file: file.to_string(),
            reason,
        };
        if raw.inputs.len() != raw.expected.len() {
            return Err(malformed(format!(
                "{} input tuples but {} expected outputs",
                raw.inputs.len(),
                raw.expected.len()
            )));
        }
        let params = raw.signature.param_types();
        let mut inputs = Vec::with_capacity(raw.inputs.len());
        for (i, tuple) in raw.inputs.iter().enumerate() {
            if tuple.len() != params.len() {
                return Err(malformed(format!(
                    "input tuple {} has arity {}, signature expects {}",
                    i,
                    tuple.len(),
                    params.len()
                )));
            }
            let typed = tuple
                .iter()
                .zip(&params)
                .map(|(json, ty)| Value::from_json(json, ty))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| malformed(format!("input tuple {i}: {e}")))?;
            inputs.push(typed);
        }
        let expected = raw
            .expected
            .iter()
            .enumerate()
            .map(|(i, json)| {
                Value::from_json(json, &raw.signature.returns.ty)
                    .map_err(|e| malformed(format!("expected output {i}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SutCase {
            id: raw.id,
            language: raw.language,
            element_name: raw.element.name,
            element_category: raw.element.category,
            entry: raw.entry,
            signature: raw.signature,
            source: raw.source,
            inputs,
            expected,
        })
    }

    fn to_raw(&self) -> RawCase {
        RawCase {
            id: self.id.clone(),
            language: self.language,
            element: ElementDecl {
                name: self.element_name.clone(),
                category: self.element_category,
            },
            entry: self.entry.clone(),
            signature: self.signature.clone(),
            source: self.source.clone(),
            inputs: self
                .inputs
                .iter()
                .map(|tuple| tuple.iter().map(Value::to_json).collect())
                .collect(),
            expected: self.expected.iter().map(Value::to_json).collect(),
        }
    }

    pub fn from_json_str(text: &str, file: &str) -> Result<Self, CorpusError> {
        let raw: RawCase =
            serde_json::from_str(text).map_err(|e| CorpusError::MalformedCase {
                file: file.to_string(),
                reason: e.to_string(),
            })?;
        SutCase::from_raw(raw, file)
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.to_raw()).expect("case serializes");
        out.push('\n');
        out
    }
}

/// A static check that failed for a case. Violations are collected, not
/// thrown, so a validator pass can report everything at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LengthMismatch { inputs: usize, expected: usize },
    ArityMismatch { tuple: usize, arity: usize, expected: usize },
    ParseError,
    MissingEntry { entry: String, arity: usize },
    BadId(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { inputs, expected } => {
                write!(f, "{inputs} input tuples but {expected} expected outputs")
            }
            Violation::ArityMismatch { tuple, arity, expected } => {
                write!(f, "input tuple {tuple} has arity {arity}, signature expects {expected}")
            }
            Violation::ParseError => write!(f, "source does not parse under the language grammar"),
            Violation::MissingEntry { entry, arity } => {
                write!(f, "no function `{entry}` with arity {arity} in source")
            }
            Violation::BadId(id) => write!(f, "id `{id}` is not a relative path-like id"),
        }
    }
}

/// Check every per-case invariant, including a parse of the source.
pub fn validate_case(case: &SutCase) -> Vec<Violation> {
    let mut violations = Vec::new();
    if case.inputs.len() != case.expected.len() {
        violations.push(Violation::LengthMismatch {
            inputs: case.inputs.len(),
            expected: case.expected.len(),
        });
    }
    let arity = case.signature.arity();
    for (i, tuple) in case.inputs.iter().enumerate() {
        if tuple.len() != arity {
            violations.push(Violation::ArityMismatch {
                tuple: i,
                arity: tuple.len(),
                expected: arity,
            });
        }
    }
    if case.id.is_empty() || case.id.starts_with('/') || case.id.ends_with('/') || case.id.contains("..") {
        violations.push(Violation::BadId(case.id.clone()));
    }
    match extract::parse(&case.source, case.language) {
        Ok(tree) if !tree.has_error() => {
            let found = extract::find_functions(&tree);
            let hit = found
                .iter()
                .any(|FunctionInfo { name, arity: a }| *name == case.entry && *a == arity);
            if !hit {
                violations.push(Violation::MissingEntry {
                    entry: case.entry.clone(),
                    arity,
                });
            }
        }
        _ => violations.push(Violation::ParseError),
    }
    violations
}

/// An immutable, id-ordered collection of cases with language and element
/// indexes.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    cases: Vec<SutCase>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn from_cases(mut cases: Vec<SutCase>) -> Result<Self, CorpusError> {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = BTreeMap::new();
        for (i, case) in cases.iter().enumerate() {
            if by_id.insert(case.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(case.id.clone()));
            }
        }
        Ok(Corpus { cases, by_id })
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SutCase> {
        self.cases.iter()
    }

    pub fn get(&self, id: &str) -> Option<&SutCase> {
        self.by_id.get(id).map(|&i| &self.cases[i])
    }

    pub fn by_language(&self, language: Language) -> impl Iterator<Item = &SutCase> {
        self.cases.iter().filter(move |c| c.language == language)
    }

    pub fn by_element_name<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a SutCase> {
        self.cases.iter().filter(move |c| c.element_name == name)
    }

    pub fn languages(&self) -> Vec<Language> {
        let mut langs: Vec<Language> = Vec::new();
        for case in &self.cases {
            if !langs.contains(&case.language) {
                langs.push(case.language);
            }
        }
        langs.sort();
        langs
    }

    /// Conjunctive filter; preserves id order.
    pub fn filter(
        &self,
        language: Option<Language>,
        category: Option<Category>,
        ids: Option<&[String]>,
    ) -> Result<Corpus, CorpusError> {
        if let Some(ids) = ids {
            for id in ids {
                if !self.by_id.contains_key(id) {
                    return Err(CorpusError::UnknownId(id.clone()));
                }
            }
        }
        let cases = self
            .cases
            .iter()
            .filter(|c| language.is_none_or(|l| c.language == l))
            .filter(|c| category.is_none_or(|cat| c.element_category == cat))
            .filter(|c| ids.is_none_or(|ids| ids.contains(&c.id)))
            .cloned()
            .collect();
        Corpus::from_cases(cases)
    }

    /// Write one JSON document per case at `<root>/<id>.json`.
    pub fn save(&self, root: &Path) -> Result<(), CorpusError> {
        for case in &self.cases {
            let path = root.join(format!("{}.json", case.id));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, case.to_json_string())?;
        }
        Ok(())
    }
}

/// Load every `*.json` under `root` as a case; deterministic id ordering.
pub fn load_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::BadRoot(root.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    let mut cases = Vec::with_capacity(files.len());
    for path in files {
        let text = fs::read_to_string(&path)?;
        let file = path.display().to_string();
        cases.push(SutCase::from_json_str(&text, &file)?);
    }
    Corpus::from_cases(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn division_case_json() -> String {
        json!({
            "id": "cpp/operator/division_operator",
            "language": "cpp",
            "element": {"name": "division operator", "category": "Operator"},
            "entry": "foo",
            "signature": {
                "params": [{"type": "int"}, {"type": "int"}],
                "returns": {"type": "int"}
            },
            "source": "int foo(int a, int b) {\n    int c = a / b;\n    return c;\n}\n",
            "inputs": [[9, 2], [9, 3], [9, 4]],
            "expected": [4, 3, 2]
        })
        .to_string()
    }

    #[test]
    fn load_single_case_directory() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("cpp/operator");
        fs::create_dir_all(&sub).unwrap();
        fs::write(sub.join("division_operator.json"), division_case_json()).unwrap();

        let corpus = load_corpus(dir.path()).unwrap();
        assert_eq!(corpus.len(), 1);
        let case = corpus.get("cpp/operator/division_operator").unwrap();
        assert_eq!(
            case.inputs,
            vec![
                vec![Value::Int(9), Value::Int(2)],
                vec![Value::Int(9), Value::Int(3)],
                vec![Value::Int(9), Value::Int(4)],
            ]
        );
        assert_eq!(case.expected, vec![Value::Int(4), Value::Int(3), Value::Int(2)]);
    }

    #[test]
    fn empty_directory_loads_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn length_mismatch_is_malformed() {
        let text = json!({
            "id": "cpp/operator/bad",
            "language": "cpp",
            "element": {"name": "division operator", "category": "Operator"},
            "entry": "foo",
            "signature": {"params": [{"type": "int"}], "returns": {"type": "int"}},
            "source": "int foo(int a) { return a; }",
            "inputs": [[1], [2], [3]],
            "expected": [1, 2]
        })
        .to_string();
        let err = SutCase::from_json_str(&text, "bad.json").unwrap_err();
        assert!(matches!(err, CorpusError::MalformedCase { .. }), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let case = SutCase::from_json_str(&division_case_json(), "a.json").unwrap();
        let err = Corpus::from_cases(vec![case.clone(), case]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(_)));
    }

    #[test]
    fn validate_do_while_java_case() {
        let text = json!({
            "id": "java/loop_branch/do_while_statement",
            "language": "java",
            "element": {"name": "do-while statement", "category": "LoopBranch"},
            "entry": "foo",
            "signature": {"params": [{"type": "int"}], "returns": {"type": "int"}},
            "source": "int foo(int a) {\n    int i = a;\n    do {\n        i++;\n    }\n    while (i < a);\n    return i;\n}\n",
            "inputs": [[3]],
            "expected": [4]
        })
        .to_string();
        let case = SutCase::from_json_str(&text, "t.json").unwrap();
        assert_eq!(validate_case(&case), vec![]);
    }

    #[test]
    fn validate_flags_parse_error_and_missing_entry() {
        let mut case = SutCase::from_json_str(&division_case_json(), "t.json").unwrap();
        case.source = "int foo( {".into();
        assert!(validate_case(&case).contains(&Violation::ParseError));

        let mut case = SutCase::from_json_str(&division_case_json(), "t.json").unwrap();
        case.entry = "bar".into();
        assert!(matches!(
            validate_case(&case).as_slice(),
            [Violation::MissingEntry { .. }]
        ));
    }

    #[test]
    fn filter_is_conjunctive_and_checks_ids() {
        let case = SutCase::from_json_str(&division_case_json(), "t.json").unwrap();
        let corpus = Corpus::from_cases(vec![case]).unwrap();
        let only_python = corpus.filter(Some(Language::Python), None, None).unwrap();
        assert!(only_python.is_empty());
        let ops = corpus.filter(Some(Language::Cpp), Some(Category::Operator), None).unwrap();
        assert_eq!(ops.len(), 1);
        let err = corpus.filter(None, None, Some(&["nope".to_string()])).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownId(_)));
    }

    #[test]
    fn save_load_round_trip_preserves_cases() {
        let case = SutCase::from_json_str(&division_case_json(), "t.json").unwrap();
        let corpus = Corpus::from_cases(vec![case.clone()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.save(dir.path()).unwrap();
        let reloaded = load_corpus(dir.path()).unwrap();
        assert_eq!(reloaded.len(), 1);
        assert_eq!(reloaded.get(&case.id).unwrap(), &case);
    }
}
