//! Diagnostic harness for program translators: fine-grained syntactic unit
//! tests executed across four languages, per-element failure attribution via
//! regression on a tests-by-elements incidence matrix, and generation of
//! logically equivalent rewrite datasets.

pub mod cli;
pub mod corpus;
pub mod exec;
pub mod extract;
pub mod lang;
pub mod report;
pub mod sets;
pub mod stune;
pub mod translator;
pub mod value;

pub use corpus::{load_corpus, validate_case, Corpus, CorpusError, SutCase, Violation};
pub use exec::{
    compute_sut_acc, generate_driver, judge, run_suite, AccTable, CaseResult, ExecError, Limits,
    RunOptions, SuiteResult, ToolchainSet, TranslationRecord, Verdict,
};
pub use extract::{
    build_incidence, extract_elements, parse, ElementMap, ElementMapSet, ExtractError,
    IncidenceMatrix, SyntaxTree,
};
pub use lang::{Category, Language};
pub use value::{Signature, Value, ValueType};
