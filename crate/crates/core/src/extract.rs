//! Grammar-based parsing, the node-kind to syntax-element map, and the
//! binary tests-by-elements incidence matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::Node;

use crate::corpus::Corpus;
use crate::lang::{Category, Language};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("grammar for {0} could not be loaded: {1}")]
    Grammar(Language, String),
    #[error("parser returned no tree for {0} source")]
    NoTree(Language),
    #[error("source has parse errors; element extraction requires an error-free tree")]
    ParseErrorPresent,
    #[error("case `{0}` does not parse cleanly")]
    CaseParseError(String),
    #[error("case `{0}` yields no mapped elements")]
    EmptyRow(String),
    #[error("no element map for language {0}")]
    MissingMap(Language),
    #[error("element map file {path}: {reason}")]
    BadMapFile { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn grammar(language: Language) -> tree_sitter::Language {
    match language {
        Language::Cpp => tree_sitter_cpp::LANGUAGE.into(),
        Language::Java => tree_sitter_java::LANGUAGE.into(),
        Language::Python => tree_sitter_python::LANGUAGE.into(),
        Language::Csharp => tree_sitter_c_sharp::LANGUAGE.into(),
    }
}

/// A parsed source file. Owns the source text so byte ranges stay valid.
pub struct SyntaxTree {
    tree: tree_sitter::Tree,
    source: String,
    language: Language,
}

impl SyntaxTree {
    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn has_error(&self) -> bool {
        self.tree.root_node().has_error()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn node_text(&self, node: Node<'_>) -> &str {
        &self.source[node.byte_range()]
    }

    /// Visit every node in the tree, anonymous tokens included.
    pub fn visit_all<'t>(&'t self, f: &mut impl FnMut(Node<'t>)) {
        fn walk<'a>(node: Node<'a>, f: &mut impl FnMut(Node<'a>)) {
            f(node);
            let mut cursor = node.walk();
            for child in node.children(&mut cursor) {
                walk(child, f);
            }
        }
        walk(self.tree.root_node(), f);
    }
}

/// Parse `source` under the grammar for `language`.
///
/// The returned tree spans the entire source; the error flag is faithful to
/// whether the grammar reported any error or missing node.
pub fn parse(source: &str, language: Language) -> Result<SyntaxTree, ExtractError> {
    let mut parser = tree_sitter::Parser::new();
    parser
        .set_language(&grammar(language))
        .map_err(|e| ExtractError::Grammar(language, e.to_string()))?;
    let tree = parser
        .parse(source, None)
        .ok_or(ExtractError::NoTree(language))?;
    Ok(SyntaxTree {
        tree,
        source: source.to_string(),
        language,
    })
}

/// A named function-like definition found in a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub arity: usize,
}

/// Collect function/method definitions (any nesting depth).
pub fn find_functions(tree: &SyntaxTree) -> Vec<FunctionInfo> {
    let mut out = Vec::new();
    tree.visit_all(&mut |node| {
        let is_def = match tree.language() {
            Language::Cpp | Language::Python => node.kind() == "function_definition",
            Language::Java => node.kind() == "method_declaration",
            Language::Csharp => {
                node.kind() == "local_function_statement" || node.kind() == "method_declaration"
            }
        };
        if !is_def {
            return;
        }
        let name = match tree.language() {
            Language::Cpp => cpp_declarator_name(tree, node),
            _ => node
                .child_by_field_name("name")
                .map(|n| tree.node_text(n).to_string()),
        };
        let Some(name) = name else { return };
        let params = match tree.language() {
            Language::Cpp => cpp_parameter_list(node),
            _ => node.child_by_field_name("parameters"),
        };
        let arity = params.map_or(0, |p| count_params(tree.language(), p));
        out.push(FunctionInfo { name, arity });
    });
    out
}

fn cpp_declarator_name(tree: &SyntaxTree, def: Node<'_>) -> Option<String> {
    let mut decl = def.child_by_field_name("declarator")?;
    while decl.kind() != "function_declarator" {
        decl = decl.child_by_field_name("declarator")?;
    }
    let inner = decl.child_by_field_name("declarator")?;
    Some(tree.node_text(inner).to_string())
}

fn cpp_parameter_list<'a>(def: Node<'a>) -> Option<Node<'a>> {
    let mut decl = def.child_by_field_name("declarator")?;
    while decl.kind() != "function_declarator" {
        decl = decl.child_by_field_name("declarator")?;
    }
    decl.child_by_field_name("parameters")
}

fn count_params(language: Language, params: Node<'_>) -> usize {
    let accepted: &[&str] = match language {
        Language::Cpp => &["parameter_declaration", "optional_parameter_declaration"],
        Language::Java => &["formal_parameter", "spread_parameter"],
        Language::Python => &[
            "identifier",
            "typed_parameter",
            "default_parameter",
            "typed_default_parameter",
        ],
        Language::Csharp => &["parameter"],
    };
    let mut cursor = params.walk();
    params
        .children(&mut cursor)
        .filter(|c| accepted.contains(&c.kind()))
        .count()
}

/// Per-language mapping from grammar node kinds to syntax-element ids, and
/// from element ids to the five categories.
#[derive(Debug, Clone)]
pub struct ElementMap {
    pub language: Language,
    elements: BTreeMap<String, String>,
    categories: BTreeMap<String, Category>,
    names: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct ElementMapFile {
    language: Language,
    elements: BTreeMap<String, String>,
    categories: BTreeMap<String, Category>,
    #[serde(default)]
    names: BTreeMap<String, String>,
}

impl ElementMap {
    pub fn from_parts(
        language: Language,
        elements: BTreeMap<String, String>,
        categories: BTreeMap<String, Category>,
        names: BTreeMap<String, String>,
    ) -> Result<Self, String> {
        for (kind, id) in &elements {
            if !categories.contains_key(id) {
                return Err(format!("element `{id}` (from kind `{kind}`) has no category"));
            }
        }
        for (name, id) in &names {
            if !categories.contains_key(id) {
                return Err(format!("name `{name}` maps to unknown element `{id}`"));
            }
        }
        Ok(ElementMap {
            language,
            elements,
            categories,
            names,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        let text = fs::read_to_string(path)?;
        let file: ElementMapFile =
            serde_json::from_str(&text).map_err(|e| ExtractError::BadMapFile {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        ElementMap::from_parts(file.language, file.elements, file.categories, file.names)
            .map_err(|reason| ExtractError::BadMapFile {
                path: path.display().to_string(),
                reason,
            })
    }

    pub fn element_for_kind(&self, kind: &str) -> Option<&str> {
        self.elements.get(kind).map(String::as_str)
    }

    pub fn category_of(&self, element_id: &str) -> Option<Category> {
        self.categories.get(element_id).copied()
    }

    /// Resolve a human element name ("division operator") to an element id.
    pub fn element_for_name(&self, name: &str) -> Option<&str> {
        self.names.get(name).map(String::as_str)
    }

    pub fn element_ids(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }
}

/// All per-language element maps, loaded from a directory of `<lang>.json`.
#[derive(Debug, Clone, Default)]
pub struct ElementMapSet {
    maps: BTreeMap<Language, ElementMap>,
}

impl ElementMapSet {
    pub fn load_dir(dir: &Path) -> Result<Self, ExtractError> {
        let mut maps = BTreeMap::new();
        for lang in Language::ALL {
            let path = dir.join(format!("{}.json", lang.id()));
            if path.is_file() {
                maps.insert(lang, ElementMap::load(&path)?);
            }
        }
        Ok(ElementMapSet { maps })
    }

    pub fn insert(&mut self, map: ElementMap) {
        self.maps.insert(map.language, map);
    }

    pub fn get(&self, language: Language) -> Result<&ElementMap, ExtractError> {
        self.maps
            .get(&language)
            .ok_or(ExtractError::MissingMap(language))
    }

    /// Category lookup across all languages; maps must agree on shared ids.
    pub fn category_of(&self, element_id: &str) -> Option<Category> {
        self.maps
            .values()
            .find_map(|m| m.category_of(element_id))
    }
}

/// Extract the set of mapped syntax-element ids present in a tree.
///
/// Unmapped node kinds are ignored; the result is a set, not a multiset.
pub fn extract_elements(
    tree: &SyntaxTree,
    map: &ElementMap,
) -> Result<BTreeSet<String>, ExtractError> {
    if tree.has_error() {
        return Err(ExtractError::ParseErrorPresent);
    }
    let mut out = BTreeSet::new();
    tree.visit_all(&mut |node| {
        if let Some(id) = map.element_for_kind(node.kind()) {
            if !out.contains(id) {
                out.insert(id.to_string());
            }
        }
    });
    Ok(out)
}

/// Binary tests-by-elements matrix. Rows follow corpus case-id order,
/// columns are the sorted union of observed element ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    pub test_ids: Vec<String>,
    pub element_ids: Vec<String>,
    data: Vec<u8>,
}

impl IncidenceMatrix {
    pub fn n_tests(&self) -> usize {
        self.test_ids.len()
    }

    pub fn n_elements(&self) -> usize {
        self.element_ids.len()
    }

    pub fn get(&self, test: usize, element: usize) -> bool {
        self.data[test * self.element_ids.len() + element] != 0
    }

    pub fn row_sum(&self, test: usize) -> usize {
        let w = self.element_ids.len();
        self.data[test * w..(test + 1) * w]
            .iter()
            .map(|&b| b as usize)
            .sum()
    }

    pub fn column_sum(&self, element: usize) -> usize {
        (0..self.n_tests()).filter(|&i| self.get(i, element)).count()
    }

    /// Row-major f64 copy for the regression solver.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn from_rows(test_ids: Vec<String>, element_ids: Vec<String>, rows: &[BTreeSet<String>]) -> Self {
        let mut data = vec![0u8; test_ids.len() * element_ids.len()];
        for (i, row) in rows.iter().enumerate() {
            for (j, el) in element_ids.iter().enumerate() {
                if row.contains(el) {
                    data[i * element_ids.len() + j] = 1;
                }
            }
        }
        IncidenceMatrix {
            test_ids,
            element_ids,
            data,
        }
    }
}

/// Build the incidence matrix for a corpus: `A[i][j] = 1` iff the source of
/// test `i` contains element `j`.
pub fn build_incidence(
    corpus: &Corpus,
    maps: &ElementMapSet,
) -> Result<IncidenceMatrix, ExtractError> {
    let mut rows = Vec::with_capacity(corpus.len());
    let mut test_ids = Vec::with_capacity(corpus.len());
    let mut all_elements = BTreeSet::new();
    for case in corpus.iter() {
        let map = maps.get(case.language)?;
        let tree = parse(&case.source, case.language)?;
        if tree.has_error() {
            return Err(ExtractError::CaseParseError(case.id.clone()));
        }
        let elements = extract_elements(&tree, map)?;
        if elements.is_empty() {
            return Err(ExtractError::EmptyRow(case.id.clone()));
        }
        all_elements.extend(elements.iter().cloned());
        test_ids.push(case.id.clone());
        rows.push(elements);
    }
    let element_ids: Vec<String> = all_elements.into_iter().collect();
    Ok(IncidenceMatrix::from_rows(test_ids, element_ids, &rows))
}
