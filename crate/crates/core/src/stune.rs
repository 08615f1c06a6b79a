//! Logically equivalent C++ rewrites: six rules that desugar constructs the
//! target language lacks, an execution gate that verifies behavioral
//! equivalence, and the parallel-pair dataset builder.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::Node;

use crate::corpus::SutCase;
use crate::exec::{compile_and_run, generate_driver, ExecError, Limits, Phase, ToolchainSet};
use crate::extract::{self, SyntaxTree};
use crate::lang::{Category, Language};
use crate::translator::TranslatorClient;
use crate::value::{Signature, Value, ValueType};

/// The six rewrite rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    UpdateExpression,
    LongKeyword,
    CommaExpression,
    DoWhile,
    SwitchCase,
    ConditionalExpression,
}

impl RuleId {
    pub const ALL: [RuleId; 6] = [
        RuleId::UpdateExpression,
        RuleId::LongKeyword,
        RuleId::CommaExpression,
        RuleId::DoWhile,
        RuleId::SwitchCase,
        RuleId::ConditionalExpression,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RuleId::UpdateExpression => "update_expression",
            RuleId::LongKeyword => "long_keyword",
            RuleId::CommaExpression => "comma_expression",
            RuleId::DoWhile => "do_while",
            RuleId::SwitchCase => "switch_case",
            RuleId::ConditionalExpression => "conditional_expression",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum StuneError {
    #[error("source does not parse")]
    SourceParseError,
    #[error("rewrite by `{rule}` produced a parse error at site {site:?}")]
    RewriteProducesParseError { rule: RuleId, site: (usize, usize) },
    #[error("no probe inputs supplied")]
    NoProbeInputs,
    #[error("cannot infer a driver signature: {0}")]
    UnsupportedSignature(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// One applicable rewrite site: the byte range it anchors to, a context
/// label, and the edits that realize it.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSite {
    pub range: (usize, usize),
    pub kind: &'static str,
    edits: Vec<(usize, usize, String)>,
}

/// Find all currently applicable sites for `rule`, ordered by position.
/// Sites failing the rule's applicability conditions are excluded.
pub fn find_sites(tree: &SyntaxTree, rule: RuleId) -> Vec<MatchSite> {
    let src = tree.source();
    let mut sites = match rule {
        RuleId::UpdateExpression => update_sites(tree, src),
        RuleId::LongKeyword => long_sites(tree, src),
        RuleId::CommaExpression => comma_sites(tree, src),
        RuleId::DoWhile => do_while_sites(tree, src),
        RuleId::SwitchCase => switch_sites(tree, src),
        RuleId::ConditionalExpression => ternary_sites(tree, src),
    };
    sites.sort_by_key(|s| s.range);
    // non-overlapping: keep the earliest of any overlapping pair
    let mut out: Vec<MatchSite> = Vec::new();
    for site in sites {
        if out.last().is_none_or(|prev| prev.range.1 <= site.range.0) {
            out.push(site);
        }
    }
    out
}

/// Apply `rule` exhaustively: rewrite the first applicable site, re-parse,
/// repeat. Sources with no applicable site come back unchanged.
pub fn apply_rule(source: &str, rule: RuleId) -> Result<String, StuneError> {
    let mut current = source.to_string();
    loop {
        let tree = extract::parse(&current, Language::Cpp).map_err(|_| StuneError::SourceParseError)?;
        if tree.has_error() {
            return Err(StuneError::SourceParseError);
        }
        let sites = find_sites(&tree, rule);
        let Some(site) = sites.first() else {
            return Ok(current);
        };
        let next = apply_edits(&current, &site.edits);
        let check = extract::parse(&next, Language::Cpp).map_err(|_| StuneError::SourceParseError)?;
        if check.has_error() {
            return Err(StuneError::RewriteProducesParseError {
                rule,
                site: site.range,
            });
        }
        current = next;
    }
}

fn apply_edits(source: &str, edits: &[(usize, usize, String)]) -> String {
    let mut edits: Vec<_> = edits.to_vec();
    edits.sort_by_key(|e| std::cmp::Reverse(e.0));
    let mut out = source.to_string();
    for (start, end, text) in edits {
        out.replace_range(start..end, &text);
    }
    out
}

// --- shared tree helpers ---------------------------------------------------

fn collect_nodes<'a>(tree: &'a SyntaxTree, kind: &str) -> Vec<Node<'a>> {
    let mut out = Vec::new();
    tree.visit_all(&mut |n| {
        if n.kind() == kind {
            out.push(n);
        }
    });
    out
}

/// Indentation of the line the node starts on.
fn line_indent(src: &str, byte: usize) -> String {
    let line_start = src[..byte].rfind('\n').map_or(0, |p| p + 1);
    src[line_start..]
        .chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .collect()
}

/// Nearest ancestor that is a direct child of a compound statement (the
/// statement to hoist around).
fn enclosing_block_statement(node: Node<'_>) -> Option<Node<'_>> {
    let mut current = node;
    while let Some(parent) = current.parent() {
        if parent.kind() == "compound_statement" {
            return Some(current);
        }
        current = parent;
    }
    None
}

fn within(range: (usize, usize), node: Node<'_>) -> bool {
    let r = node.byte_range();
    r.start <= range.0 && range.1 <= r.end
}

/// True if `node` sits inside the condition of an enclosing loop.
fn inside_loop_condition(node: Node<'_>) -> bool {
    let range = (node.start_byte(), node.end_byte());
    let mut current = node;
    while let Some(parent) = current.parent() {
        if matches!(parent.kind(), "while_statement" | "do_statement" | "for_statement") {
            if let Some(cond) = parent.child_by_field_name("condition") {
                if within(range, cond) {
                    return true;
                }
            }
        }
        current = parent;
    }
    false
}

/// True if `node` sits inside the update clause of an enclosing for.
fn inside_for_update(node: Node<'_>) -> bool {
    let range = (node.start_byte(), node.end_byte());
    let mut current = node;
    while let Some(parent) = current.parent() {
        if parent.kind() == "for_statement" {
            if let Some(update) = parent.child_by_field_name("update") {
                if within(range, update) {
                    return true;
                }
            }
        }
        current = parent;
    }
    false
}

fn count_updates_in(node: Node<'_>) -> usize {
    fn walk(node: Node<'_>, count: &mut usize) {
        if node.kind() == "update_expression" {
            *count += 1;
        }
        let mut cursor = node.walk();
        for child in node.children(&mut cursor) {
            walk(child, count);
        }
    }
    let mut count = 0;
    walk(node, &mut count);
    count
}

/// Statements of a loop/case body, reindented one per line at `indent`.
fn restate(stmts: &[String], indent: &str) -> String {
    stmts
        .iter()
        .map(|s| format!("{indent}{s}"))
        .collect::<Vec<_>>()
        .join("\n")
}

// --- rule i: update expressions --------------------------------------------

fn update_sites(tree: &SyntaxTree, src: &str) -> Vec<MatchSite> {
    let mut out = Vec::new();
    for node in collect_nodes(tree, "update_expression") {
        let Some(arg) = node.child_by_field_name("argument") else { continue };
        if arg.kind() != "identifier" {
            continue;
        }
        if inside_loop_condition(node) {
            continue;
        }
        let name = tree.node_text(arg);
        let op_text = {
            let text = tree.node_text(node);
            if text.contains("++") { "+=" } else { "-=" }
        };
        let prefix = node.start_byte() < arg.start_byte() && {
            // operator token precedes the identifier
            src[node.start_byte()..arg.start_byte()].contains("++")
                || src[node.start_byte()..arg.start_byte()].contains("--")
        };
        let range = (node.start_byte(), node.end_byte());
        let statement_context = node
            .parent()
            .is_some_and(|p| p.kind() == "expression_statement")
            || inside_for_update(node);
        if statement_context {
            out.push(MatchSite {
                range,
                kind: "statement_context",
                edits: vec![(range.0, range.1, format!("{name} {op_text} 1"))],
            });
            continue;
        }
        // value-used form: hoist around the enclosing statement
        let Some(stmt) = enclosing_block_statement(node) else { continue };
        if count_updates_in(stmt) > 1 {
            continue;
        }
        let indent = line_indent(src, stmt.start_byte());
        let mut edits = vec![(range.0, range.1, name.to_string())];
        if prefix {
            edits.push((
                stmt.start_byte(),
                stmt.start_byte(),
                format!("{name} {op_text} 1;\n{indent}"),
            ));
            out.push(MatchSite {
                range,
                kind: "value_used_prefix",
                edits,
            });
        } else {
            edits.push((
                stmt.end_byte(),
                stmt.end_byte(),
                format!("\n{indent}{name} {op_text} 1;"),
            ));
            out.push(MatchSite {
                range,
                kind: "value_used_postfix",
                edits,
            });
        }
    }
    out
}

// --- rule ii: long keyword --------------------------------------------------

fn long_sites(tree: &SyntaxTree, _src: &str) -> Vec<MatchSite> {
    let mut out = Vec::new();
    for kind in ["sized_type_specifier", "primitive_type"] {
        for node in collect_nodes(tree, kind) {
            if tree.node_text(node) != "long" {
                continue;
            }
            let range = (node.start_byte(), node.end_byte());
            out.push(MatchSite {
                range,
                kind: "type_keyword",
                edits: vec![(range.0, range.1, "int".to_string())],
            });
        }
    }
    out
}

// --- rule iii: comma expression in for-init ---------------------------------

fn flatten_comma<'a>(node: Node<'a>, out: &mut Vec<Node<'a>>) {
    if node.kind() == "comma_expression" {
        if let Some(left) = node.child_by_field_name("left") {
            flatten_comma(left, out);
        }
        if let Some(right) = node.child_by_field_name("right") {
            flatten_comma(right, out);
        }
    } else {
        out.push(node);
    }
}

fn comma_sites(tree: &SyntaxTree, src: &str) -> Vec<MatchSite> {
    let mut out = Vec::new();
    for for_node in collect_nodes(tree, "for_statement") {
        let Some(init) = for_node.child_by_field_name("initializer") else { continue };
        if init.kind() != "comma_expression" {
            continue;
        }
        let mut operands = Vec::new();
        flatten_comma(init, &mut operands);
        if !operands.iter().all(|n| n.kind() == "assignment_expression") {
            continue;
        }
        let indent = line_indent(src, for_node.start_byte());
        let hoisted = operands
            .iter()
            .map(|n| format!("{};", tree.node_text(*n)))
            .collect::<Vec<_>>();
        let range = (init.start_byte(), init.end_byte());
        let edits = vec![
            (range.0, range.1, String::new()),
            (
                for_node.start_byte(),
                for_node.start_byte(),
                format!("{}\n{indent}", restate(&hoisted, "").replace(";\n", &format!(";\n{indent}"))),
            ),
        ];
        out.push(MatchSite {
            range,
            kind: "for_init_comma",
            edits,
        });
    }
    out
}

// --- rule iv: do-while ------------------------------------------------------

/// Collect breaks/continues that would bind to this loop (not to a nested
/// loop, and for break not to a nested switch).
fn has_own_break_or_continue(node: Node<'_>, top: bool) -> bool {
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        match child.kind() {
            "break_statement" | "continue_statement" => return true,
            "for_statement" | "while_statement" | "do_statement" | "for_range_loop"
            | "switch_statement" => continue,
            _ => {
                if has_own_break_or_continue(child, false) {
                    return true;
                }
            }
        }
    }
    let _ = top;
    false
}

fn body_statements(tree: &SyntaxTree, body: Node<'_>) -> Vec<String> {
    if body.kind() != "compound_statement" {
        return vec![tree.node_text(body).trim().to_string()];
    }
    let mut out = Vec::new();
    let mut cursor = body.walk();
    for child in body.children(&mut cursor) {
        if child.is_named() && child.kind() != "comment" {
            out.push(tree.node_text(child).to_string());
        }
    }
    out
}

fn do_while_sites(tree: &SyntaxTree, src: &str) -> Vec<MatchSite> {
    let mut out = Vec::new();
    for node in collect_nodes(tree, "do_statement") {
        let Some(body) = node.child_by_field_name("body") else { continue };
        let Some(cond) = node.child_by_field_name("condition") else { continue };
        if has_own_break_or_continue(body, true) {
            continue;
        }
        let indent = line_indent(src, node.start_byte());
        let unrolled = body_statements(tree, body);
        if unrolled.is_empty() {
            continue;
        }
        let body_text = if body.kind() == "compound_statement" {
            tree.node_text(body).to_string()
        } else {
            format!("{{ {} }}", tree.node_text(body).trim())
        };
        let cond_text = tree.node_text(cond);
        let mut replacement = String::new();
        for (i, stmt) in unrolled.iter().enumerate() {
            if i > 0 {
                replacement.push_str(&format!("\n{indent}"));
            }
            replacement.push_str(stmt);
        }
        replacement.push_str(&format!("\n{indent}while {cond_text} {body_text}"));
        let range = (node.start_byte(), node.end_byte());
        out.push(MatchSite {
            range,
            kind: "do_while",
            edits: vec![(range.0, range.1, replacement)],
        });
    }
    out
}

// --- rule v: switch-case ----------------------------------------------------

struct CaseArm {
    value: Option<String>,
    statements: Vec<String>,
}

fn switch_sites(tree: &SyntaxTree, src: &str) -> Vec<MatchSite> {
    let mut out = Vec::new();
    'switches: for node in collect_nodes(tree, "switch_statement") {
        let Some(cond) = node.child_by_field_name("condition") else { continue };
        let subject = match cond.child_by_field_name("value") {
            Some(v) if v.kind() == "identifier" => tree.node_text(v).to_string(),
            _ => continue,
        };
        let Some(body) = node.child_by_field_name("body") else { continue };
        let mut arms: Vec<CaseArm> = Vec::new();
        let mut cursor = body.walk();
        for child in body.children(&mut cursor) {
            if !child.is_named() {
                continue;
            }
            if child.kind() != "case_statement" {
                continue 'switches; // unexpected construct: leave it alone
            }
            let value = child
                .child_by_field_name("value")
                .map(|v| tree.node_text(v).to_string());
            let mut statements = Vec::new();
            let mut had_break = false;
            let mut inner = child.walk();
            for stmt in child.children(&mut inner) {
                if !stmt.is_named() || Some(stmt) == child.child_by_field_name("value") {
                    continue;
                }
                if stmt.kind() == "break_statement" {
                    had_break = true;
                    continue;
                }
                if had_break {
                    continue 'switches; // code after break: bail out
                }
                statements.push(tree.node_text(stmt).to_string());
            }
            if statements.is_empty() {
                continue 'switches; // empty case: fallthrough semantics
            }
            let is_last = {
                let mut probe = child.next_named_sibling();
                while let Some(p) = probe {
                    if p.kind() == "case_statement" {
                        break;
                    }
                    probe = p.next_named_sibling();
                }
                child.next_named_sibling().is_none()
            };
            if !had_break && value.is_some() && !is_last {
                continue 'switches; // fallthrough between valued cases
            }
            arms.push(CaseArm { value, statements });
        }
        if arms.is_empty() {
            continue;
        }
        // default (if any) must be last
        if arms[..arms.len() - 1].iter().any(|a| a.value.is_none()) {
            continue;
        }

        let indent = line_indent(src, node.start_byte());
        let inner_indent = format!("{indent}    ");
        let mut replacement = String::new();
        let mut first = true;
        for arm in &arms {
            let head = match (&arm.value, first) {
                (Some(v), true) => format!("if ({subject} == {v}) {{"),
                (Some(v), false) => format!("\n{indent}else if ({subject} == {v}) {{"),
                (None, _) => format!("\n{indent}else {{"),
            };
            replacement.push_str(&head);
            replacement.push('\n');
            replacement.push_str(&restate(&arm.statements, &inner_indent));
            replacement.push_str(&format!("\n{indent}}}"));
            first = false;
        }
        let range = (node.start_byte(), node.end_byte());
        out.push(MatchSite {
            range,
            kind: "switch",
            edits: vec![(range.0, range.1, replacement)],
        });
    }
    out
}

// --- rule vi: ternary assignment ---------------------------------------------

fn ternary_sites(tree: &SyntaxTree, src: &str) -> Vec<MatchSite> {
    let mut out = Vec::new();
    for stmt in collect_nodes(tree, "expression_statement") {
        let Some(assign) = stmt.named_child(0) else { continue };
        if assign.kind() != "assignment_expression" || stmt.named_child_count() != 1 {
            continue;
        }
        let plain_assign = assign
            .child_by_field_name("operator")
            .is_some_and(|op| tree.node_text(op) == "=");
        if !plain_assign {
            continue;
        }
        let Some(rhs) = assign.child_by_field_name("right") else { continue };
        if rhs.kind() != "conditional_expression" {
            continue;
        }
        let Some(lhs) = assign.child_by_field_name("left") else { continue };
        let (Some(cond), Some(cons), Some(alt)) = (
            rhs.child_by_field_name("condition"),
            rhs.child_by_field_name("consequence"),
            rhs.child_by_field_name("alternative"),
        ) else {
            continue;
        };
        let lhs_text = tree.node_text(lhs);
        let cond_text = if cond.kind() == "parenthesized_expression" {
            tree.node_text(cond).to_string()
        } else {
            format!("({})", tree.node_text(cond))
        };
        let indent = line_indent(src, stmt.start_byte());
        let inner = format!("{indent}    ");
        let replacement = format!(
            "if {cond_text} {{\n{inner}{lhs_text} = {};\n{indent}}} else {{\n{inner}{lhs_text} = {};\n{indent}}}",
            tree.node_text(cons),
            tree.node_text(alt),
        );
        let range = (stmt.start_byte(), stmt.end_byte());
        out.push(MatchSite {
            range,
            kind: "ternary_assignment",
            edits: vec![(range.0, range.1, replacement)],
        });
    }
    out
}

// --- signature inference and probes -----------------------------------------

/// Map a C++ type to the wire type, when representable.
fn cpp_value_type(tree: &SyntaxTree, node: Node<'_>) -> Option<ValueType> {
    let text = tree.node_text(node).trim().to_string();
    match text.as_str() {
        "int" | "short" | "unsigned" | "unsigned int" => Some(ValueType::Int),
        "long" | "long long" | "long int" | "int64_t" | "size_t" => Some(ValueType::Long),
        "double" | "float" => Some(ValueType::Double),
        "bool" => Some(ValueType::Bool),
        "char" => Some(ValueType::Char),
        "std::string" | "string" => Some(ValueType::String),
        _ => {
            let inner = text
                .strip_prefix("std::vector<")
                .or_else(|| text.strip_prefix("vector<"))?
                .strip_suffix('>')?;
            let inner_ty = parse_cpp_type_text(inner.trim())?;
            Some(ValueType::List(Box::new(inner_ty)))
        }
    }
}

fn parse_cpp_type_text(text: &str) -> Option<ValueType> {
    match text {
        "int" | "short" | "unsigned" | "unsigned int" => Some(ValueType::Int),
        "long" | "long long" | "long int" | "int64_t" | "size_t" => Some(ValueType::Long),
        "double" | "float" => Some(ValueType::Double),
        "bool" => Some(ValueType::Bool),
        "char" => Some(ValueType::Char),
        "std::string" | "string" => Some(ValueType::String),
        _ => {
            let inner = text
                .strip_prefix("std::vector<")
                .or_else(|| text.strip_prefix("vector<"))?
                .strip_suffix('>')?;
            Some(ValueType::List(Box::new(parse_cpp_type_text(inner.trim())?)))
        }
    }
}

/// Infer (entry, signature) from the first function definition.
pub fn infer_cpp_signature(source: &str) -> Result<(String, Signature), StuneError> {
    let tree = extract::parse(source, Language::Cpp).map_err(|_| StuneError::SourceParseError)?;
    if tree.has_error() {
        return Err(StuneError::SourceParseError);
    }
    let funcs = collect_nodes(&tree, "function_definition");
    let func = funcs
        .first()
        .ok_or_else(|| StuneError::UnsupportedSignature("no function definition".into()))?;
    let ret_node = func
        .child_by_field_name("type")
        .ok_or_else(|| StuneError::UnsupportedSignature("no return type".into()))?;
    let returns = cpp_value_type(&tree, ret_node)
        .ok_or_else(|| StuneError::UnsupportedSignature(format!(
            "return type `{}`",
            tree.node_text(ret_node)
        )))?;

    let mut decl = func
        .child_by_field_name("declarator")
        .ok_or_else(|| StuneError::UnsupportedSignature("no declarator".into()))?;
    while decl.kind() != "function_declarator" {
        decl = decl
            .child_by_field_name("declarator")
            .ok_or_else(|| StuneError::UnsupportedSignature("no function declarator".into()))?;
    }
    let entry = decl
        .child_by_field_name("declarator")
        .map(|n| tree.node_text(n).to_string())
        .ok_or_else(|| StuneError::UnsupportedSignature("unnamed function".into()))?;

    let mut params = Vec::new();
    if let Some(list) = decl.child_by_field_name("parameters") {
        let mut cursor = list.walk();
        for param in list.children(&mut cursor) {
            if param.kind() != "parameter_declaration" {
                continue;
            }
            let ty_node = param
                .child_by_field_name("type")
                .ok_or_else(|| StuneError::UnsupportedSignature("untyped parameter".into()))?;
            // reject pointer/reference declarators
            if let Some(d) = param.child_by_field_name("declarator") {
                let dtext = tree.node_text(d);
                if dtext.contains('*') || dtext.contains('&') {
                    return Err(StuneError::UnsupportedSignature(format!(
                        "parameter declarator `{dtext}`"
                    )));
                }
            }
            let base = cpp_value_type(&tree, ty_node).ok_or_else(|| {
                StuneError::UnsupportedSignature(format!("parameter type `{}`", tree.node_text(ty_node)))
            })?;
            params.push(base);
        }
    }
    Ok((entry, Signature::new(params, returns)))
}

/// Deterministic per-signature probe tuples (at least `count`).
pub fn generate_probe_inputs(sig: &Signature, count: usize, seed: u64) -> Vec<Vec<Value>> {
    let ints: [i64; 5] = [-3, 0, 1, 2, 7];
    let longs: [i64; 5] = [-3, 0, 1, 7, 3_000_000_000];
    let doubles: [f64; 5] = [0.0, -1.5, 2.25, 1e6, -0.5];
    let chars: [char; 5] = ['a', 'z', '0', '#', 'm'];
    let strings: [&str; 5] = ["", "a", "ab", "hello", "xyz"];

    fn value_at(ty: &ValueType, idx: usize, tables: &Tables) -> Value {
        match ty {
            ValueType::Int => Value::Int(tables.ints[idx % 5]),
            ValueType::Long => Value::Long(tables.longs[idx % 5]),
            ValueType::Double => Value::Double(tables.doubles[idx % 5]),
            ValueType::Bool => Value::Bool(idx.is_multiple_of(2)),
            ValueType::Char => Value::Char(tables.chars[idx % 5]),
            ValueType::String => Value::Str(tables.strings[idx % 5].to_string()),
            ValueType::List(inner) => {
                let len = idx % 4;
                Value::List(
                    (**inner).clone(),
                    (0..len).map(|k| value_at(inner, idx + k + 1, tables)).collect(),
                )
            }
        }
    }
    struct Tables {
        ints: [i64; 5],
        longs: [i64; 5],
        doubles: [f64; 5],
        chars: [char; 5],
        strings: [&'static str; 5],
    }
    let tables = Tables {
        ints,
        longs,
        doubles,
        chars,
        strings,
    };
    let offset = (seed % 5) as usize;
    (0..count.max(5))
        .map(|k| {
            sig.params
                .iter()
                .enumerate()
                .map(|(j, p)| value_at(&p.ty, offset + k + j, &tables))
                .collect()
        })
        .collect()
}

/// Execute both sources on every probe input and compare judged outputs.
///
/// True iff both compile, both exit cleanly with one decodable output per
/// probe, and every pair of outputs matches under the judge equality policy.
pub fn verify_equivalence(
    original: &str,
    modified: &str,
    language: Language,
    probe_inputs: &[Vec<Value>],
    limits: &Limits,
    toolchains: &ToolchainSet,
) -> Result<bool, StuneError> {
    if probe_inputs.is_empty() {
        return Err(StuneError::NoProbeInputs);
    }
    if original == modified {
        return Ok(true);
    }
    let (entry, signature) = infer_cpp_signature(original)?;
    let shim_case = SutCase {
        id: "stune/equivalence/probe".into(),
        language,
        element_name: "equivalence probe".into(),
        element_category: Category::Operator,
        entry,
        signature,
        source: original.to_string(),
        inputs: probe_inputs.to_vec(),
        expected: Vec::new(),
    };

    let mut outputs = Vec::new();
    for text in [original, modified] {
        let driver = generate_driver(&shim_case, text, language)?;
        let workdir = tempfile::tempdir().map_err(|e| ExecError::SandboxFailure(e.to_string()))?;
        let raw = compile_and_run(
            &driver,
            language,
            probe_inputs,
            limits,
            toolchains,
            workdir.path(),
        )?;
        if raw.phase == Phase::Compile || raw.timed_out || raw.exit_code != Some(0) {
            return Ok(false);
        }
        if raw.stdout_lines.len() < probe_inputs.len() {
            return Ok(false);
        }
        let decoded: Option<Vec<Value>> = raw.stdout_lines[..probe_inputs.len()]
            .iter()
            .map(|line| {
                serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|j| Value::from_json(&j, &shim_case.signature.returns.ty).ok())
            })
            .collect();
        match decoded {
            Some(values) => outputs.push(values),
            None => return Ok(false),
        }
    }
    Ok(outputs[0]
        .iter()
        .zip(&outputs[1])
        .all(|(a, b)| a.matches(b)))
}

/// One emitted parallel sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StuningPair {
    pub src: String,
    pub src_modified: String,
    pub tgt: String,
    pub src_lang: Language,
    pub tgt_lang: Language,
    pub rules: Vec<String>,
}

/// Why a monolingual source produced no pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    ParseError,
    NoSites,
    UnsupportedSignature,
    EquivalenceFailed,
    TranslatorFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BuildStats {
    pub pairs: usize,
    pub rule_counts: BTreeMap<String, usize>,
    pub drops: Vec<(String, DropReason)>,
}

pub struct BuildConfig<'a> {
    pub rules: &'a [RuleId],
    pub target: Language,
    pub limits: Limits,
    pub toolchains: &'a ToolchainSet,
    pub probe_count: usize,
    pub seed: u64,
    pub parallelism: usize,
}

/// Appendix-style dataset generation: rewrite, gate by execution
/// equivalence, translate the modified form, pair with the original.
pub fn build_stuning_pairs(
    mono_sources: &[(String, String)],
    client: &TranslatorClient,
    config: &BuildConfig<'_>,
) -> (Vec<StuningPair>, BuildStats) {
    enum Outcome {
        Pair(Box<StuningPair>, Vec<String>),
        Drop(String, DropReason),
    }

    let process = |name: &str, source: &str| -> Outcome {
        let Ok(tree) = extract::parse(source, Language::Cpp) else {
            return Outcome::Drop(name.into(), DropReason::ParseError);
        };
        if tree.has_error() {
            return Outcome::Drop(name.into(), DropReason::ParseError);
        }
        let mut modified = source.to_string();
        let mut applied = Vec::new();
        for &rule in config.rules {
            match apply_rule(&modified, rule) {
                Ok(next) => {
                    if next != modified {
                        applied.push(rule.id().to_string());
                        modified = next;
                    }
                }
                Err(_) => return Outcome::Drop(name.into(), DropReason::ParseError),
            }
        }
        if applied.is_empty() {
            return Outcome::Drop(name.into(), DropReason::NoSites);
        }
        let Ok((_, signature)) = infer_cpp_signature(source) else {
            return Outcome::Drop(name.into(), DropReason::UnsupportedSignature);
        };
        let probes = generate_probe_inputs(&signature, config.probe_count.max(5), config.seed);
        match verify_equivalence(
            source,
            &modified,
            Language::Cpp,
            &probes,
            &config.limits,
            config.toolchains,
        ) {
            Ok(true) => {}
            Ok(false) => return Outcome::Drop(name.into(), DropReason::EquivalenceFailed),
            Err(_) => return Outcome::Drop(name.into(), DropReason::UnsupportedSignature),
        }
        match client.translate(&modified, Language::Cpp, config.target) {
            Ok(tgt) => Outcome::Pair(
                Box::new(StuningPair {
                    src: source.to_string(),
                    src_modified: modified,
                    tgt,
                    src_lang: Language::Cpp,
                    tgt_lang: config.target,
                    rules: applied.clone(),
                }),
                applied,
            ),
            Err(_) => Outcome::Drop(name.into(), DropReason::TranslatorFailed),
        }
    };

    let next = AtomicUsize::new(0);
    let slots: Mutex<BTreeMap<usize, Outcome>> = Mutex::new(BTreeMap::new());
    let workers = config.parallelism.max(1).min(mono_sources.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= mono_sources.len() {
                    break;
                }
                let (name, source) = &mono_sources[i];
                let outcome = process(name, source);
                slots.lock().expect("slot lock").insert(i, outcome);
            });
        }
    });

    let mut pairs = Vec::new();
    let mut stats = BuildStats::default();
    for (_, outcome) in slots.into_inner().expect("slot lock") {
        match outcome {
            Outcome::Pair(pair, applied) => {
                for rule in &applied {
                    *stats.rule_counts.entry(rule.clone()).or_insert(0) += 1;
                }
                pairs.push(*pair);
                stats.pairs += 1;
            }
            Outcome::Drop(name, reason) => stats.drops.push((name, reason)),
        }
    }
    (pairs, stats)
}
