//! Driver generation: wrap a translated function in a complete program that
//! reads one JSON argument array per stdin line, invokes the entry function,
//! and prints one JSON-encoded result per stdout line.
//!
//! Drivers are self-contained (no third-party libraries) so they build under
//! a bare toolchain. Readers and writers are specialized from the case
//! signature instead of shipping a general JSON parser.

use std::collections::BTreeSet;

use crate::corpus::SutCase;
use crate::exec::ExecError;
use crate::extract;
use crate::lang::Language;
use crate::value::{Signature, ValueType};

/// File name the runner writes the driver to, per target language.
pub(crate) fn driver_file_name(target: Language) -> &'static str {
    match target {
        Language::Cpp => "driver.cpp",
        Language::Java => "Main.java",
        Language::Python => "driver.py",
        Language::Csharp => "Main.cs",
    }
}

/// Compiled artifact name (`{out}` placeholder), per target language.
pub(crate) fn artifact_file_name(target: Language) -> &'static str {
    match target {
        Language::Cpp => "driver_bin",
        Language::Java => "Main.class",
        Language::Python => "driver.py",
        Language::Csharp => "driver.exe",
    }
}

/// Generate a complete driver program for `translated_source`.
pub fn generate_driver(
    case: &SutCase,
    translated_source: &str,
    target: Language,
) -> Result<String, ExecError> {
    match target {
        Language::Python => Ok(python_driver(case, translated_source)),
        Language::Cpp => Ok(cpp_driver(case, translated_source)),
        Language::Java => Ok(java_driver(case, translated_source)),
        Language::Csharp => Ok(csharp_driver(case, translated_source)),
    }
}

/// Mangled suffix for type-specialized reader/writer names.
fn mangle(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "int".into(),
        ValueType::Long => "long".into(),
        ValueType::Double => "double".into(),
        ValueType::Bool => "bool".into(),
        ValueType::Char => "char".into(),
        ValueType::String => "str".into(),
        ValueType::List(inner) => format!("list_{}", mangle(inner)),
    }
}

/// All list types needed by a signature, innermost first.
fn list_types(sig: &Signature) -> Vec<ValueType> {
    fn add(ty: &ValueType, out: &mut Vec<ValueType>, seen: &mut BTreeSet<String>) {
        if let ValueType::List(inner) = ty {
            add(inner, out, seen);
            if seen.insert(mangle(ty)) {
                out.push(ty.clone());
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for p in &sig.params {
        add(&p.ty, &mut out, &mut seen);
    }
    add(&sig.returns.ty, &mut out, &mut seen);
    out
}

// ---------------------------------------------------------------------------
// Python
// ---------------------------------------------------------------------------

fn python_driver(case: &SutCase, translated_source: &str) -> String {
    let entry = &case.entry;
    format!(
        "{translated_source}\n\n\
         import json as _sut_json\n\
         import sys as _sut_sys\n\n\
         def _sut_main():\n\
         \x20   for _sut_line in _sut_sys.stdin.read().splitlines():\n\
         \x20       _sut_line = _sut_line.strip()\n\
         \x20       if not _sut_line:\n\
         \x20           continue\n\
         \x20       _sut_args = _sut_json.loads(_sut_line)\n\
         \x20       _sut_result = {entry}(*_sut_args)\n\
         \x20       _sut_sys.stdout.write(_sut_json.dumps(_sut_result, ensure_ascii=False))\n\
         \x20       _sut_sys.stdout.write(\"\\n\")\n\
         \x20       _sut_sys.stdout.flush()\n\n\
         _sut_main()\n"
    )
}

// ---------------------------------------------------------------------------
// C++
// ---------------------------------------------------------------------------

fn cpp_type(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "int".into(),
        ValueType::Long => "long long".into(),
        ValueType::Double => "double".into(),
        ValueType::Bool => "bool".into(),
        ValueType::Char => "char".into(),
        ValueType::String => "std::string".into(),
        ValueType::List(inner) => format!("std::vector<{}>", cpp_type(inner)),
    }
}

/// Expression reading one value of `ty` from `(line, pos)`. `qual` prefixes
/// the reader with its namespace for use outside `sut_driver`.
fn cpp_read_expr(ty: &ValueType, qual: &str) -> String {
    match ty {
        ValueType::Int => format!("(int){qual}sut_rd_int(line, pos)"),
        ValueType::Long => format!("{qual}sut_rd_int(line, pos)"),
        ValueType::Double => format!("{qual}sut_rd_double(line, pos)"),
        ValueType::Bool => format!("{qual}sut_rd_bool(line, pos)"),
        ValueType::Char => format!("{qual}sut_rd_char(line, pos)"),
        ValueType::String => format!("{qual}sut_rd_str(line, pos)"),
        ValueType::List(_) => format!("{qual}sut_rd_{}(line, pos)", mangle(ty)),
    }
}

fn cpp_write_call(ty: &ValueType, value: &str, out: &str) -> String {
    match ty {
        ValueType::Int | ValueType::Long => format!("sut_wr_int({value}, {out});"),
        ValueType::Double => format!("sut_wr_double({value}, {out});"),
        ValueType::Bool => format!("sut_wr_bool({value}, {out});"),
        ValueType::Char => format!("sut_wr_char({value}, {out});"),
        ValueType::String => format!("sut_wr_str({value}, {out});"),
        ValueType::List(_) => format!("sut_wr_{}({value}, {out});", mangle(ty)),
    }
}

const CPP_HELPERS: &str = r#"
inline void sut_skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) i++;
}

inline void sut_expect(const std::string& s, size_t& i, char c) {
    sut_skip_ws(s, i);
    if (i >= s.size() || s[i] != c) {
        std::fprintf(stderr, "protocol error: expected '%c' at byte %zu\n", c, i);
        std::exit(3);
    }
    i++;
}

inline long long sut_rd_int(const std::string& s, size_t& i) {
    sut_skip_ws(s, i);
    size_t start = i;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) i++;
    while (i < s.size() && std::isdigit((unsigned char)s[i])) i++;
    return std::strtoll(s.substr(start, i - start).c_str(), NULL, 10);
}

inline double sut_rd_double(const std::string& s, size_t& i) {
    sut_skip_ws(s, i);
    size_t start = i;
    while (i < s.size() && (std::isdigit((unsigned char)s[i]) || s[i] == '-' || s[i] == '+' ||
                            s[i] == '.' || s[i] == 'e' || s[i] == 'E')) i++;
    return std::strtod(s.substr(start, i - start).c_str(), NULL);
}

inline bool sut_rd_bool(const std::string& s, size_t& i) {
    sut_skip_ws(s, i);
    if (s.compare(i, 4, "true") == 0) { i += 4; return true; }
    if (s.compare(i, 5, "false") == 0) { i += 5; return false; }
    std::fprintf(stderr, "protocol error: expected bool\n");
    std::exit(3);
}

inline std::string sut_rd_str(const std::string& s, size_t& i) {
    sut_skip_ws(s, i);
    if (i >= s.size() || s[i] != '"') {
        std::fprintf(stderr, "protocol error: expected string\n");
        std::exit(3);
    }
    i++;
    std::string out;
    while (i < s.size() && s[i] != '"') {
        char c = s[i++];
        if (c == '\\' && i < s.size()) {
            char e = s[i++];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case 'b': out.push_back('\b'); break;
                case 'f': out.push_back('\f'); break;
                case 'u': {
                    unsigned code = (unsigned)std::strtoul(s.substr(i, 4).c_str(), NULL, 16);
                    i += 4;
                    if (code < 0x80) {
                        out.push_back((char)code);
                    } else if (code < 0x800) {
                        out.push_back((char)(0xC0 | (code >> 6)));
                        out.push_back((char)(0x80 | (code & 0x3F)));
                    } else {
                        out.push_back((char)(0xE0 | (code >> 12)));
                        out.push_back((char)(0x80 | ((code >> 6) & 0x3F)));
                        out.push_back((char)(0x80 | (code & 0x3F)));
                    }
                    break;
                }
                default: out.push_back(e); break;
            }
        } else {
            out.push_back(c);
        }
    }
    i++;
    return out;
}

inline char sut_rd_char(const std::string& s, size_t& i) {
    std::string t = sut_rd_str(s, i);
    return t.empty() ? '\0' : t[0];
}

inline void sut_wr_int(long long v, std::string& out) { out += std::to_string(v); }

inline void sut_wr_double(double v, std::string& out) {
    if (std::isnan(v) || std::isinf(v)) { out += "null"; return; }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

inline void sut_wr_bool(bool v, std::string& out) { out += v ? "true" : "false"; }

inline void sut_wr_str(const std::string& v, std::string& out) {
    out.push_back('"');
    for (size_t k = 0; k < v.size(); k++) {
        char c = v[k];
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if ((unsigned char)c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", (unsigned char)c);
                    out += buf;
                } else {
                    out.push_back(c);
                }
        }
    }
    out.push_back('"');
}

inline void sut_wr_char(char v, std::string& out) { sut_wr_str(std::string(1, v), out); }
"#;

fn cpp_driver(case: &SutCase, translated_source: &str) -> String {
    let sig = &case.signature;
    let mut helpers = String::from(CPP_HELPERS);
    for ty in list_types(sig) {
        let ValueType::List(inner) = &ty else { unreachable!() };
        let m = mangle(&ty);
        let elem_ty = cpp_type(inner);
        let elem_read = cpp_read_expr(inner, "");
        helpers.push_str(&format!(
            "\ninline std::vector<{elem_ty}> sut_rd_{m}(const std::string& line, size_t& pos) {{\n\
             \x20   const std::string& s = line; size_t& i = pos;\n\
             \x20   std::vector<{elem_ty}> out;\n\
             \x20   sut_expect(s, i, '[');\n\
             \x20   sut_skip_ws(s, i);\n\
             \x20   if (i < s.size() && s[i] == ']') {{ i++; return out; }}\n\
             \x20   while (true) {{\n\
             \x20       out.push_back({elem_read});\n\
             \x20       sut_skip_ws(s, i);\n\
             \x20       if (i < s.size() && s[i] == ',') {{ i++; continue; }}\n\
             \x20       sut_expect(s, i, ']');\n\
             \x20       break;\n\
             \x20   }}\n\
             \x20   return out;\n\
             }}\n"
        ));
        let wr_elem = cpp_write_call(inner, "v[k]", "out");
        helpers.push_str(&format!(
            "\ninline void sut_wr_{m}(const std::vector<{elem_ty}>& v, std::string& out) {{\n\
             \x20   out.push_back('[');\n\
             \x20   for (size_t k = 0; k < v.size(); k++) {{\n\
             \x20       if (k) out.push_back(',');\n\
             \x20       {wr_elem}\n\
             \x20   }}\n\
             \x20   out.push_back(']');\n\
             }}\n"
        ));
    }

    let mut arg_parse = String::new();
    let mut arg_names = Vec::new();
    for (k, p) in sig.params.iter().enumerate() {
        if k > 0 {
            arg_parse.push_str("        sut_driver::sut_expect(line, pos, ',');\n");
        }
        let name = format!("sut_a{k}");
        arg_parse.push_str(&format!(
            "        {} {name} = {};\n",
            cpp_type(&p.ty),
            cpp_read_expr(&p.ty, "sut_driver::")
        ));
        arg_names.push(name);
    }
    let ret_ty = cpp_type(&sig.returns.ty);
    let wr_ret = cpp_write_call(&sig.returns.ty, "sut_result", "sut_out")
        .replace("sut_wr_", "sut_driver::sut_wr_");
    let entry = &case.entry;
    let args = arg_names.join(", ");

    format!(
        "#include <cctype>\n#include <cmath>\n#include <cstdint>\n#include <cstdio>\n\
         #include <cstdlib>\n#include <iostream>\n#include <sstream>\n#include <string>\n\
         #include <vector>\nusing namespace std;\n\n\
         {translated_source}\n\n\
         namespace sut_driver {{\n{helpers}\n}} // namespace sut_driver\n\n\
         int main() {{\n\
         \x20   std::string line;\n\
         \x20   while (std::getline(std::cin, line)) {{\n\
         \x20       bool blank = true;\n\
         \x20       for (size_t k = 0; k < line.size(); k++)\n\
         \x20           if (!std::isspace((unsigned char)line[k])) {{ blank = false; break; }}\n\
         \x20       if (blank) continue;\n\
         \x20       size_t pos = 0;\n\
         \x20       sut_driver::sut_expect(line, pos, '[');\n\
         {arg_parse}\
         \x20       sut_driver::sut_expect(line, pos, ']');\n\
         \x20       {ret_ty} sut_result = {entry}({args});\n\
         \x20       std::string sut_out;\n\
         \x20       {wr_ret}\n\
         \x20       std::cout << sut_out << std::endl;\n\
         \x20   }}\n\
         \x20   return 0;\n\
         }}\n"
    )
}

// ---------------------------------------------------------------------------
// Java
// ---------------------------------------------------------------------------

fn java_type(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "int".into(),
        ValueType::Long => "long".into(),
        ValueType::Double => "double".into(),
        ValueType::Bool => "boolean".into(),
        ValueType::Char => "char".into(),
        ValueType::String => "String".into(),
        ValueType::List(inner) => format!("{}[]", java_type(inner)),
    }
}

/// Boxed wrapper type used by list readers.
fn java_boxed(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "Integer".into(),
        ValueType::Long => "Long".into(),
        ValueType::Double => "Double".into(),
        ValueType::Bool => "Boolean".into(),
        ValueType::Char => "Character".into(),
        ValueType::String => "String".into(),
        ValueType::List(inner) => format!("{}[]", java_type(inner)),
    }
}

fn java_read_expr(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "(int) sutRdLong()".into(),
        ValueType::Long => "sutRdLong()".into(),
        ValueType::Double => "sutRdDouble()".into(),
        ValueType::Bool => "sutRdBool()".into(),
        ValueType::Char => "sutRdChar()".into(),
        ValueType::String => "sutRdStr()".into(),
        ValueType::List(_) => format!("sutRd_{}()", mangle(ty)),
    }
}

fn java_write_call(ty: &ValueType, value: &str) -> String {
    match ty {
        ValueType::Int | ValueType::Long => format!("sutWrLong({value}, sutSb);"),
        ValueType::Double => format!("sutWrDouble({value}, sutSb);"),
        ValueType::Bool => format!("sutSb.append({value} ? \"true\" : \"false\");"),
        ValueType::Char => format!("sutWrStr(String.valueOf({value}), sutSb);"),
        ValueType::String => format!("sutWrStr({value}, sutSb);"),
        ValueType::List(_) => format!("sutWr_{}({value}, sutSb);", mangle(ty)),
    }
}

const JAVA_HELPERS: &str = r#"
    static String sutS;
    static int sutP;

    static void sutDie(String m) {
        System.err.println("protocol error: " + m);
        System.exit(3);
    }

    static void sutWs() {
        while (sutP < sutS.length() && Character.isWhitespace(sutS.charAt(sutP))) sutP++;
    }

    static void sutExpect(char c) {
        sutWs();
        if (sutP >= sutS.length() || sutS.charAt(sutP) != c) sutDie("expected " + c);
        sutP++;
    }

    static boolean sutAtChar(char c) {
        sutWs();
        return sutP < sutS.length() && sutS.charAt(sutP) == c;
    }

    static long sutRdLong() {
        sutWs();
        int st = sutP;
        if (sutP < sutS.length() && (sutS.charAt(sutP) == '-' || sutS.charAt(sutP) == '+')) sutP++;
        while (sutP < sutS.length() && Character.isDigit(sutS.charAt(sutP))) sutP++;
        return Long.parseLong(sutS.substring(st, sutP));
    }

    static double sutRdDouble() {
        sutWs();
        int st = sutP;
        while (sutP < sutS.length() && "+-0123456789.eE".indexOf(sutS.charAt(sutP)) >= 0) sutP++;
        return Double.parseDouble(sutS.substring(st, sutP));
    }

    static boolean sutRdBool() {
        sutWs();
        if (sutS.startsWith("true", sutP)) { sutP += 4; return true; }
        if (sutS.startsWith("false", sutP)) { sutP += 5; return false; }
        sutDie("expected bool");
        return false;
    }

    static String sutRdStr() {
        sutWs();
        if (sutP >= sutS.length() || sutS.charAt(sutP) != '"') sutDie("expected string");
        sutP++;
        StringBuilder out = new StringBuilder();
        while (sutP < sutS.length() && sutS.charAt(sutP) != '"') {
            char c = sutS.charAt(sutP++);
            if (c == '\\' && sutP < sutS.length()) {
                char e = sutS.charAt(sutP++);
                switch (e) {
                    case 'n': out.append('\n'); break;
                    case 't': out.append('\t'); break;
                    case 'r': out.append('\r'); break;
                    case 'b': out.append('\b'); break;
                    case 'f': out.append('\f'); break;
                    case 'u':
                        out.append((char) Integer.parseInt(sutS.substring(sutP, sutP + 4), 16));
                        sutP += 4;
                        break;
                    default: out.append(e); break;
                }
            } else {
                out.append(c);
            }
        }
        sutP++;
        return out.toString();
    }

    static char sutRdChar() {
        String t = sutRdStr();
        return t.isEmpty() ? '\u0000' : t.charAt(0);
    }

    static void sutWrLong(long v, StringBuilder b) { b.append(v); }

    static void sutWrDouble(double v, StringBuilder b) {
        if (Double.isNaN(v) || Double.isInfinite(v)) { b.append("null"); return; }
        b.append(Double.toString(v));
    }

    static void sutWrStr(String v, StringBuilder b) {
        b.append('"');
        for (int k = 0; k < v.length(); k++) {
            char c = v.charAt(k);
            switch (c) {
                case '"': b.append("\\\""); break;
                case '\\': b.append("\\\\"); break;
                case '\n': b.append("\\n"); break;
                case '\t': b.append("\\t"); break;
                case '\r': b.append("\\r"); break;
                default:
                    if (c < 0x20) b.append(String.format("\\u%04x", (int) c));
                    else b.append(c);
            }
        }
        b.append('"');
    }
"#;

fn java_list_helpers(sig: &Signature) -> String {
    let mut out = String::new();
    for ty in list_types(sig) {
        let ValueType::List(inner) = &ty else { unreachable!() };
        let m = mangle(&ty);
        let arr_ty = java_type(&ty);
        let boxed = java_boxed(inner);
        let elem_ty = java_type(inner);
        let elem_read = java_read_expr(inner);
        out.push_str(&format!(
            "\n    static {arr_ty} sutRd_{m}() {{\n\
             \x20       sutExpect('[');\n\
             \x20       java.util.ArrayList<{boxed}> tmp = new java.util.ArrayList<>();\n\
             \x20       if (sutAtChar(']')) {{ sutP++; return new {elem_ty}[0]{brackets}; }}\n\
             \x20       while (true) {{\n\
             \x20           tmp.add({elem_read});\n\
             \x20           if (sutAtChar(',')) {{ sutP++; continue; }}\n\
             \x20           sutExpect(']');\n\
             \x20           break;\n\
             \x20       }}\n\
             \x20       {arr_ty} arr = new {elem_ty}[tmp.size()]{brackets};\n\
             \x20       for (int k = 0; k < arr.length; k++) arr[k] = tmp.get(k);\n\
             \x20       return arr;\n\
             \x20   }}\n",
            brackets = "[]".repeat(nesting_depth(inner)),
        ));
        let wr_elem = java_write_call(inner, "v[k]");
        out.push_str(&format!(
            "\n    static void sutWr_{m}({arr_ty} v, StringBuilder sutSb) {{\n\
             \x20       sutSb.append('[');\n\
             \x20       for (int k = 0; k < v.length; k++) {{\n\
             \x20           if (k > 0) sutSb.append(',');\n\
             \x20           {wr_elem}\n\
             \x20       }}\n\
             \x20       sutSb.append(']');\n\
             \x20   }}\n"
        ));
    }
    out
}

fn nesting_depth(ty: &ValueType) -> usize {
    match ty {
        ValueType::List(inner) => 1 + nesting_depth(inner),
        _ => 0,
    }
}

/// Translated-source decomposition for class-wrapped languages.
struct WrappedSource {
    /// import/using lines hoisted above the driver class.
    preamble: Vec<String>,
    /// bare functions to inject as static members (static-ified).
    members: Vec<String>,
    /// top-level type declarations kept as-is (name, text).
    classes: Vec<(String, String)>,
}

fn decompose_wrapped(translated: &str, language: Language) -> WrappedSource {
    let mut out = WrappedSource {
        preamble: Vec::new(),
        members: Vec::new(),
        classes: Vec::new(),
    };
    let Ok(tree) = extract::parse(translated, language) else {
        out.members.push(translated.to_string());
        return out;
    };
    if tree.has_error() {
        // Let the compiler produce the diagnostic.
        out.members.push(translated.to_string());
        return out;
    }
    let root = tree.root();
    let mut cursor = root.walk();
    let mut handled_any = false;
    for child in root.children(&mut cursor) {
        let kind = child.kind();
        let text = tree.node_text(child).to_string();
        match (language, kind) {
            (Language::Java, "import_declaration") | (Language::Csharp, "using_directive") => {
                out.preamble.push(text);
                handled_any = true;
            }
            (Language::Java, "package_declaration") => {
                handled_any = true; // dropped: drivers are default-package
            }
            (Language::Java, "method_declaration") => {
                out.members.push(staticize(&tree, child, &text));
                handled_any = true;
            }
            (Language::Csharp, "global_statement") => {
                let mut inner_cursor = child.walk();
                let mut pushed = false;
                for inner in child.children(&mut inner_cursor) {
                    if inner.kind() == "local_function_statement" {
                        let inner_text = tree.node_text(inner).to_string();
                        out.members.push(staticize(&tree, inner, &inner_text));
                        pushed = true;
                    }
                }
                if !pushed {
                    out.members.push(text);
                }
                handled_any = true;
            }
            (Language::Java, "class_declaration")
            | (Language::Csharp, "class_declaration")
            | (Language::Csharp, "struct_declaration") => {
                let name = child
                    .child_by_field_name("name")
                    .map(|n| tree.node_text(n).to_string())
                    .unwrap_or_default();
                let cleaned = if language == Language::Java {
                    strip_leading_public(&text)
                } else {
                    text
                };
                out.classes.push((name, cleaned));
                handled_any = true;
            }
            _ => {
                out.members.push(text);
                handled_any = true;
            }
        }
    }
    if !handled_any {
        out.members.push(translated.to_string());
    }
    out
}

/// Prepend `static` to a method unless its modifiers already include it.
fn staticize(tree: &extract::SyntaxTree, node: tree_sitter::Node<'_>, text: &str) -> String {
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        let kind = child.kind();
        if (kind == "modifiers" || kind == "modifier") && tree.node_text(child).contains("static") {
            return text.to_string();
        }
    }
    format!("static {text}")
}

/// Only one public top-level class is allowed per Java file (the driver).
fn strip_leading_public(class_text: &str) -> String {
    let trimmed = class_text.trim_start();
    if let Some(rest) = trimmed.strip_prefix("public ") {
        rest.to_string()
    } else {
        class_text.to_string()
    }
}

fn indent_block(text: &str, indent: &str) -> String {
    text.lines()
        .map(|l| {
            if l.trim().is_empty() {
                String::new()
            } else {
                format!("{indent}{l}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn java_driver(case: &SutCase, translated_source: &str) -> String {
    let sig = &case.signature;
    let parts = decompose_wrapped(translated_source, Language::Java);
    let entry = &case.entry;
    let arity = sig.arity();

    let mut body = String::new();
    for import in &parts.preamble {
        body.push_str(import);
        body.push('\n');
    }
    body.push_str("import java.io.BufferedReader;\nimport java.io.InputStreamReader;\n\n");
    body.push_str("public class Main {\n");
    for member in &parts.members {
        body.push_str(&indent_block(member, "    "));
        body.push_str("\n\n");
    }
    body.push_str(JAVA_HELPERS);
    body.push_str(&java_list_helpers(sig));

    // Entry invocation: direct static call when functions were injected as
    // members, reflection when the translation shipped its own class(es).
    let use_reflection = parts.members.is_empty() && !parts.classes.is_empty();
    if use_reflection {
        let candidates = parts
            .classes
            .iter()
            .map(|(name, _)| format!("{name}.class"))
            .collect::<Vec<_>>()
            .join(", ");
        body.push_str(&format!(
            "\n    static Object sutInvoke(Object[] args) throws Exception {{\n\
             \x20       Class<?>[] candidates = {{ {candidates} }};\n\
             \x20       for (Class<?> c : candidates) {{\n\
             \x20           for (java.lang.reflect.Method m : c.getDeclaredMethods()) {{\n\
             \x20               if (m.getName().equals(\"{entry}\") && m.getParameterCount() == {arity}) {{\n\
             \x20                   m.setAccessible(true);\n\
             \x20                   Object self = java.lang.reflect.Modifier.isStatic(m.getModifiers())\n\
             \x20                           ? null : c.getDeclaredConstructor().newInstance();\n\
             \x20                   return m.invoke(self, args);\n\
             \x20               }}\n\
             \x20           }}\n\
             \x20       }}\n\
             \x20       throw new RuntimeException(\"entry {entry}/{arity} not found\");\n\
             \x20   }}\n"
        ));
    }

    let mut arg_parse = String::new();
    let mut arg_names = Vec::new();
    for (k, p) in sig.params.iter().enumerate() {
        if k > 0 {
            arg_parse.push_str("            sutExpect(',');\n");
        }
        arg_parse.push_str(&format!(
            "            {} sutA{k} = {};\n",
            java_type(&p.ty),
            java_read_expr(&p.ty)
        ));
        arg_names.push(format!("sutA{k}"));
    }
    let ret_ty = java_type(&sig.returns.ty);
    let call = if use_reflection {
        let boxed_args = arg_names.join(", ");
        let raw = format!("sutInvoke(new Object[] {{ {boxed_args} }})");
        match &sig.returns.ty {
            ValueType::Int => format!("((Number) {raw}).intValue()"),
            ValueType::Long => format!("((Number) {raw}).longValue()"),
            ValueType::Double => format!("((Number) {raw}).doubleValue()"),
            ValueType::Bool => format!("((Boolean) {raw}).booleanValue()"),
            ValueType::Char => format!("((Character) {raw}).charValue()"),
            ValueType::String => format!("(String) {raw}"),
            ValueType::List(_) => format!("({ret_ty}) {raw}"),
        }
    } else {
        format!("{entry}({})", arg_names.join(", "))
    };
    let wr_ret = java_write_call(&sig.returns.ty, "sutResult");

    body.push_str(&format!(
        "\n    public static void main(String[] sutArgv) throws Exception {{\n\
         \x20       java.util.Locale.setDefault(java.util.Locale.ROOT);\n\
         \x20       BufferedReader sutBr = new BufferedReader(new InputStreamReader(System.in));\n\
         \x20       String sutLine;\n\
         \x20       while ((sutLine = sutBr.readLine()) != null) {{\n\
         \x20           if (sutLine.trim().isEmpty()) continue;\n\
         \x20           sutS = sutLine;\n\
         \x20           sutP = 0;\n\
         \x20           sutExpect('[');\n\
         {arg_parse}\
         \x20           sutExpect(']');\n\
         \x20           {ret_ty} sutResult = {call};\n\
         \x20           StringBuilder sutSb = new StringBuilder();\n\
         \x20           {wr_ret}\n\
         \x20           System.out.println(sutSb);\n\
         \x20           System.out.flush();\n\
         \x20       }}\n\
         \x20   }}\n\
         }}\n"
    ));

    if !parts.classes.is_empty() {
        body.push('\n');
        for (_, class_text) in &parts.classes {
            body.push_str(class_text);
            body.push_str("\n\n");
        }
    }
    body
}

// ---------------------------------------------------------------------------
// C#
// ---------------------------------------------------------------------------

fn cs_type(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "int".into(),
        ValueType::Long => "long".into(),
        ValueType::Double => "double".into(),
        ValueType::Bool => "bool".into(),
        ValueType::Char => "char".into(),
        ValueType::String => "string".into(),
        ValueType::List(inner) => format!("{}[]", cs_type(inner)),
    }
}

fn cs_read_expr(ty: &ValueType) -> String {
    match ty {
        ValueType::Int => "(int) SutRdLong()".into(),
        ValueType::Long => "SutRdLong()".into(),
        ValueType::Double => "SutRdDouble()".into(),
        ValueType::Bool => "SutRdBool()".into(),
        ValueType::Char => "SutRdChar()".into(),
        ValueType::String => "SutRdStr()".into(),
        ValueType::List(_) => format!("SutRd_{}()", mangle(ty)),
    }
}

fn cs_write_call(ty: &ValueType, value: &str) -> String {
    match ty {
        ValueType::Int | ValueType::Long => format!("sutSb.Append({value});"),
        ValueType::Double => format!("SutWrDouble({value}, sutSb);"),
        ValueType::Bool => format!("sutSb.Append({value} ? \"true\" : \"false\");"),
        ValueType::Char => format!("SutWrStr({value}.ToString(), sutSb);"),
        ValueType::String => format!("SutWrStr({value}, sutSb);"),
        ValueType::List(_) => format!("SutWr_{}({value}, sutSb);", mangle(ty)),
    }
}

const CS_HELPERS: &str = r#"
    static string sutS;
    static int sutP;

    static void SutDie(string m) {
        Console.Error.WriteLine("protocol error: " + m);
        Environment.Exit(3);
    }

    static void SutWs() {
        while (sutP < sutS.Length && Char.IsWhiteSpace(sutS[sutP])) sutP++;
    }

    static void SutExpect(char c) {
        SutWs();
        if (sutP >= sutS.Length || sutS[sutP] != c) SutDie("expected " + c);
        sutP++;
    }

    static bool SutAtChar(char c) {
        SutWs();
        return sutP < sutS.Length && sutS[sutP] == c;
    }

    static long SutRdLong() {
        SutWs();
        int st = sutP;
        if (sutP < sutS.Length && (sutS[sutP] == '-' || sutS[sutP] == '+')) sutP++;
        while (sutP < sutS.Length && Char.IsDigit(sutS[sutP])) sutP++;
        return long.Parse(sutS.Substring(st, sutP - st), CultureInfo.InvariantCulture);
    }

    static double SutRdDouble() {
        SutWs();
        int st = sutP;
        while (sutP < sutS.Length && "+-0123456789.eE".IndexOf(sutS[sutP]) >= 0) sutP++;
        return double.Parse(sutS.Substring(st, sutP - st), CultureInfo.InvariantCulture);
    }

    static bool SutRdBool() {
        SutWs();
        if (string.CompareOrdinal(sutS, sutP, "true", 0, 4) == 0) { sutP += 4; return true; }
        if (string.CompareOrdinal(sutS, sutP, "false", 0, 5) == 0) { sutP += 5; return false; }
        SutDie("expected bool");
        return false;
    }

    static string SutRdStr() {
        SutWs();
        if (sutP >= sutS.Length || sutS[sutP] != '"') SutDie("expected string");
        sutP++;
        StringBuilder outSb = new StringBuilder();
        while (sutP < sutS.Length && sutS[sutP] != '"') {
            char c = sutS[sutP++];
            if (c == '\\' && sutP < sutS.Length) {
                char e = sutS[sutP++];
                switch (e) {
                    case 'n': outSb.Append('\n'); break;
                    case 't': outSb.Append('\t'); break;
                    case 'r': outSb.Append('\r'); break;
                    case 'b': outSb.Append('\b'); break;
                    case 'f': outSb.Append('\f'); break;
                    case 'u':
                        outSb.Append((char) Convert.ToInt32(sutS.Substring(sutP, 4), 16));
                        sutP += 4;
                        break;
                    default: outSb.Append(e); break;
                }
            } else {
                outSb.Append(c);
            }
        }
        sutP++;
        return outSb.ToString();
    }

    static char SutRdChar() {
        string t = SutRdStr();
        return t.Length == 0 ? '\0' : t[0];
    }

    static void SutWrDouble(double v, StringBuilder b) {
        if (Double.IsNaN(v) || Double.IsInfinity(v)) { b.Append("null"); return; }
        b.Append(v.ToString("R", CultureInfo.InvariantCulture));
    }

    static void SutWrStr(string v, StringBuilder b) {
        b.Append('"');
        foreach (char c in v) {
            switch (c) {
                case '"': b.Append("\\\""); break;
                case '\\': b.Append("\\\\"); break;
                case '\n': b.Append("\\n"); break;
                case '\t': b.Append("\\t"); break;
                case '\r': b.Append("\\r"); break;
                default:
                    if (c < (char) 0x20) b.Append(string.Format("\\u{0:x4}", (int) c));
                    else b.Append(c);
                    break;
            }
        }
        b.Append('"');
    }
"#;

fn cs_list_helpers(sig: &Signature) -> String {
    let mut out = String::new();
    for ty in list_types(sig) {
        let ValueType::List(inner) = &ty else { unreachable!() };
        let m = mangle(&ty);
        let arr_ty = cs_type(&ty);
        let elem_ty = cs_type(inner);
        let elem_read = cs_read_expr(inner);
        out.push_str(&format!(
            "\n    static {arr_ty} SutRd_{m}() {{\n\
             \x20       SutExpect('[');\n\
             \x20       List<{elem_ty}> tmp = new List<{elem_ty}>();\n\
             \x20       if (SutAtChar(']')) {{ sutP++; return tmp.ToArray(); }}\n\
             \x20       while (true) {{\n\
             \x20           tmp.Add({elem_read});\n\
             \x20           if (SutAtChar(',')) {{ sutP++; continue; }}\n\
             \x20           SutExpect(']');\n\
             \x20           break;\n\
             \x20       }}\n\
             \x20       return tmp.ToArray();\n\
             \x20   }}\n"
        ));
        let wr_elem = cs_write_call(inner, "v[k]");
        out.push_str(&format!(
            "\n    static void SutWr_{m}({arr_ty} v, StringBuilder sutSb) {{\n\
             \x20       sutSb.Append('[');\n\
             \x20       for (int k = 0; k < v.Length; k++) {{\n\
             \x20           if (k > 0) sutSb.Append(',');\n\
             \x20           {wr_elem}\n\
             \x20       }}\n\
             \x20       sutSb.Append(']');\n\
             \x20   }}\n"
        ));
    }
    out
}

fn csharp_driver(case: &SutCase, translated_source: &str) -> String {
    let sig = &case.signature;
    let parts = decompose_wrapped(translated_source, Language::Csharp);
    let entry = &case.entry;
    let arity = sig.arity();

    let mut body = String::new();
    for using in &parts.preamble {
        body.push_str(using);
        body.push('\n');
    }
    body.push_str(
        "using System;\nusing System.Collections.Generic;\nusing System.Globalization;\nusing System.Text;\n\n",
    );
    body.push_str("public class Main {\n");
    for member in &parts.members {
        body.push_str(&indent_block(member, "    "));
        body.push_str("\n\n");
    }
    body.push_str(CS_HELPERS);
    body.push_str(&cs_list_helpers(sig));

    let use_reflection = parts.members.is_empty() && !parts.classes.is_empty();
    if use_reflection {
        let candidates = parts
            .classes
            .iter()
            .map(|(name, _)| format!("typeof({name})"))
            .collect::<Vec<_>>()
            .join(", ");
        body.push_str(&format!(
            "\n    static object SutInvoke(object[] args) {{\n\
             \x20       Type[] candidates = {{ {candidates} }};\n\
             \x20       foreach (Type t in candidates) {{\n\
             \x20           foreach (System.Reflection.MethodInfo m in t.GetMethods(\n\
             \x20                   System.Reflection.BindingFlags.Public | System.Reflection.BindingFlags.NonPublic |\n\
             \x20                   System.Reflection.BindingFlags.Static | System.Reflection.BindingFlags.Instance)) {{\n\
             \x20               if (m.Name == \"{entry}\" && m.GetParameters().Length == {arity}) {{\n\
             \x20                   object self = m.IsStatic ? null : Activator.CreateInstance(t);\n\
             \x20                   return m.Invoke(self, args);\n\
             \x20               }}\n\
             \x20           }}\n\
             \x20       }}\n\
             \x20       throw new Exception(\"entry {entry}/{arity} not found\");\n\
             \x20   }}\n"
        ));
    }

    let mut arg_parse = String::new();
    let mut arg_names = Vec::new();
    for (k, p) in sig.params.iter().enumerate() {
        if k > 0 {
            arg_parse.push_str("            SutExpect(',');\n");
        }
        arg_parse.push_str(&format!(
            "            {} sutA{k} = {};\n",
            cs_type(&p.ty),
            cs_read_expr(&p.ty)
        ));
        arg_names.push(format!("sutA{k}"));
    }
    let ret_ty = cs_type(&sig.returns.ty);
    let call = if use_reflection {
        let boxed_args = arg_names.join(", ");
        let raw = format!("SutInvoke(new object[] {{ {boxed_args} }})");
        match &sig.returns.ty {
            ValueType::Int => format!("Convert.ToInt32({raw})"),
            ValueType::Long => format!("Convert.ToInt64({raw})"),
            ValueType::Double => format!("Convert.ToDouble({raw})"),
            ValueType::Bool => format!("Convert.ToBoolean({raw})"),
            ValueType::Char => format!("Convert.ToChar({raw})"),
            ValueType::String => format!("(string) {raw}"),
            ValueType::List(_) => format!("({ret_ty}) {raw}"),
        }
    } else {
        format!("{entry}({})", arg_names.join(", "))
    };
    let wr_ret = cs_write_call(&sig.returns.ty, "sutResult");

    body.push_str(&format!(
        "\n    public static void Main() {{\n\
         \x20       System.Threading.Thread.CurrentThread.CurrentCulture = CultureInfo.InvariantCulture;\n\
         \x20       string sutLine;\n\
         \x20       while ((sutLine = Console.ReadLine()) != null) {{\n\
         \x20           if (sutLine.Trim().Length == 0) continue;\n\
         \x20           sutS = sutLine;\n\
         \x20           sutP = 0;\n\
         \x20           SutExpect('[');\n\
         {arg_parse}\
         \x20           SutExpect(']');\n\
         \x20           {ret_ty} sutResult = {call};\n\
         \x20           StringBuilder sutSb = new StringBuilder();\n\
         \x20           {wr_ret}\n\
         \x20           Console.WriteLine(sutSb.ToString());\n\
         \x20       }}\n\
         \x20   }}\n\
         }}\n"
    ));

    if !parts.classes.is_empty() {
        body.push('\n');
        for (_, class_text) in &parts.classes {
            body.push_str(class_text);
            body.push_str("\n\n");
        }
    }
    body
}
