//! Report rendering: the To/From accuracy table, element rankings and
//! category shares, as JSON, Markdown and CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exec::{AccTable, SuiteResult};
use crate::lang::Language;
use crate::sets::SetsReport;

/// Everything one run produced, bundled for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub run_id: String,
    pub acc_table: AccTable,
    pub verdict_histogram: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<SetsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteResult>,
}

impl ReportBundle {
    pub fn from_suite(run_id: &str, suite: SuiteResult, acc_table: AccTable) -> Self {
        ReportBundle {
            run_id: run_id.to_string(),
            verdict_histogram: suite.verdict_histogram(),
            acc_table,
            sets: None,
            suite: Some(suite),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

fn percent(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "--".to_string(),
    }
}

/// Render the bundle in the requested format.
pub fn render(bundle: &ReportBundle, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(bundle).expect("bundle serializes");
            out.push('\n');
            out
        }
        ReportFormat::Markdown => render_markdown(bundle),
        ReportFormat::Csv => render_csv(bundle),
    }
}

fn render_markdown(bundle: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Run `{}`", bundle.run_id);
    out.push('\n');
    out.push_str("## Accuracy\n\n");
    out.push_str(
        "| Model | To C++ | From C++ | To Ja | From Ja | To Py | From Py | To C# | From C# | Avg. |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for (model, acc) in &bundle.acc_table.models {
        let mut cells = Vec::with_capacity(9);
        for lang in Language::ALL {
            cells.push(percent(acc.to.get(&lang).copied()));
            cells.push(percent(acc.from.get(&lang).copied()));
        }
        cells.push(percent(Some(acc.average)));
        let _ = writeln!(out, "| {model} | {} |", cells.join(" | "));
    }

    out.push_str("\n## Verdicts\n\n| Verdict | Count |\n|---|---|\n");
    for (verdict, count) in &bundle.verdict_histogram {
        let _ = writeln!(out, "| {verdict} | {count} |");
    }

    if let Some(sets) = &bundle.sets {
        out.push_str("\n## Element scores\n\n");
        let _ = writeln!(
            out,
            "lambda = {:.6}, converged = {}\n",
            sets.lambda, sets.converged
        );
        out.push_str("| Rank | Element | Category | Log fail rate | Fail probability |\n");
        out.push_str("|---|---|---|---|---|\n");
        for score in &sets.scores {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {:.4} |",
                score.rank, score.element, score.category, score.log_fail_rate, score.fail_probability
            );
        }
        out.push_str("\n## Category distribution\n\n| Category | Share |\n|---|---|\n");
        for (category, share) in &sets.category_distribution {
            let _ = writeln!(out, "| {category} | {share:.4} |");
        }
    }
    out
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn render_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from("model,src_lang,tgt_lang,case_id,attempt,verdict,wall_time_ms\n");
    if let Some(suite) = &bundle.suite {
        for result in &suite.results {
            let r = &result.record;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:?},{}",
                csv_escape(&r.model_id),
                r.source_language,
                r.target_language,
                csv_escape(&r.case_id),
                r.attempt,
                result.verdict,
                result.wall_time_ms
            );
        }
    }
    out
}
