//! Pass-rate aggregation: per language pair, per "To X" / "From X", and
//! overall average, with any-attempt-passes semantics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::exec::{ExecError, SuiteResult, Verdict};
use crate::lang::Language;

/// An ordered (source, target) language pair.
pub type PairKey = (Language, Language);

/// Aggregated rates for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModelAcc {
    /// Pass rate per (source, target) pair, in [0, 1].
    pub pair_rates: BTreeMap<String, f64>,
    /// Unweighted mean of pair rates translating INTO the language.
    pub to: BTreeMap<Language, f64>,
    /// Unweighted mean of pair rates translating OUT OF the language.
    pub from: BTreeMap<Language, f64>,
    /// Unweighted mean over all pair rates.
    pub average: f64,
    /// Largest attempt index seen plus one (the K of pass@K).
    pub attempts_k: u32,
}

impl ModelAcc {
    pub fn pair_rate(&self, src: Language, tgt: Language) -> Option<f64> {
        self.pair_rates.get(&pair_name(src, tgt)).copied()
    }
}

pub fn pair_name(src: Language, tgt: Language) -> String {
    format!("{}:{}", src.id(), tgt.id())
}

pub fn parse_pair_name(name: &str) -> Option<PairKey> {
    let (src, tgt) = name.split_once(':')?;
    Some((src.parse().ok()?, tgt.parse().ok()?))
}

/// Aggregated pass rates per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AccTable {
    pub models: BTreeMap<String, ModelAcc>,
}

/// Compute the accuracy table from suite results.
///
/// A case counts as passed for a (model, pair) if ANY of its attempts passed.
/// Pair rate = passed cases / distinct cases. "To X" / "From X" / average are
/// unweighted means over pair rates, matching the table convention.
pub fn compute_sut_acc(suite: &SuiteResult) -> Result<AccTable, ExecError> {
    if suite.results.is_empty() {
        return Err(ExecError::EmptySuite);
    }

    // (model, pair) -> case_id -> passed-any-attempt
    let mut outcomes: BTreeMap<(String, PairKey), BTreeMap<String, bool>> = BTreeMap::new();
    let mut attempts: BTreeMap<String, u32> = BTreeMap::new();
    for result in &suite.results {
        let record = &result.record;
        let key = (
            record.model_id.clone(),
            (record.source_language, record.target_language),
        );
        let passed = result.verdict == Verdict::Pass;
        outcomes
            .entry(key)
            .or_default()
            .entry(record.case_id.clone())
            .and_modify(|p| *p |= passed)
            .or_insert(passed);
        let k = attempts.entry(record.model_id.clone()).or_insert(0);
        *k = (*k).max(record.attempt + 1);
    }

    let mut models: BTreeMap<String, ModelAcc> = BTreeMap::new();
    for ((model, (src, tgt)), cases) in &outcomes {
        let passed = cases.values().filter(|&&p| p).count();
        let rate = passed as f64 / cases.len() as f64;
        models
            .entry(model.clone())
            .or_default()
            .pair_rates
            .insert(pair_name(*src, *tgt), rate);
    }

    for (model, acc) in &mut models {
        acc.attempts_k = attempts.get(model).copied().unwrap_or(1);
        let pairs: Vec<(PairKey, f64)> = acc
            .pair_rates
            .iter()
            .filter_map(|(name, &rate)| parse_pair_name(name).map(|k| (k, rate)))
            .collect();
        let langs: BTreeSet<Language> = pairs
            .iter()
            .flat_map(|((s, t), _)| [*s, *t])
            .collect();
        for lang in langs {
            let to: Vec<f64> = pairs
                .iter()
                .filter(|((_, t), _)| *t == lang)
                .map(|(_, r)| *r)
                .collect();
            if !to.is_empty() {
                acc.to.insert(lang, mean(&to));
            }
            let from: Vec<f64> = pairs
                .iter()
                .filter(|((s, _), _)| *s == lang)
                .map(|(_, r)| *r)
                .collect();
            if !from.is_empty() {
                acc.from.insert(lang, mean(&from));
            }
        }
        let all: Vec<f64> = pairs.iter().map(|(_, r)| *r).collect();
        acc.average = mean(&all);
    }

    Ok(AccTable { models })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}
