//! Scoring of model responses: exact prefix matching, probability ranking,
//! and centered mass (validity).

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Normalized generation must start with the normalized gold.
    Prefix,
    /// Gold must be the highest-scored option under the model's distribution.
    Ranking,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Prefix => write!(f, "prefix"),
            Metric::Ranking => write!(f, "ranking"),
        }
    }
}

/// One scored evaluation, persisted as a JSONL line for audit and replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub format_id: String,
    pub instance_id: String,
    pub metric: Metric,
    pub outcome: u8,
    pub valid: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

/// Lowercase, collapse whitespace runs to one space, strip ends. Idempotent.
pub fn normalize_text(s: &str) -> String {
    s.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// 1 iff the normalized generation starts with the normalized gold.
pub fn prefix_match(generation: &str, gold: &str) -> u8 {
    let gold = normalize_text(gold);
    if gold.is_empty() {
        // empty gold would match anything; treat as non-match
        return 0;
    }
    u8::from(normalize_text(generation).starts_with(&gold))
}

/// 1 iff the generation starts with any of the candidate options.
pub fn matches_any_option(generation: &str, options: &[String]) -> u8 {
    u8::from(options.iter().any(|o| prefix_match(generation, o) == 1))
}

/// 1 iff gold wins the argmax over option scores. Ties resolve toward the
/// earliest option in the canonical order, then the winner is compared to
/// gold, so a tie involving gold only counts when gold comes first.
pub fn ranking_score(
    options: &[String],
    scores: &HashMap<String, f64>,
    gold: &str,
) -> Result<u8> {
    if options.len() < 2 {
        return Err(Error::Eval("ranking needs at least 2 options".into()));
    }
    if !options.iter().any(|o| o == gold) {
        return Err(Error::Eval(format!("gold {gold:?} not among the options")));
    }
    let mut best: Option<(&str, f64)> = None;
    for option in options {
        let score = *scores
            .get(option)
            .ok_or_else(|| Error::Eval(format!("missing score for option {option:?}")))?;
        if !score.is_finite() {
            return Err(Error::Eval(format!("non-finite score for {option:?}")));
        }
        // strict > keeps the earliest option on ties
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((option, score));
        }
    }
    Ok(u8::from(best.unwrap().0 == gold))
}

/// Fraction of records whose generation matched any valid option.
pub fn centered_mass(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("centered_mass".into()));
    }
    let valid: u64 = records.iter().map(|r| u64::from(r.valid)).sum();
    Ok(valid as f64 / records.len() as f64)
}
