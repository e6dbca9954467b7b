//! Artifact emission: report JSON, per-evaluation JSONL, CSV summaries.
//! Every artifact embeds seed, config hash, and tool version via the report.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::analysis::AccuracyRow;
use crate::constants::{ConstantSets, Pool};
use crate::error::Result;
use crate::format::FormatAst;
use crate::metrics::EvalRecord;
use crate::search::SpreadReport;

/// Human-readable value of a group's current constant.
pub fn group_value_string(sets: &ConstantSets, pool: Pool, value: usize) -> String {
    match pool {
        Pool::Separators1 => format!("{:?}", sets.separators1[value]),
        Pool::Separators2 => format!("{:?}", sets.separators2[value]),
        Pool::Spaces => format!("{:?}", sets.spaces[value]),
        Pool::Casings => serde_json::to_string(&sets.casings[value]).unwrap(),
        Pool::ItemWrappers => serde_json::to_string(&sets.item_wrappers[value]).unwrap(),
        Pool::ItemNumberings => serde_json::to_string(&sets.item_numberings[value]).unwrap(),
    }
}

/// One sampled format, as listed in formats.json.
#[derive(Debug, Clone, Serialize)]
pub struct FormatSummary {
    pub format_id: String,
    /// Pool value index per equality group, the format's canonical signature.
    pub assignment: Vec<usize>,
    pub groups: Vec<GroupSummary>,
    /// The format rendered on a tiny placeholder instance.
    pub preview: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub pool: Pool,
    pub value_index: usize,
    pub value: String,
}

pub fn summarize_format(
    format_id: &str,
    format: &FormatAst,
    sets: &ConstantSets,
    preview: String,
) -> FormatSummary {
    FormatSummary {
        format_id: format_id.to_string(),
        assignment: format.assignment(),
        groups: format
            .groups
            .iter()
            .map(|g| GroupSummary {
                pool: g.pool,
                value_index: g.value,
                value: group_value_string(sets, g.pool, g.value),
            })
            .collect(),
        preview,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Records are sorted by (format, instance) so parallel evaluation order
/// never leaks into the artifact.
pub fn write_records(path: &Path, records: &mut Vec<EvalRecord>) -> Result<()> {
    records.sort_by(|a, b| {
        (a.format_id.as_str(), a.instance_id.as_str())
            .cmp(&(b.format_id.as_str(), b.instance_id.as_str()))
    });
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut file, record)?;
        writeln!(file)?;
    }
    file.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, report: &SpreadReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "algorithm",
        "seed",
        "budget",
        "batch",
        "used",
        "leftover",
        "best_format",
        "best_estimate",
        "worst_format",
        "worst_estimate",
        "spread_estimate",
        "verified_spread",
        "config_hash",
        "version",
    ])?;
    writer.write_record([
        report.algorithm.to_string(),
        report.seed.to_string(),
        report.budget.to_string(),
        report.batch.to_string(),
        report.used.to_string(),
        report.leftover.to_string(),
        report.best.format_id.clone(),
        report.best.estimate.to_string(),
        report.worst.format_id.clone(),
        report.worst.estimate.to_string(),
        report.spread_estimate.to_string(),
        report
            .verified
            .as_ref()
            .map(|v| v.spread.to_string())
            .unwrap_or_default(),
        report.config_hash.clone(),
        report.version.clone(),
    ])?;
    writer.flush()?;
    Ok(())
}

pub fn write_accuracy_csv(path: &Path, rows: &[AccuracyRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "format_id", "model_id", "n_shots", "metric", "accuracy", "count",
    ])?;
    for row in rows {
        writer.write_record([
            row.format_id.clone(),
            row.model_id.clone(),
            row.n_shots.to_string(),
            row.metric.to_string(),
            row.accuracy.to_string(),
            row.count.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
