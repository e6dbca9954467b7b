//! Full prompt assembly: instruction (rewritten to match the format's
//! enumeration labels), frozen few-shot exemplars, and the query instance
//! with an empty answer slot.

use serde::Serialize;

use crate::constants::ConstantSets;
use crate::error::{Error, Result};
use crate::format::{render_format, FormatAst};
use crate::task::{DataInstance, TaskSpec};

/// Spacing between instruction, exemplars, and query.
pub const DEFAULT_JOINER: &str = "\n\n";

/// A label occurrence that could not be rewritten cleanly: the label string
/// appears inside a longer word at this byte offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelCollision {
    pub label: String,
    pub position: usize,
}

/// Rewrite enumeration labels in the instruction to the format's labels.
///
/// Occurrences are matched whole-word by default, or at the explicit start
/// offsets configured in the task's option labels. Returns the rewritten
/// instruction plus any collisions (label embedded in a longer word).
pub fn rewrite_instruction(
    task: &TaskSpec,
    format: &FormatAst,
    sets: &ConstantSets,
) -> (String, Vec<LabelCollision>) {
    let Some(labels) = &task.option_labels else {
        return (task.instruction.clone(), Vec::new());
    };
    if format.first_enumeration().is_none() {
        return (task.instruction.clone(), Vec::new());
    }
    let replacements: Vec<(String, String)> = labels
        .labels
        .iter()
        .enumerate()
        .filter_map(|(pos, old)| {
            format
                .item_label(sets, pos)
                .map(|new| (old.clone(), new))
        })
        .collect();
    rewrite_labels(&task.instruction, &replacements, labels.spans.as_deref())
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn rewrite_labels(
    text: &str,
    replacements: &[(String, String)],
    spans: Option<&[usize]>,
) -> (String, Vec<LabelCollision>) {
    let mut out = String::with_capacity(text.len());
    let mut collisions = Vec::new();
    let mut i = 0;
    'outer: while i < text.len() {
        if !text.is_char_boundary(i) {
            // walk to the next boundary
            i += 1;
            continue;
        }
        // longest label first so that e.g. "II" wins over "I"
        let mut candidates: Vec<&(String, String)> = replacements.iter().collect();
        candidates.sort_by_key(|(old, _)| std::cmp::Reverse(old.len()));
        for (old, new) in candidates {
            if old.is_empty() || !text[i..].starts_with(old.as_str()) {
                continue;
            }
            let before_ok = text[..i].chars().next_back().is_none_or(|c| !is_word_char(c));
            let after_ok = text[i + old.len()..]
                .chars()
                .next()
                .is_none_or(|c| !is_word_char(c));
            let span_ok = spans.is_none_or(|s| s.contains(&i));
            if before_ok && after_ok && span_ok {
                out.push_str(new);
                i += old.len();
                continue 'outer;
            }
            if !(before_ok && after_ok) {
                collisions.push(LabelCollision {
                    label: old.clone(),
                    position: i,
                });
            }
        }
        let ch = text[i..].chars().next().unwrap();
        out.push(ch);
        i += ch.len_utf8();
    }
    (out, collisions)
}

/// The answer text written into an exemplar's answer slot, and the gold that
/// metrics should compare against. For labeled multiple choice under an
/// enumeration, gold tracks the format's labeling of the gold option's index;
/// otherwise it is the raw gold string.
pub fn effective_gold(
    task: &TaskSpec,
    format: &FormatAst,
    sets: &ConstantSets,
    instance: &DataInstance,
) -> String {
    if task.option_labels.is_some() && format.first_enumeration().is_some() {
        if let Some(pos) = instance.options.iter().position(|o| o == &instance.gold) {
            if let Some(label) = format.item_label(sets, pos) {
                return label;
            }
        }
    }
    instance.gold.clone()
}

/// The candidate answer strings a model is expected to produce, aligned with
/// the instance's canonical option order.
pub fn effective_options(
    task: &TaskSpec,
    format: &FormatAst,
    sets: &ConstantSets,
    instance: &DataInstance,
) -> Vec<String> {
    if task.option_labels.is_some() && format.first_enumeration().is_some() {
        let labeled: Option<Vec<String>> = (0..instance.options.len())
            .map(|pos| format.item_label(sets, pos))
            .collect();
        if let Some(labels) = labeled {
            return labels;
        }
    }
    instance.options.clone()
}

/// Assemble the full n-shot prompt.
pub fn build_prompt(
    task: &TaskSpec,
    format: &FormatAst,
    sets: &ConstantSets,
    n_shots: usize,
    query: &DataInstance,
    joiner: &str,
) -> Result<String> {
    if n_shots > task.fewshot_ids.len() {
        return Err(Error::Config(format!(
            "task {} has {} few-shot exemplars, {n_shots} requested",
            task.task_id,
            task.fewshot_ids.len()
        )));
    }
    if task.fewshot_ids[..n_shots].iter().any(|id| id == &query.id) {
        return Err(Error::Config(format!(
            "query instance {} is among the few-shot exemplars",
            query.id
        )));
    }
    let (instruction, collisions) = rewrite_instruction(task, format, sets);
    for c in &collisions {
        log::warn!(
            "task {}: label {:?} at byte {} is embedded in a word; left unchanged",
            task.task_id,
            c.label,
            c.position
        );
    }
    let mut parts = Vec::with_capacity(n_shots + 2);
    parts.push(instruction);
    for id in &task.fewshot_ids[..n_shots] {
        let exemplar = task
            .instance(id)
            .ok_or_else(|| Error::Config(format!("few-shot id {id} missing")))?;
        let answer = effective_gold(task, format, sets, exemplar);
        parts.push(render_format(format, sets, exemplar, &answer)?);
    }
    parts.push(render_format(format, sets, query, "")?);
    Ok(parts.join(joiner))
}
