//! Task specifications: instruction, data instances, frozen few-shot choice,
//! and the original prompt format. Includes the Super-NaturalInstructions
//! converter.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use crate::constants::ConstantSets;
use crate::error::{Error, Result};
use crate::format::{compile_literal, FormatAst, LiteralNode};

/// Evaluation datasets are truncated to this many instances.
pub const MAX_INSTANCES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInstance {
    pub id: String,
    #[serde(default)]
    pub fields: Vec<String>,
    #[serde(default)]
    pub options: Vec<String>,
    pub gold: String,
}

/// Original enumeration labels referenced by the instruction, in item order.
/// `spans` optionally pins replacement to explicit start offsets; otherwise
/// whole-word occurrences of each label are rewritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionLabels {
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub instruction: String,
    pub instances: Vec<DataInstance>,
    #[serde(default)]
    pub fewshot_ids: Vec<String>,
    pub original_format: FormatAst,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_labels: Option<OptionLabels>,
}

/// On-disk form: the format is written with inline constant strings and
/// compiled against the constant sets at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskFile {
    pub task_id: String,
    pub instruction: String,
    pub instances: Vec<DataInstance>,
    #[serde(default)]
    pub fewshot_ids: Vec<String>,
    pub original_format: LiteralNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_labels: Option<OptionLabels>,
}

impl TaskSpec {
    pub fn from_file(file: TaskFile, sets: &ConstantSets) -> Result<TaskSpec> {
        let original_format = compile_literal(&file.original_format, sets)?;
        let mut task = TaskSpec {
            task_id: file.task_id,
            instruction: file.instruction,
            instances: file.instances,
            fewshot_ids: file.fewshot_ids,
            original_format,
            option_labels: file.option_labels,
        };
        task.truncate_and_validate()?;
        Ok(task)
    }

    fn truncate_and_validate(&mut self) -> Result<()> {
        if self.instances.len() > MAX_INSTANCES {
            log::info!(
                "task {}: truncating {} instances to {MAX_INSTANCES}",
                self.task_id,
                self.instances.len()
            );
            self.instances.truncate(MAX_INSTANCES);
        }
        let mut ids = HashSet::new();
        for inst in &self.instances {
            if !ids.insert(inst.id.as_str()) {
                return Err(Error::Config(format!(
                    "task {}: duplicate instance id {}",
                    self.task_id, inst.id
                )));
            }
            if !inst.options.is_empty() && !inst.options.contains(&inst.gold) {
                return Err(Error::Config(format!(
                    "task {}: instance {}: gold {:?} is not among the options",
                    self.task_id, inst.id, inst.gold
                )));
            }
        }
        for id in &self.fewshot_ids {
            if !ids.contains(id.as_str()) {
                return Err(Error::Config(format!(
                    "task {}: few-shot id {id} not among the instances",
                    self.task_id
                )));
            }
        }
        if let Some(labels) = &self.option_labels {
            if labels.labels.is_empty() {
                return Err(Error::Config("option_labels.labels is empty".into()));
            }
        }
        Ok(())
    }

    /// Evaluation instances in their fixed order: everything not frozen as a
    /// few-shot exemplar.
    pub fn eval_instances(&self) -> Vec<&DataInstance> {
        let fewshots: HashSet<&str> = self.fewshot_ids.iter().map(String::as_str).collect();
        self.instances
            .iter()
            .filter(|i| !fewshots.contains(i.id.as_str()))
            .collect()
    }

    pub fn instance(&self, id: &str) -> Option<&DataInstance> {
        self.instances.iter().find(|i| i.id == id)
    }
}

/// Load a task file: native format, or Super-NaturalInstructions with a
/// conversion recipe.
pub fn load_task(path: &Path, sets: &ConstantSets) -> Result<TaskSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let file: TaskFile = serde_json::from_str(&text).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: format!("schema violation: {e}"),
    })?;
    TaskSpec::from_file(file, sets)
}

// ---------------------------------------------------------------------------
// Super-NaturalInstructions conversion
// ---------------------------------------------------------------------------

/// Raw Super-NaturalInstructions task JSON (the subset we consume).
#[derive(Debug, Deserialize)]
pub struct SniTask {
    #[serde(rename = "Definition")]
    pub definition: Definition,
    #[serde(rename = "Instances")]
    pub instances: Vec<SniInstance>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Definition {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Deserialize)]
pub struct SniInstance {
    #[serde(default)]
    pub id: Option<String>,
    pub input: String,
    pub output: Vec<String>,
}

/// Per-task recipe for splitting the single SNI `input` string into fields.
/// The paper's tasks carry multi-field inputs baked into one string; there is
/// no universal split, so each task declares its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvertRecipe {
    pub task_id: String,
    /// Regexes applied in order to the raw input; each must have exactly one
    /// capture group, which becomes the next field. Empty means the whole
    /// input is a single field.
    #[serde(default)]
    pub field_patterns: Vec<String>,
    /// Fixed option list shared by all instances, if any.
    #[serde(default)]
    pub options: Vec<String>,
    /// Instance ids (or indices rendered as strings) frozen as few-shots.
    #[serde(default)]
    pub fewshot_ids: Vec<String>,
    pub original_format: LiteralNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_labels: Option<OptionLabels>,
}

/// Convert an SNI task + recipe into a native task file.
pub fn convert_sni(sni: &SniTask, recipe: &ConvertRecipe, field_count: usize) -> Result<TaskFile> {
    if field_count > 1 && recipe.field_patterns.is_empty() {
        return Err(Error::Config(format!(
            "task {}: format needs {field_count} fields but the recipe has no field_patterns",
            recipe.task_id
        )));
    }
    let patterns: Vec<regex::Regex> = recipe
        .field_patterns
        .iter()
        .map(|p| regex::Regex::new(p).map_err(|e| Error::Config(format!("bad regex {p}: {e}"))))
        .collect::<Result<_>>()?;
    let mut instances = Vec::new();
    for (idx, inst) in sni.instances.iter().enumerate() {
        let id = inst
            .id
            .clone()
            .unwrap_or_else(|| idx.to_string());
        let fields = if patterns.is_empty() {
            vec![inst.input.clone()]
        } else {
            patterns
                .iter()
                .map(|re| {
                    re.captures(&inst.input)
                        .and_then(|c| c.get(1))
                        .map(|m| m.as_str().to_string())
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "task {}: instance {id}: pattern {re} did not match",
                                recipe.task_id
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()?
        };
        let gold = inst
            .output
            .first()
            .cloned()
            .ok_or_else(|| Error::Config(format!("instance {id} has no output")))?;
        instances.push(DataInstance {
            id,
            fields,
            options: recipe.options.clone(),
            gold,
        });
    }
    let instruction = match &sni.definition {
        Definition::One(s) => s.clone(),
        Definition::Many(v) => v.join(" "),
    };
    Ok(TaskFile {
        task_id: recipe.task_id.clone(),
        instruction,
        instances,
        fewshot_ids: recipe.fewshot_ids.clone(),
        original_format: recipe.original_format.clone(),
        option_labels: recipe.option_labels.clone(),
    })
}

/// Number of distinct instance-field bindings the format expects; conversion
/// uses it to decide whether a recipe is mandatory.
pub fn field_arity(format: &FormatAst) -> usize {
    use crate::format::{Binding, FormatNode};
    let mut max: Option<usize> = None;
    let mut stack = vec![&format.root];
    while let Some(node) = stack.pop() {
        let mut see = |b: &Binding| {
            if let Binding::Field(i) = b {
                max = Some(max.map_or(*i, |m| m.max(*i)));
            }
        };
        match node {
            FormatNode::Text { binding } => see(binding),
            FormatNode::Field { binding, .. } => see(binding),
            FormatNode::Join { children, .. } => stack.extend(children.iter()),
            FormatNode::Enumeration { bindings, .. } => bindings.iter().for_each(see),
            FormatNode::Descriptor { .. } => {}
        }
    }
    max.map_or(0, |m| m + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Casing;
    use crate::format::Binding;

    fn minimal_literal() -> LiteralNode {
        LiteralNode::Field {
            descriptor: "Input".into(),
            separator: " -- ".into(),
            casing: Casing::Identity,
            binding: Binding::Field(0),
            group: None,
        }
    }

    fn minimal_task_json(n: usize, gold: &str, options: &[&str]) -> String {
        let instances: Vec<serde_json::Value> = (0..n)
            .map(|i| {
                serde_json::json!({
                    "id": i.to_string(),
                    "fields": ["text"],
                    "options": options,
                    "gold": gold,
                })
            })
            .collect();
        serde_json::json!({
            "task_id": "t",
            "instruction": "Do the thing.",
            "instances": instances,
            "original_format": serde_json::to_value(minimal_literal()).unwrap(),
        })
        .to_string()
    }

    #[test]
    fn loads_minimal_task() {
        let sets = ConstantSets::default();
        let file: TaskFile =
            serde_json::from_str(&minimal_task_json(2, "yes", &["yes", "no"])).unwrap();
        let task = TaskSpec::from_file(file, &sets).unwrap();
        assert_eq!(task.instances.len(), 2);
        assert_eq!(task.eval_instances().len(), 2);
    }

    #[test]
    fn gold_outside_options_is_a_load_error() {
        let sets = ConstantSets::default();
        let file: TaskFile =
            serde_json::from_str(&minimal_task_json(1, "maybe", &["yes", "no"])).unwrap();
        assert!(TaskSpec::from_file(file, &sets).is_err());
    }

    #[test]
    fn oversized_task_is_truncated() {
        let sets = ConstantSets::default();
        let file: TaskFile = serde_json::from_str(&minimal_task_json(1500, "yes", &[])).unwrap();
        let task = TaskSpec::from_file(file, &sets).unwrap();
        assert_eq!(task.instances.len(), MAX_INSTANCES);
    }

    #[test]
    fn sni_conversion_whole_input() {
        let sni = SniTask {
            definition: Definition::One("Classify.".into()),
            instances: vec![SniInstance {
                id: None,
                input: "some passage".into(),
                output: vec!["Yes".into()],
            }],
        };
        let recipe = ConvertRecipe {
            task_id: "task000".into(),
            field_patterns: vec![],
            options: vec!["Yes".into(), "No".into()],
            fewshot_ids: vec![],
            original_format: minimal_literal(),
            option_labels: None,
        };
        let file = convert_sni(&sni, &recipe, 1).unwrap();
        assert_eq!(file.instances[0].fields, vec!["some passage"]);
        assert_eq!(file.instances[0].gold, "Yes");
    }

    #[test]
    fn sni_multi_field_without_recipe_errors() {
        let sni = SniTask {
            definition: Definition::One("x".into()),
            instances: vec![],
        };
        let recipe = ConvertRecipe {
            task_id: "t".into(),
            field_patterns: vec![],
            options: vec![],
            fewshot_ids: vec![],
            original_format: minimal_literal(),
            option_labels: None,
        };
        assert!(convert_sni(&sni, &recipe, 2).is_err());
    }

    #[test]
    fn sni_regex_recipe_splits_fields() {
        let sni = SniTask {
            definition: Definition::One("x".into()),
            instances: vec![SniInstance {
                id: Some("a".into()),
                input: "Passage: hello world. Question: why?".into(),
                output: vec!["because".into()],
            }],
        };
        let recipe = ConvertRecipe {
            task_id: "t".into(),
            field_patterns: vec![
                r"Passage: (.*?) Question:".into(),
                r"Question: (.*)$".into(),
            ],
            options: vec![],
            fewshot_ids: vec![],
            original_format: minimal_literal(),
            option_labels: None,
        };
        let file = convert_sni(&sni, &recipe, 2).unwrap();
        assert_eq!(
            file.instances[0].fields,
            vec!["hello world.", "why?"]
        );
    }
}
