//! The prompt-format grammar: AST, rendering, equivalence, and the contextual
//! restrictions that keep sampled formats natural.
//!
//! A format is a tree of nodes. Constants (separators, spaces, casing
//! functions, item renderers) are not stored inline: each constant position
//! references an *equality group*, and every group holds a pool name plus the
//! index of its current value. Slots that share a group change jointly, which
//! is what makes two occurrences of the same separator stay equal across the
//! sampled format space.

use serde::{Deserialize, Serialize};

use crate::constants::{Casing, ConstantSets, ItemNumbering, ItemWrapper, Pool};
use crate::error::{Error, Result};
use crate::task::DataInstance;

/// Index into [`FormatAst::groups`].
pub type GroupId = usize;

/// What a text placeholder resolves to at render time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// i-th field of the data instance.
    Field(usize),
    /// i-th option of the data instance.
    OptionValue(usize),
    /// The answer slot: gold for exemplars, empty for the query.
    Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormatNode {
    /// Bare placeholder.
    Text { binding: Binding },
    /// Descriptor with no placeholder, e.g. an `OPTIONS:` header.
    Descriptor {
        descriptor: String,
        separator: GroupId,
        casing: GroupId,
    },
    /// Descriptor + separator + placeholder.
    Field {
        descriptor: String,
        separator: GroupId,
        casing: GroupId,
        binding: Binding,
    },
    /// Children joined by a space constant.
    Join {
        children: Vec<FormatNode>,
        space: GroupId,
    },
    /// Enumerated items, each `casing(descriptor) + separator2 + wrapped label`,
    /// joined by the space constant.
    Enumeration {
        descriptor: String,
        item_indices: Vec<usize>,
        separator1: GroupId,
        separator2: GroupId,
        space: GroupId,
        wrapper: GroupId,
        numbering: GroupId,
        casing: GroupId,
        bindings: Vec<Binding>,
    },
}

/// One equality group: a pool and the index of the group's current value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub pool: Pool,
    pub value: usize,
}

/// A complete format: node tree plus equality-group table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatAst {
    pub root: FormatNode,
    pub groups: Vec<Group>,
}

/// A restriction violation. Violations are data, not errors: validation
/// returns the full list so callers can report or filter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// A join whose space has no newline contains a descendant separator with one.
    NewlineSeparatorUnderFlatJoin { separator: String },
    /// An enumeration separator contains a newline but its space does not.
    EnumerationNewlineSpace { descriptor: String },
    /// A field separator is empty.
    EmptyFieldSeparator { descriptor: String },
    /// An empty join space where the leading children are not descriptor-only.
    EmptyJoinSpace,
}

impl FormatAst {
    /// Structural checks: group references in range and pool-consistent,
    /// joins with >= 2 children, enumerations with >= 2 distinct items.
    pub fn validate_structure(&self, sets: &ConstantSets) -> Result<()> {
        let check_group = |id: GroupId, pool: Pool| -> Result<()> {
            let group = self
                .groups
                .get(id)
                .ok_or_else(|| Error::Structure(format!("group {id} out of range")))?;
            if group.pool != pool {
                return Err(Error::Structure(format!(
                    "group {id} has pool {:?}, slot expects {pool:?}",
                    group.pool
                )));
            }
            if group.value >= sets.pool_len(pool) {
                return Err(Error::Structure(format!(
                    "group {id} value {} out of range for pool {pool:?}",
                    group.value
                )));
            }
            Ok(())
        };
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                FormatNode::Text { .. } => {}
                FormatNode::Descriptor {
                    separator, casing, ..
                } => {
                    check_group(*separator, Pool::Separators1)?;
                    check_group(*casing, Pool::Casings)?;
                }
                FormatNode::Field {
                    separator, casing, ..
                } => {
                    check_group(*separator, Pool::Separators1)?;
                    check_group(*casing, Pool::Casings)?;
                }
                FormatNode::Join { children, space } => {
                    if children.len() < 2 {
                        return Err(Error::Structure("join needs at least 2 children".into()));
                    }
                    check_group(*space, Pool::Spaces)?;
                    stack.extend(children.iter());
                }
                FormatNode::Enumeration {
                    item_indices,
                    separator1,
                    separator2,
                    space,
                    wrapper,
                    numbering,
                    casing,
                    bindings,
                    ..
                } => {
                    if item_indices.len() < 2 {
                        return Err(Error::Structure(
                            "enumeration needs at least 2 items".into(),
                        ));
                    }
                    for (i, j) in item_indices.iter().enumerate() {
                        if item_indices[..i].contains(j) {
                            return Err(Error::Structure(format!(
                                "enumeration item index {j} repeated"
                            )));
                        }
                    }
                    if bindings.len() != item_indices.len() {
                        return Err(Error::Structure(
                            "enumeration bindings must match item count".into(),
                        ));
                    }
                    check_group(*separator1, Pool::Separators1)?;
                    check_group(*separator2, Pool::Separators2)?;
                    check_group(*space, Pool::Spaces)?;
                    check_group(*wrapper, Pool::ItemWrappers)?;
                    check_group(*numbering, Pool::ItemNumberings)?;
                    check_group(*casing, Pool::Casings)?;
                }
            }
        }
        // every group must be referenced by at least one pool-matching slot
        Ok(())
    }

    fn sep1(&self, sets: &ConstantSets, id: GroupId) -> String {
        sets.separators1[self.groups[id].value].clone()
    }
    fn sep2(&self, sets: &ConstantSets, id: GroupId) -> String {
        sets.separators2[self.groups[id].value].clone()
    }
    fn space(&self, sets: &ConstantSets, id: GroupId) -> String {
        sets.spaces[self.groups[id].value].clone()
    }
    fn casing(&self, sets: &ConstantSets, id: GroupId) -> Casing {
        sets.casings[self.groups[id].value]
    }
    fn wrapper(&self, sets: &ConstantSets, id: GroupId) -> ItemWrapper {
        sets.item_wrappers[self.groups[id].value]
    }
    fn numbering(&self, sets: &ConstantSets, id: GroupId) -> ItemNumbering {
        sets.item_numberings[self.groups[id].value]
    }

    /// The first enumeration node in depth-first order, if any.
    pub fn first_enumeration(&self) -> Option<&FormatNode> {
        fn walk(node: &FormatNode) -> Option<&FormatNode> {
            match node {
                FormatNode::Enumeration { .. } => Some(node),
                FormatNode::Join { children, .. } => children.iter().find_map(walk),
                _ => None,
            }
        }
        walk(&self.root)
    }

    /// Render the bare label (numbering only, no wrapper) for the item at
    /// position `pos` of the first enumeration. Used for instruction rewriting
    /// and for labeled gold answers.
    pub fn item_label(&self, sets: &ConstantSets, pos: usize) -> Option<String> {
        match self.first_enumeration()? {
            FormatNode::Enumeration {
                item_indices,
                numbering,
                ..
            } => item_indices
                .get(pos)
                .map(|&j| self.numbering(sets, *numbering).apply(j)),
            _ => unreachable!(),
        }
    }

    /// Group value assignment, used as a canonical signature for duplicate
    /// detection: two formats over the same tree are equal iff their
    /// assignments are equal.
    pub fn assignment(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.value).collect()
    }
}

/// Render a format against a data instance. `answer` fills the answer slot:
/// the gold string for exemplars, empty for the query to be completed.
pub fn render_format(
    format: &FormatAst,
    sets: &ConstantSets,
    instance: &DataInstance,
    answer: &str,
) -> Result<String> {
    render_node(format, sets, &format.root, instance, answer)
}

fn resolve<'a>(binding: Binding, instance: &'a DataInstance, answer: &'a str) -> Result<&'a str> {
    match binding {
        Binding::Field(i) => instance
            .fields
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| Error::Binding(format!("field {i}"))),
        Binding::OptionValue(i) => instance
            .options
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| Error::Binding(format!("option {i}"))),
        Binding::Answer => Ok(answer),
    }
}

fn render_node(
    format: &FormatAst,
    sets: &ConstantSets,
    node: &FormatNode,
    instance: &DataInstance,
    answer: &str,
) -> Result<String> {
    match node {
        FormatNode::Text { binding } => Ok(resolve(*binding, instance, answer)?.to_string()),
        FormatNode::Descriptor {
            descriptor,
            separator,
            casing,
        } => Ok(format!(
            "{}{}",
            format.casing(sets, *casing).apply(descriptor),
            format.sep1(sets, *separator)
        )),
        FormatNode::Field {
            descriptor,
            separator,
            casing,
            binding,
        } => Ok(format!(
            "{}{}{}",
            format.casing(sets, *casing).apply(descriptor),
            format.sep1(sets, *separator),
            resolve(*binding, instance, answer)?
        )),
        FormatNode::Join { children, space } => {
            let parts: Result<Vec<_>> = children
                .iter()
                .map(|c| render_node(format, sets, c, instance, answer))
                .collect();
            Ok(parts?.join(&format.space(sets, *space)))
        }
        FormatNode::Enumeration {
            descriptor,
            item_indices,
            separator1,
            separator2,
            space,
            wrapper,
            numbering,
            casing,
            bindings,
        } => {
            let cased = format.casing(sets, *casing).apply(descriptor);
            let s1 = format.sep1(sets, *separator1);
            let s2 = format.sep2(sets, *separator2);
            let wrap = format.wrapper(sets, *wrapper);
            let num = format.numbering(sets, *numbering);
            let items: Result<Vec<_>> = item_indices
                .iter()
                .zip(bindings)
                .map(|(&j, b)| {
                    let label = wrap.apply(&num.apply(j));
                    Ok(format!(
                        "{cased}{s2}{label}{s1}{}",
                        resolve(*b, instance, answer)?
                    ))
                })
                .collect();
            Ok(items?.join(&format.space(sets, *space)))
        }
    }
}

/// Structural equivalence: same rule at every node, equal descriptors where
/// present, equal item-index lists. Constant choices are ignored.
pub fn formats_equivalent(p1: &FormatAst, p2: &FormatAst) -> bool {
    nodes_equivalent(&p1.root, &p2.root)
}

fn nodes_equivalent(a: &FormatNode, b: &FormatNode) -> bool {
    match (a, b) {
        (FormatNode::Text { .. }, FormatNode::Text { .. }) => true,
        (
            FormatNode::Descriptor { descriptor: d1, .. },
            FormatNode::Descriptor { descriptor: d2, .. },
        ) => d1 == d2,
        (
            FormatNode::Field { descriptor: d1, .. },
            FormatNode::Field { descriptor: d2, .. },
        ) => d1 == d2,
        (
            FormatNode::Join { children: c1, .. },
            FormatNode::Join { children: c2, .. },
        ) => c1.len() == c2.len() && c1.iter().zip(c2).all(|(x, y)| nodes_equivalent(x, y)),
        (
            FormatNode::Enumeration {
                descriptor: d1,
                item_indices: j1,
                ..
            },
            FormatNode::Enumeration {
                descriptor: d2,
                item_indices: j2,
                ..
            },
        ) => d1 == d2 && j1 == j2,
        _ => false,
    }
}

/// Check the contextual restrictions. An empty list means the format is valid.
pub fn validate_restrictions(format: &FormatAst, sets: &ConstantSets) -> Vec<Violation> {
    let mut violations = Vec::new();
    check_node(format, sets, &format.root, &mut violations);
    violations
}

fn check_node(
    format: &FormatAst,
    sets: &ConstantSets,
    node: &FormatNode,
    out: &mut Vec<Violation>,
) {
    match node {
        FormatNode::Text { .. } | FormatNode::Descriptor { .. } => {}
        FormatNode::Field {
            descriptor,
            separator,
            ..
        } => {
            // rule 3: a field must have some separation between descriptor and text
            if format.sep1(sets, *separator).is_empty() {
                out.push(Violation::EmptyFieldSeparator {
                    descriptor: descriptor.clone(),
                });
            }
        }
        FormatNode::Join { children, space } => {
            let space_value = format.space(sets, *space);
            if !space_value.contains('\n') {
                // rule 1: no newline separators under a join whose space has none.
                // Descriptor-only children have an empty text, which waives the rule.
                for child in children {
                    for sep in newline_separators(format, sets, child) {
                        out.push(Violation::NewlineSeparatorUnderFlatJoin { separator: sep });
                    }
                }
            }
            if space_value.is_empty() {
                // rule 4: empty join space only when the leading children carry no text
                let head_ok = children[..children.len() - 1]
                    .iter()
                    .all(|c| matches!(c, FormatNode::Descriptor { .. }));
                if !head_ok {
                    out.push(Violation::EmptyJoinSpace);
                }
            }
            for child in children {
                check_node(format, sets, child, out);
            }
        }
        FormatNode::Enumeration {
            descriptor,
            separator1,
            separator2,
            space,
            ..
        } => {
            // rule 2: a newline in either separator requires a newline in the space
            let s1 = format.sep1(sets, *separator1);
            let s2 = format.sep2(sets, *separator2);
            if (s1.contains('\n') || s2.contains('\n'))
                && !format.space(sets, *space).contains('\n')
            {
                out.push(Violation::EnumerationNewlineSpace {
                    descriptor: descriptor.clone(),
                });
            }
        }
    }
}

/// Separators below `node` (inclusive) that contain a newline. Separators of
/// descriptor-only nodes are skipped: their placeholder text is empty, so the
/// newline restriction is waived for them.
fn newline_separators(format: &FormatAst, sets: &ConstantSets, node: &FormatNode) -> Vec<String> {
    let mut found = Vec::new();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        match n {
            FormatNode::Text { .. } | FormatNode::Descriptor { .. } => {}
            FormatNode::Field { separator, .. } => {
                let s = format.sep1(sets, *separator);
                if s.contains('\n') {
                    found.push(s);
                }
            }
            FormatNode::Join { children, .. } => stack.extend(children.iter()),
            FormatNode::Enumeration {
                separator1,
                separator2,
                ..
            } => {
                for s in [format.sep1(sets, *separator1), format.sep2(sets, *separator2)] {
                    if s.contains('\n') {
                        found.push(s);
                    }
                }
            }
        }
    }
    found
}

// ---------------------------------------------------------------------------
// Literal format descriptions (inline constants) and compilation
// ---------------------------------------------------------------------------

/// A format described with inline constant strings, the shape users write in
/// task files. Compiling against a [`ConstantSets`] resolves every constant to
/// a pool index and computes equality groups: constants of the same pool with
/// equal values (or an explicit shared `group` tag) change jointly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiteralNode {
    Text {
        binding: Binding,
    },
    Descriptor {
        descriptor: String,
        separator: String,
        #[serde(default = "default_casing")]
        casing: Casing,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<String>,
    },
    Field {
        descriptor: String,
        separator: String,
        #[serde(default = "default_casing")]
        casing: Casing,
        binding: Binding,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<String>,
    },
    Join {
        children: Vec<LiteralNode>,
        space: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<String>,
    },
    Enumeration {
        descriptor: String,
        item_indices: Vec<usize>,
        separator1: String,
        separator2: String,
        space: String,
        wrapper: ItemWrapper,
        numbering: ItemNumbering,
        #[serde(default = "default_casing")]
        casing: Casing,
        bindings: Vec<Binding>,
    },
}

fn default_casing() -> Casing {
    Casing::Identity
}

struct Compiler<'a> {
    sets: &'a ConstantSets,
    groups: Vec<Group>,
    // key: (pool, value index, explicit tag) -> group id
    index: std::collections::HashMap<(Pool, usize, Option<String>), GroupId>,
}

impl<'a> Compiler<'a> {
    fn group_for(
        &mut self,
        pool: Pool,
        value_index: usize,
        tag: Option<&String>,
    ) -> GroupId {
        let key = (pool, value_index, tag.cloned());
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.groups.len();
        self.groups.push(Group {
            pool,
            value: value_index,
        });
        self.index.insert(key, id);
        id
    }

    fn lookup<T: PartialEq + std::fmt::Debug>(
        pool: Pool,
        values: &[T],
        wanted: &T,
    ) -> Result<usize> {
        values.iter().position(|v| v == wanted).ok_or_else(|| {
            Error::Config(format!(
                "constant {wanted:?} is not in pool {pool:?}; extend the constant sets config"
            ))
        })
    }

    fn compile(&mut self, node: &LiteralNode) -> Result<FormatNode> {
        Ok(match node {
            LiteralNode::Text { binding } => FormatNode::Text { binding: *binding },
            LiteralNode::Descriptor {
                descriptor,
                separator,
                casing,
                group,
            } => {
                let sep = Self::lookup(Pool::Separators1, &self.sets.separators1, separator)?;
                let cas = Self::lookup(Pool::Casings, &self.sets.casings, casing)?;
                FormatNode::Descriptor {
                    descriptor: descriptor.clone(),
                    separator: self.group_for(Pool::Separators1, sep, group.as_ref()),
                    casing: self.group_for(Pool::Casings, cas, None),
                }
            }
            LiteralNode::Field {
                descriptor,
                separator,
                casing,
                binding,
                group,
            } => {
                let sep = Self::lookup(Pool::Separators1, &self.sets.separators1, separator)?;
                let cas = Self::lookup(Pool::Casings, &self.sets.casings, casing)?;
                FormatNode::Field {
                    descriptor: descriptor.clone(),
                    separator: self.group_for(Pool::Separators1, sep, group.as_ref()),
                    casing: self.group_for(Pool::Casings, cas, None),
                    binding: *binding,
                }
            }
            LiteralNode::Join {
                children,
                space,
                group,
            } => {
                let sp = Self::lookup(Pool::Spaces, &self.sets.spaces, space)?;
                let space_id = self.group_for(Pool::Spaces, sp, group.as_ref());
                let kids: Result<Vec<_>> = children.iter().map(|c| self.compile(c)).collect();
                FormatNode::Join {
                    children: kids?,
                    space: space_id,
                }
            }
            LiteralNode::Enumeration {
                descriptor,
                item_indices,
                separator1,
                separator2,
                space,
                wrapper,
                numbering,
                casing,
                bindings,
            } => {
                let s1 = Self::lookup(Pool::Separators1, &self.sets.separators1, separator1)?;
                let s2 = Self::lookup(Pool::Separators2, &self.sets.separators2, separator2)?;
                let sp = Self::lookup(Pool::Spaces, &self.sets.spaces, space)?;
                let wr = Self::lookup(Pool::ItemWrappers, &self.sets.item_wrappers, wrapper)?;
                let nu =
                    Self::lookup(Pool::ItemNumberings, &self.sets.item_numberings, numbering)?;
                let cas = Self::lookup(Pool::Casings, &self.sets.casings, casing)?;
                FormatNode::Enumeration {
                    descriptor: descriptor.clone(),
                    item_indices: item_indices.clone(),
                    separator1: self.group_for(Pool::Separators1, s1, None),
                    separator2: self.group_for(Pool::Separators2, s2, None),
                    space: self.group_for(Pool::Spaces, sp, None),
                    wrapper: self.group_for(Pool::ItemWrappers, wr, None),
                    numbering: self.group_for(Pool::ItemNumberings, nu, None),
                    casing: self.group_for(Pool::Casings, cas, None),
                    bindings: bindings.clone(),
                }
            }
        })
    }
}

/// Compile a literal format description into a [`FormatAst`], resolving
/// constants to pool indices and computing equality groups.
pub fn compile_literal(literal: &LiteralNode, sets: &ConstantSets) -> Result<FormatAst> {
    sets.validate()?;
    let mut compiler = Compiler {
        sets,
        groups: Vec::new(),
        index: std::collections::HashMap::new(),
    };
    let root = compiler.compile(literal)?;
    let ast = FormatAst {
        root,
        groups: compiler.groups,
    };
    ast.validate_structure(sets)?;
    Ok(ast)
}
