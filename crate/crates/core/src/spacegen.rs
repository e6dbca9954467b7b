//! Sampling from the space of equivalent formats, and atomic neighbors.
//!
//! The format space for a fixed tree is the set of equality-group value
//! assignments that pass the contextual restrictions. Sampling draws each
//! group's value uniformly from its pool and rejects restriction violations
//! and duplicates.

use rand::Rng;
use std::collections::HashSet;

use crate::constants::ConstantSets;
use crate::error::{Error, Result};
use crate::format::{validate_restrictions, FormatAst};

/// Cap on rejection-sampling attempts per requested format.
pub const SAMPLE_ATTEMPT_CAP: u64 = 10_000;

/// Cap on brute-force enumeration when reporting the exact space size.
const ENUMERATION_CAP: u64 = 1_000_000;

/// Sampling statistics: attempts made and how many draws were rejected.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleStats {
    pub attempts: u64,
    pub restriction_rejections: u64,
    pub duplicate_rejections: u64,
}

impl SampleStats {
    pub fn rejection_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            (self.restriction_rejections + self.duplicate_rejections) as f64
                / self.attempts as f64
        }
    }
}

/// Draw `count` distinct restriction-valid formats equivalent to `format`.
///
/// Group values are drawn uniformly from their pools; violating or duplicate
/// assignments are rejected. The input format itself may appear among the
/// samples; pass its assignment in `exclude` to prevent that.
pub fn sample_equivalent<R: Rng>(
    format: &FormatAst,
    sets: &ConstantSets,
    rng: &mut R,
    count: usize,
) -> Result<Vec<FormatAst>> {
    sample_equivalent_with_stats(format, sets, rng, count, &[]).map(|(v, _)| v)
}

pub fn sample_equivalent_with_stats<R: Rng>(
    format: &FormatAst,
    sets: &ConstantSets,
    rng: &mut R,
    count: usize,
    exclude: &[Vec<usize>],
) -> Result<(Vec<FormatAst>, SampleStats)> {
    if !validate_restrictions(format, sets).is_empty() {
        return Err(Error::Config(
            "source format violates the contextual restrictions".into(),
        ));
    }
    let mut seen: HashSet<Vec<usize>> = exclude.iter().cloned().collect();
    let mut out = Vec::with_capacity(count);
    let mut stats = SampleStats::default();
    while out.len() < count {
        let mut attempts = 0;
        loop {
            if attempts >= SAMPLE_ATTEMPT_CAP {
                return Err(Error::Exhausted {
                    attempts: stats.attempts,
                    space_size: space_size(format, sets),
                });
            }
            attempts += 1;
            stats.attempts += 1;
            let mut candidate = format.clone();
            for group in &mut candidate.groups {
                group.value = rng.random_range(0..sets.pool_len(group.pool));
            }
            if !validate_restrictions(&candidate, sets).is_empty() {
                stats.restriction_rejections += 1;
                continue;
            }
            let signature = candidate.assignment();
            if !seen.insert(signature) {
                stats.duplicate_rejections += 1;
                continue;
            }
            out.push(candidate);
            break;
        }
    }
    Ok((out, stats))
}

/// Exact number of restriction-valid assignments, when the raw product of
/// pool sizes is small enough to enumerate.
pub fn space_size(format: &FormatAst, sets: &ConstantSets) -> Option<u64> {
    let radices: Vec<u64> = format
        .groups
        .iter()
        .map(|g| sets.pool_len(g.pool) as u64)
        .collect();
    let product: u64 = radices.iter().try_fold(1u64, |acc, &r| {
        acc.checked_mul(r).filter(|&p| p <= ENUMERATION_CAP)
    })?;
    let _ = product;
    let mut counter = vec![0usize; radices.len()];
    let mut candidate = format.clone();
    let mut valid = 0u64;
    loop {
        for (group, &v) in candidate.groups.iter_mut().zip(&counter) {
            group.value = v;
        }
        if validate_restrictions(&candidate, sets).is_empty() {
            valid += 1;
        }
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == counter.len() {
                return Some(valid);
            }
            counter[i] += 1;
            if (counter[i] as u64) < radices[i] {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
}

/// All restriction-valid formats obtained by changing exactly one equality
/// group's value. Ordered by group id, then pool value index.
pub fn atomic_neighbors(format: &FormatAst, sets: &ConstantSets) -> Vec<FormatAst> {
    let mut out = Vec::new();
    for (gid, group) in format.groups.iter().enumerate() {
        for value in 0..sets.pool_len(group.pool) {
            if value == group.value {
                continue;
            }
            let mut neighbor = format.clone();
            neighbor.groups[gid].value = value;
            if validate_restrictions(&neighbor, sets).is_empty() {
                out.push(neighbor);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Casing;
    use crate::format::{compile_literal, formats_equivalent, Binding, LiteralNode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_field() -> (FormatAst, ConstantSets) {
        let mut sets = ConstantSets::default();
        sets.separators1.push(": ".into());
        let lit = LiteralNode::Join {
            children: vec![
                LiteralNode::Field {
                    descriptor: "Comment".into(),
                    separator: ": ".into(),
                    casing: Casing::Identity,
                    binding: Binding::Field(0),
                    group: None,
                },
                LiteralNode::Field {
                    descriptor: "Answer".into(),
                    separator: ": ".into(),
                    casing: Casing::Identity,
                    binding: Binding::Answer,
                    group: None,
                },
            ],
            space: " ".into(),
            group: None,
        };
        (compile_literal(&lit, &sets).unwrap(), sets)
    }

    #[test]
    fn sampling_is_deterministic_under_fixed_seed() {
        let (ast, sets) = two_field();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let a = sample_equivalent(&ast, &sets, &mut r1, 1).unwrap();
        let b = sample_equivalent(&ast, &sets, &mut r2, 1).unwrap();
        assert_eq!(a, b);
        assert!(formats_equivalent(&a[0], &ast));
    }

    #[test]
    fn samples_keep_grouped_separators_in_lockstep() {
        let (ast, sets) = two_field();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sample in sample_equivalent(&ast, &sets, &mut rng, 50).unwrap() {
            // the two field separators share one group, so they render equal
            let seps: Vec<usize> = match &sample.root {
                crate::format::FormatNode::Join { children, .. } => children
                    .iter()
                    .map(|c| match c {
                        crate::format::FormatNode::Field { separator, .. } => {
                            sample.groups[*separator].value
                        }
                        _ => panic!(),
                    })
                    .collect(),
                _ => panic!(),
            };
            assert_eq!(seps[0], seps[1]);
        }
    }

    #[test]
    fn oversized_request_reports_space_size() {
        let (ast, sets) = two_field();
        // groups: shared separator (15), casing (4), space (15); restrictions
        // filter newline separators under flat spaces and the empty separator
        let size = space_size(&ast, &sets).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err =
            sample_equivalent(&ast, &sets, &mut rng, size as usize + 1).unwrap_err();
        match err {
            Error::Exhausted { space_size, .. } => assert_eq!(space_size, Some(size)),
            other => panic!("unexpected error {other}"),
        }
        // requesting exactly the space size succeeds
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let all = sample_equivalent(&ast, &sets, &mut rng, size as usize).unwrap();
        assert_eq!(all.len(), size as usize);
    }

    #[test]
    fn brute_force_space_size_matches_filtering() {
        let (ast, sets) = two_field();
        // independent count: one shared separator group, one casing group,
        // one space group. Valid iff separator non-empty, no newline in the
        // separator unless the space has one, and the join space is non-empty
        // (its children are fields, not bare descriptors).
        let mut expected = 0u64;
        for sep in &sets.separators1 {
            if sep.is_empty() {
                continue;
            }
            for space in &sets.spaces {
                if space.is_empty() {
                    continue;
                }
                if sep.contains('\n') && !space.contains('\n') {
                    continue;
                }
                expected += sets.casings.len() as u64;
            }
        }
        assert_eq!(space_size(&ast, &sets), Some(expected));
    }

    #[test]
    fn neighbors_differ_in_exactly_one_group_and_undo_exists() {
        let (ast, sets) = two_field();
        let neighbors = atomic_neighbors(&ast, &sets);
        assert!(!neighbors.is_empty());
        let bound: usize = ast
            .groups
            .iter()
            .map(|g| sets.pool_len(g.pool) - 1)
            .sum();
        assert!(neighbors.len() <= bound);
        let original = ast.assignment();
        for n in &neighbors {
            let diff = n
                .assignment()
                .iter()
                .zip(&original)
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(diff, 1);
            // the original is reachable back from every neighbor
            assert!(atomic_neighbors(n, &sets)
                .iter()
                .any(|m| m.assignment() == original));
        }
    }

    #[test]
    fn casing_change_is_an_atomic_neighbor() {
        let mut sets = ConstantSets::default();
        sets.separators1.push(": ".into());
        let lit = LiteralNode::Join {
            children: vec![
                LiteralNode::Field {
                    descriptor: "COMMENT".into(),
                    separator: ": ".into(),
                    casing: Casing::Identity,
                    binding: Binding::Field(0),
                    group: None,
                },
                LiteralNode::Field {
                    descriptor: "ANSWER".into(),
                    separator: ": ".into(),
                    casing: Casing::Identity,
                    binding: Binding::Answer,
                    group: None,
                },
            ],
            space: " ".into(),
            group: None,
        };
        let ast = compile_literal(&lit, &sets).unwrap();
        let inst = crate::task::DataInstance {
            id: "0".into(),
            fields: vec!["x".into()],
            options: vec![],
            gold: "y".into(),
        };
        let rendered: Vec<String> = atomic_neighbors(&ast, &sets)
            .iter()
            .map(|n| crate::format::render_format(n, &sets, &inst, "y").unwrap())
            .collect();
        assert!(rendered.contains(&"comment: x answer: y".to_string()));
    }
}
