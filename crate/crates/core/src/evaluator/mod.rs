//! Evaluation backends: a deterministic synthetic oracle for tests and bandit
//! benchmarks, and a remote completion-API client.

pub mod remote;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::format::FormatAst;
use crate::task::DataInstance;

/// Result of evaluating one (format, instance) pair.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub correct: bool,
    /// Whether the response matched any valid option at all.
    pub valid: bool,
    pub raw: Option<String>,
}

/// A source of per-data-point Bernoulli outcomes. Implementations count every
/// evaluation so the search can reconcile its budget ledger.
pub trait PointEvaluator: Sync {
    fn evaluate(
        &self,
        format_id: &str,
        format: &FormatAst,
        instance: &DataInstance,
    ) -> Result<Outcome>;

    /// Total data-point evaluations performed so far.
    fn evaluations(&self) -> u64;
}

// ---------------------------------------------------------------------------
// Stable hashing: all synthetic randomness is keyed by explicit strings, not
// platform RNG, so results are identical across runs and platforms.
// ---------------------------------------------------------------------------

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stable hash of (seed, parts) folded through splitmix64.
pub fn stable_key(seed: u64, parts: &[&str]) -> u64 {
    let mut h = splitmix64(seed);
    for p in parts {
        h = splitmix64(h ^ fnv1a64(p.as_bytes()));
    }
    h
}

/// Uniform draw in [0, 1) from a stable key.
fn unit_from_key(key: u64) -> f64 {
    (key >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic Bernoulli(true_acc) keyed by (seed, format id, instance id).
pub fn synthetic_oracle_draw(format_id: &str, instance_id: &str, true_acc: f64, seed: u64) -> u8 {
    debug_assert!((0.0..=1.0).contains(&true_acc));
    let u = unit_from_key(stable_key(seed, &[format_id, instance_id]));
    u8::from(u < true_acc)
}

/// Where the synthetic surface's per-format true accuracies come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticSurface {
    /// Explicit per-format accuracies.
    Table(BTreeMap<String, f64>),
    /// Accuracies drawn i.i.d. from Beta(alpha, beta), keyed by format id.
    Beta { alpha: f64, beta: f64 },
}

/// Deterministic oracle: each format has a hidden true accuracy, and each
/// (format, instance) evaluation is a fixed Bernoulli draw.
pub struct SyntheticEvaluator {
    seed: u64,
    surface: SyntheticSurface,
    counter: AtomicU64,
}

impl SyntheticEvaluator {
    pub fn new(seed: u64, surface: SyntheticSurface) -> Self {
        SyntheticEvaluator {
            seed,
            surface,
            counter: AtomicU64::new(0),
        }
    }

    /// The hidden true accuracy of a format.
    pub fn true_accuracy(&self, format_id: &str) -> f64 {
        match &self.surface {
            SyntheticSurface::Table(table) => table.get(format_id).copied().unwrap_or(0.5),
            SyntheticSurface::Beta { alpha, beta } => {
                let key = stable_key(self.seed, &["surface", format_id]);
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                let dist = rand_distr::Beta::new(*alpha, *beta).expect("valid beta params");
                rand::Rng::sample(&mut rng, dist)
            }
        }
    }

    /// Empirical full-data accuracy of a format over the given instances.
    pub fn full_data_accuracy(&self, format_id: &str, instances: &[&DataInstance]) -> f64 {
        let acc = self.true_accuracy(format_id);
        let hits: u64 = instances
            .iter()
            .map(|i| synthetic_oracle_draw(format_id, &i.id, acc, self.seed) as u64)
            .sum();
        hits as f64 / instances.len() as f64
    }
}

impl PointEvaluator for SyntheticEvaluator {
    fn evaluate(
        &self,
        format_id: &str,
        _format: &FormatAst,
        instance: &DataInstance,
    ) -> Result<Outcome> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let acc = self.true_accuracy(format_id);
        let correct = synthetic_oracle_draw(format_id, &instance.id, acc, self.seed) == 1;
        Ok(Outcome {
            correct,
            valid: true,
            raw: None,
        })
    }

    fn evaluations(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }
}

/// Wraps any evaluator and keeps an [`crate::metrics::EvalRecord`] per call.
/// Record order depends on thread scheduling; sort before persisting.
pub struct RecordingEvaluator<E> {
    pub inner: E,
    pub metric: crate::metrics::Metric,
    records: std::sync::Mutex<Vec<crate::metrics::EvalRecord>>,
}

impl<E: PointEvaluator> RecordingEvaluator<E> {
    pub fn new(inner: E, metric: crate::metrics::Metric) -> Self {
        RecordingEvaluator {
            inner,
            metric,
            records: std::sync::Mutex::new(Vec::new()),
        }
    }

    pub fn take_records(&self) -> Vec<crate::metrics::EvalRecord> {
        std::mem::take(&mut self.records.lock().unwrap())
    }
}

impl<E: PointEvaluator> PointEvaluator for RecordingEvaluator<E> {
    fn evaluate(
        &self,
        format_id: &str,
        format: &FormatAst,
        instance: &DataInstance,
    ) -> Result<Outcome> {
        let outcome = self.inner.evaluate(format_id, format, instance)?;
        self.records.lock().unwrap().push(crate::metrics::EvalRecord {
            format_id: format_id.to_string(),
            instance_id: instance.id.clone(),
            metric: self.metric,
            outcome: u8::from(outcome.correct),
            valid: u8::from(outcome.valid),
            raw: outcome.raw.clone(),
        });
        Ok(outcome)
    }

    fn evaluations(&self) -> u64 {
        self.inner.evaluations()
    }
}
