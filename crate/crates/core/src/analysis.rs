//! Statistics over per-format accuracies: spread, box/whisker dissimilarity
//! between constant-value groups, triple monotonicity, cross-model flips,
//! exact McNemar, spread gain under larger samples, and atomic-change impact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::{EvalRecord, Metric};

/// One aggregated accuracy measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub format_id: String,
    pub model_id: String,
    pub n_shots: usize,
    pub metric: Metric,
    pub accuracy: f64,
    pub count: u64,
}

/// Aggregate raw evaluation records into per-format accuracy rows.
pub fn accuracy_table(records: &[EvalRecord], model_id: &str, n_shots: usize) -> Vec<AccuracyRow> {
    let mut grouped: BTreeMap<(String, Metric), (u64, u64)> = BTreeMap::new();
    for r in records {
        let entry = grouped.entry((r.format_id.clone(), r.metric)).or_default();
        entry.0 += u64::from(r.outcome);
        entry.1 += 1;
    }
    grouped
        .into_iter()
        .map(|((format_id, metric), (hits, count))| AccuracyRow {
            format_id,
            model_id: model_id.to_string(),
            n_shots,
            metric,
            accuracy: hits as f64 / count as f64,
            count,
        })
        .collect()
}

/// max − min.
pub fn spread(accs: &[f64]) -> Result<f64> {
    if accs.is_empty() {
        return Err(Error::EmptyInput("spread".into()));
    }
    let max = accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = accs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Quantile by linear interpolation between order statistics:
/// position p·(n−1) into the sorted sample.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Tukey box statistics with whiskers pulled inward to the most extreme data
/// point inside the 1.5·IQR fences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
}

pub fn box_stats(samples: &[f64]) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("box_stats".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_lo = sorted
        .iter()
        .cloned()
        .find(|&x| x >= lo_fence)
        .unwrap_or(sorted[0]);
    let whisker_hi = sorted
        .iter()
        .rev()
        .cloned()
        .find(|&x| x <= hi_fence)
        .unwrap_or(sorted[sorted.len() - 1]);
    Ok(BoxStats {
        q1,
        median,
        q3,
        whisker_lo,
        whisker_hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dissimilarity {
    Neither,
    Weak,
    /// Strong implies weak (whisker intervals contain the boxes).
    Strong,
}

fn disjoint(lo_a: f64, hi_a: f64, lo_b: f64, hi_b: f64) -> bool {
    hi_a < lo_b || hi_b < lo_a
}

/// Classify two groups by disjointness of their boxes / whisker intervals.
pub fn classify_pair(a: &BoxStats, b: &BoxStats) -> Dissimilarity {
    let weak = disjoint(a.q1, a.q3, b.q1, b.q3);
    let strong = disjoint(a.whisker_lo, a.whisker_hi, b.whisker_lo, b.whisker_hi);
    if strong {
        Dissimilarity::Strong
    } else if weak {
        Dissimilarity::Weak
    } else {
        Dissimilarity::Neither
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairVerdict {
    pub value_a: String,
    pub value_b: String,
    pub verdict: Dissimilarity,
}

/// Pairwise dissimilarity across the groups of one constant dimension.
/// Groups smaller than `min_group` are excluded (with a warning).
pub fn constant_dissimilarity(
    groups: &BTreeMap<String, Vec<f64>>,
    min_group: usize,
) -> Result<Vec<PairVerdict>> {
    let kept: Vec<(&String, BoxStats)> = groups
        .iter()
        .filter(|(value, samples)| {
            if samples.len() < min_group {
                log::warn!(
                    "group {value:?} has {} < {min_group} samples; excluded",
                    samples.len()
                );
                false
            } else {
                true
            }
        })
        .map(|(value, samples)| Ok((value, box_stats(samples)?)))
        .collect::<Result<_>>()?;
    let mut verdicts = Vec::new();
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            verdicts.push(PairVerdict {
                value_a: kept[i].0.clone(),
                value_b: kept[j].0.clone(),
                verdict: classify_pair(&kept[i].1, &kept[j].1),
            });
        }
    }
    Ok(verdicts)
}

/// Whether a triple is strictly monotone (increasing or decreasing).
pub fn triple_monotonic(t: (f64, f64, f64)) -> bool {
    (t.0 < t.1 && t.1 < t.2) || (t.0 > t.1 && t.1 > t.2)
}

/// Fraction of strictly monotone triples. Random orderings give 1/3.
pub fn triple_monotonicity(triples: &[(f64, f64, f64)]) -> Result<f64> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("triple_monotonicity".into()));
    }
    let hits = triples.iter().filter(|&&t| triple_monotonic(t)).count();
    Ok(hits as f64 / triples.len() as f64)
}

/// P(model M loses on p′ by ≥ d | M wins on p by ≥ d), over ordered format
/// pairs (p, p′). Input: per-format (acc_M, acc_M′). None when no pair
/// satisfies the condition.
pub fn flip_probability(accs: &[(f64, f64)], d: f64) -> Result<Option<f64>> {
    if d < 0.0 {
        return Err(Error::Config("flip threshold d must be >= 0".into()));
    }
    let mut conditioned = 0u64;
    let mut flipped = 0u64;
    for (p, &(m_p, m2_p)) in accs.iter().enumerate() {
        if m_p < m2_p + d {
            continue;
        }
        for (p2, &(m_p2, m2_p2)) in accs.iter().enumerate() {
            if p2 == p {
                continue;
            }
            conditioned += 1;
            if m_p2 <= m2_p2 - d {
                flipped += 1;
            }
        }
    }
    if conditioned == 0 {
        return Ok(None);
    }
    Ok(Some(flipped as f64 / conditioned as f64))
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    // multiplicative form; exact for the n used on the integer path
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact one-sided McNemar sign test. b = #(M correct, M′ wrong),
/// c = #(M wrong, M′ correct); p = P(X ≥ b), X ~ Binomial(b+c, 1/2).
pub fn mcnemar_one_sided(paired: &[(u8, u8)]) -> Result<f64> {
    let b = paired.iter().filter(|&&(m, m2)| m == 1 && m2 == 0).count() as u64;
    let c = paired.iter().filter(|&&(m, m2)| m == 0 && m2 == 1).count() as u64;
    mcnemar_from_counts(b, c)
}

pub fn mcnemar_from_counts(b: u64, c: u64) -> Result<f64> {
    let n = b + c;
    if n == 0 {
        return Err(Error::Eval("no discordant pairs: test inapplicable".into()));
    }
    if n <= 120 {
        // exact integer tail; 2^120 and the binomials fit u128
        let tail: u128 = (b..=n).map(|k| binomial_u128(n, k)).sum();
        Ok(tail as f64 / (1u128 << n.min(127)) as f64)
    } else {
        // log-space tail sum with max-shift
        let ln2 = std::f64::consts::LN_2;
        let mut ln_terms = Vec::with_capacity((n - b + 1) as usize);
        // ln C(n, b) by summing logs, then the ratio recurrence upward
        let mut ln_c = 0.0;
        for i in 0..b.min(n - b) {
            ln_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
        let mut k = b;
        let mut cur = ln_c;
        loop {
            ln_terms.push(cur - n as f64 * ln2);
            if k == n {
                break;
            }
            cur += ((n - k) as f64).ln() - ((k + 1) as f64).ln();
            k += 1;
        }
        let max = ln_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = ln_terms.iter().map(|&t| (t - max).exp()).sum();
        Ok((max + sum.ln()).exp().min(1.0))
    }
}

/// Monte Carlo probability that growing the sampled format set from k1 to k2
/// increases the observed spread by at least d. Each trial draws k2 indices
/// without replacement; the first k1 of the draw are the smaller set.
pub fn spread_gain(
    accs: &[f64],
    k1: usize,
    k2: usize,
    d: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if k1 == 0 || k1 >= k2 || k2 > accs.len() {
        return Err(Error::Config(format!(
            "need 0 < k1 < k2 <= {}, got k1={k1} k2={k2}",
            accs.len()
        )));
    }
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let trial_ids: Vec<u64> = (0..trials).collect();
    // each trial gets its own stream so parallel order cannot matter
    let hits = exec::map_batch(&trial_ids, |&t| {
        let key = crate::evaluator::stable_key(seed, &["spread_gain", &t.to_string()]);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let mut idx: Vec<usize> = (0..accs.len()).collect();
        for i in 0..k2 {
            let j = rand::Rng::random_range(&mut rng, i..idx.len());
            idx.swap(i, j);
        }
        let small: Vec<f64> = idx[..k1].iter().map(|&i| accs[i]).collect();
        let large: Vec<f64> = idx[..k2].iter().map(|&i| accs[i]).collect();
        let gain = spread(&large).unwrap() - spread(&small).unwrap();
        u64::from(gain >= d)
    });
    Ok(hits.iter().sum::<u64>() as f64 / trials as f64)
}

/// Default threshold grid for atomic-change exceedance curves.
pub fn default_thresholds() -> Vec<f64> {
    (0..20).map(|i| i as f64 * 0.05).collect()
}

/// For each threshold t: P(|acc_after − acc_before| ≥ t) over atomic changes.
pub fn atomic_change_histogram(
    pairs: &[(f64, f64)],
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("atomic_change_histogram".into()));
    }
    let deltas: Vec<f64> = pairs.iter().map(|(a, b)| (b - a).abs()).collect();
    Ok(thresholds
        .iter()
        .map(|&t| {
            let p = deltas.iter().filter(|&&x| x >= t).count() as f64 / deltas.len() as f64;
            (t, p)
        })
        .collect())
}
