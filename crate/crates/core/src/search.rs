//! Two-phase bandit search over a set of sampled formats: phase 1 spends half
//! the budget finding the most accurate format, phase 2 spends the rest
//! finding the least accurate one. The gap between the two is the spread.
//!
//! Rounds are batched: each round picks one arm and evaluates it on the next
//! `batch` unseen instances. Per-arm instance order is fixed, so an arm that
//! runs out of fresh instances is frozen at its now-exact accuracy and never
//! pulled again.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluator::PointEvaluator;
use crate::exec;
use crate::format::FormatAst;
use crate::task::DataInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Thompson,
    Ucb,
    Naive,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Thompson => write!(f, "thompson"),
            Algorithm::Ucb => write!(f, "ucb"),
            Algorithm::Naive => write!(f, "naive"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Total evaluation budget E (data-point evaluations).
    pub budget: u64,
    /// Batch size B: evaluations per round, all on one arm.
    pub batch: u64,
    pub algorithm: Algorithm,
    /// Exploration constant for UCB.
    #[serde(default = "default_ucb_c")]
    pub ucb_c: f64,
    /// Prior guess for the original format's accuracy; shapes the Beta prior.
    #[serde(default = "default_x0")]
    pub x0: f64,
    pub seed: u64,
    /// Re-evaluate the selected best/worst arms on the full data afterwards.
    #[serde(default)]
    pub verify: bool,
}

fn default_ucb_c() -> f64 {
    2.0
}
fn default_x0() -> f64 {
    0.5
}

/// Informative Beta prior centered near the expected accuracy `x0`:
/// beta = 5, alpha = max(5 x0 / (1 - x0), 1.1).
pub fn make_prior(x0: f64) -> Result<(f64, f64)> {
    if !x0.is_finite() || x0 <= 0.0 || x0 >= 1.0 {
        return Err(Error::DegeneratePrior(x0));
    }
    let beta = 5.0;
    let alpha = (beta * x0 / (1.0 - x0)).max(1.1);
    Ok((alpha, beta))
}

/// One arm of the search: a candidate format.
#[derive(Debug, Clone)]
pub struct Arm {
    pub format_id: String,
    pub format: FormatAst,
}

#[derive(Debug, Clone)]
struct ArmState {
    successes: u64,
    pulls: u64,
    /// Next unseen index into the fixed instance order.
    cursor: usize,
    exhausted: bool,
}

impl ArmState {
    fn estimate(&self, alpha0: f64, beta0: f64) -> f64 {
        if self.exhausted && self.pulls > 0 {
            // every instance seen exactly once: the accuracy is exact
            self.successes as f64 / self.pulls as f64
        } else {
            (alpha0 + self.successes as f64)
                / (alpha0 + beta0 + self.pulls as f64)
        }
    }

    fn mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.successes as f64 / self.pulls as f64
        }
    }
}

/// Per-arm tallies reported after the search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmReport {
    pub format_id: String,
    pub pulls: u64,
    pub successes: u64,
    pub estimate: f64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    pub format_id: String,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifiedSpread {
    pub best_accuracy: f64,
    pub worst_accuracy: f64,
    pub spread: f64,
    /// Extra evaluations spent on verification, outside the search budget.
    pub evaluations: u64,
}

/// Full result of a spread search; serializes deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub budget: u64,
    pub batch: u64,
    pub used: u64,
    pub leftover: u64,
    pub best: Selection,
    pub worst: Selection,
    pub spread_estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<VerifiedSpread>,
    pub arms: Vec<ArmReport>,
    pub config_hash: String,
    pub version: String,
}

pub fn config_hash(cfg: &SearchConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Goal {
    Maximize,
    Minimize,
}

/// Pull `arm` on up to `want` fresh instances; returns evaluations spent.
fn pull(
    arm: &Arm,
    state: &mut ArmState,
    instances: &[&DataInstance],
    evaluator: &dyn PointEvaluator,
    want: u64,
) -> Result<u64> {
    let remaining = instances.len() - state.cursor;
    let take = (want as usize).min(remaining);
    let slice = &instances[state.cursor..state.cursor + take];
    let outcomes = exec::map_batch(slice, |inst| {
        evaluator.evaluate(&arm.format_id, &arm.format, inst)
    });
    for outcome in outcomes {
        if outcome?.correct {
            state.successes += 1;
        }
    }
    state.pulls += take as u64;
    state.cursor += take;
    if state.cursor == instances.len() {
        state.exhausted = true;
    }
    Ok(take as u64)
}

/// Index of the arm to pull this round, or None when all arms are exhausted.
/// Ties always resolve to the lowest arm index.
#[allow(clippy::too_many_arguments)]
fn select_arm(
    algorithm: Algorithm,
    goal: Goal,
    states: &[ArmState],
    alpha0: f64,
    beta0: f64,
    ucb_c: f64,
    round: u64,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, state) in states.iter().enumerate() {
        // Thompson draws stay aligned across arms regardless of exhaustion.
        let theta = match algorithm {
            Algorithm::Thompson => {
                let dist = rand_distr::Beta::new(
                    alpha0 + state.successes as f64,
                    beta0 + (state.pulls - state.successes) as f64,
                )
                .expect("posterior params positive");
                rng.sample(dist)
            }
            Algorithm::Ucb => {
                if state.pulls == 0 {
                    // forced initial round-robin
                    return Some(i);
                }
                let pad = ucb_c * ((round as f64).ln().max(0.0) / state.pulls as f64).sqrt();
                match goal {
                    Goal::Maximize => state.mean() + pad,
                    Goal::Minimize => state.mean() - pad,
                }
            }
            Algorithm::Naive => unreachable!("naive allocation is not round-based"),
        };
        if state.exhausted {
            continue;
        }
        let better = match (goal, best) {
            (_, None) => true,
            (Goal::Maximize, Some((_, b))) => theta > b,
            (Goal::Minimize, Some((_, b))) => theta < b,
        };
        if better {
            best = Some((i, theta));
        }
    }
    best.map(|(i, _)| i)
}

fn pick_extreme(states: &[ArmState], alpha0: f64, beta0: f64, goal: Goal) -> (usize, f64) {
    let mut best = (0, states[0].estimate(alpha0, beta0));
    for (i, state) in states.iter().enumerate().skip(1) {
        let est = state.estimate(alpha0, beta0);
        let better = match goal {
            Goal::Maximize => est > best.1,
            Goal::Minimize => est < best.1,
        };
        if better {
            best = (i, est);
        }
    }
    best
}

/// Run the two-phase spread search.
pub fn run_search(
    cfg: &SearchConfig,
    arms: &[Arm],
    instances: &[&DataInstance],
    evaluator: &dyn PointEvaluator,
) -> Result<SpreadReport> {
    if arms.is_empty() {
        return Err(Error::EmptyInput("search arms".into()));
    }
    if instances.is_empty() {
        return Err(Error::EmptyInput("search instances".into()));
    }
    if cfg.batch == 0 || cfg.budget == 0 {
        return Err(Error::Config("budget and batch must be positive".into()));
    }
    let (alpha0, beta0) = make_prior(cfg.x0)?;
    let mut states = vec![
        ArmState {
            successes: 0,
            pulls: 0,
            cursor: 0,
            exhausted: false,
        };
        arms.len()
    ];
    let mut used: u64 = 0;

    if cfg.algorithm == Algorithm::Naive {
        // uniform split: floor(E/K) each, remainder to the first E mod K arms
        let per = cfg.budget / arms.len() as u64;
        let extra = (cfg.budget % arms.len() as u64) as usize;
        for (i, arm) in arms.iter().enumerate() {
            let want = per + u64::from(i < extra);
            used += pull(arm, &mut states[i], instances, evaluator, want)?;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let rounds1 = (cfg.budget / 2) / cfg.batch;
        let mut round: u64 = 0;
        // phase 1: maximize
        for _ in 0..rounds1 {
            round += 1;
            let Some(i) = select_arm(
                cfg.algorithm,
                Goal::Maximize,
                &states,
                alpha0,
                beta0,
                cfg.ucb_c,
                round,
                &mut rng,
            ) else {
                break;
            };
            used += pull(&arms[i], &mut states[i], instances, evaluator, cfg.batch)?;
        }
        // phase 2: minimize with whatever budget is left, in full rounds.
        // Tallies carry over; the prior makes under-pulled arms start near x0.
        let rounds2 = (cfg.budget - used) / cfg.batch;
        for _ in 0..rounds2 {
            round += 1;
            let Some(i) = select_arm(
                cfg.algorithm,
                Goal::Minimize,
                &states,
                alpha0,
                beta0,
                cfg.ucb_c,
                round,
                &mut rng,
            ) else {
                break;
            };
            used += pull(&arms[i], &mut states[i], instances, evaluator, cfg.batch)?;
        }
    }

    let (bi, best_est) = pick_extreme(&states, alpha0, beta0, Goal::Maximize);
    let (wi, worst_est) = pick_extreme(&states, alpha0, beta0, Goal::Minimize);
    let best = Selection {
        format_id: arms[bi].format_id.clone(),
        estimate: best_est,
    };
    let worst = Selection {
        format_id: arms[wi].format_id.clone(),
        estimate: worst_est,
    };

    let verified = if cfg.verify {
        let before = evaluator.evaluations();
        let acc = |i: usize| -> Result<f64> {
            let outcomes = exec::map_batch(instances, |inst| {
                evaluator.evaluate(&arms[i].format_id, &arms[i].format, inst)
            });
            let mut hits = 0u64;
            for o in outcomes {
                hits += u64::from(o?.correct);
            }
            Ok(hits as f64 / instances.len() as f64)
        };
        let best_accuracy = acc(bi)?;
        let worst_accuracy = acc(wi)?;
        Some(VerifiedSpread {
            best_accuracy,
            worst_accuracy,
            spread: best_accuracy - worst_accuracy,
            evaluations: evaluator.evaluations() - before,
        })
    } else {
        None
    };

    Ok(SpreadReport {
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        budget: cfg.budget,
        batch: cfg.batch,
        used,
        leftover: cfg.budget - used,
        spread_estimate: best.estimate - worst.estimate,
        best,
        worst,
        verified,
        arms: arms
            .iter()
            .zip(&states)
            .map(|(arm, s)| ArmReport {
                format_id: arm.format_id.clone(),
                pulls: s.pulls,
                successes: s.successes,
                estimate: s.estimate(alpha0, beta0),
                exhausted: s.exhausted,
            })
            .collect(),
        config_hash: config_hash(cfg),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}
