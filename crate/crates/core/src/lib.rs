//! Measure how sensitive a language model's task accuracy is to semantically
//! equivalent prompt-format choices: sample equivalent formats from a
//! constrained grammar, search for the best and worst performers under a
//! fixed evaluation budget, and characterize the resulting spread.

pub mod analysis;
pub mod cli;
pub mod constants;
pub mod error;
pub mod evaluator;
pub mod exec;
pub mod format;
pub mod metrics;
pub mod prompt;
pub mod report;
pub mod search;
pub mod spacegen;
pub mod task;

pub use error::{Error, Result};
