use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format structure invalid: {0}")]
    Structure(String),

    #[error("binding {0} does not resolve against the data instance")]
    Binding(String),

    #[error("format space exhausted after {attempts} attempts; {}", match .space_size {
        Some(n) => format!("valid space size is {n}"),
        None => "valid space size exceeds the enumeration cap".to_string(),
    })]
    Exhausted {
        attempts: u64,
        space_size: Option<u64>,
    },

    #[error("degenerate prior: x0 = {0} leaves alpha undefined; clamp x0 below 1")]
    DegeneratePrior(f64),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("transport error after {retries} retries: {message}")]
    Transport { retries: u32, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("endpoint does not support logprobs; fall back to the prefix metric")]
    Capability,

    #[error("task load error at {path}: {message}")]
    Load { path: String, message: String },

    #[error("undefined on empty input: {0}")]
    EmptyInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
