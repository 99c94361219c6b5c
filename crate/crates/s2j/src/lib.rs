//! Solve-to-judge reward stack for generative reward models.
//!
//! The crate covers the full desk-scale pipeline around a pairwise judge
//! that must solve the query itself before rendering a verdict:
//!
//! - [`trajectory`]: parse raw model output into (self-solution, reasoning, verdict)
//! - [`verifier`]: rule-based equivalence check between an answer and ground truth
//! - [`reward`]: composite solve + judge rewards and the ablation reward modes
//! - [`advantage`]: group-relative advantage estimation and dynamic-sampling filter
//! - [`synth`]: preference-pair synthesis from verified generator responses
//! - [`prompts`]: bit-exact prompt rendering for judging and solving
//! - [`gateway`]: chat-completion and scalar-scorer HTTP clients
//! - [`eval`]: benchmark evaluation and solve-to-judge gap reports
//! - [`sim`]: synthetic policy-gradient simulator for the reward-mode ablation
//! - [`schema`]: versioned JSONL schemas shared by the CLI stages
//! - [`config`]: run configuration loading and validation

pub mod advantage;
pub mod cli;
pub mod config;
pub mod eval;
pub mod gateway;
pub mod prompts;
pub mod reward;
pub mod schema;
pub mod sim;
pub mod synth;
pub mod trajectory;
pub mod verifier;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// configuration problems exit 2, endpoint/scorer problems exit 3, the
/// rest exit 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("request error: {0}")]
    Request(String),
    #[error("scorer error: {0}")]
    Scorer(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
