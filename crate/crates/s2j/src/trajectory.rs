//! Decomposes raw judge output into a structured trajectory: the model's own
//! solution, its reasoning, and its final verdict.
//!
//! Matching is case-sensitive and literal. Missing pieces are absent values,
//! never errors; downstream rewards penalize them with zeros.

use serde::{Deserialize, Serialize};

/// Whether an instance carries a verifiable ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Objective,
    Subjective,
}

/// A pairwise verdict: which candidate the judge preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    A,
    B,
}

/// One parsed model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// The output exactly as produced; parsing never mutates it.
    pub raw_text: String,
    /// The model's own answer, when an extraction pattern matched.
    pub self_solution: Option<String>,
    /// The reasoning chain. No structure is imposed, so this is the full text.
    pub reasoning: String,
    pub verdict: Option<Verdict>,
}

/// Content of the first well-balanced `\boxed{...}` group, if any.
///
/// The prompt orders the self-solution before the evaluation, where candidate
/// answers may be quoted, so the first box is taken as the model's own answer.
pub fn extract_boxed(text: &str) -> Option<String> {
    let mut search = text;
    let mut offset = 0;
    while let Some(pos) = search.find("\\boxed{") {
        let start = offset + pos + "\\boxed{".len();
        let rest = &text[start..];
        let mut depth = 1usize;
        for (i, ch) in rest.char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(rest[..i].to_string());
                    }
                }
                _ => {}
            }
        }
        // this opener never closes; a later one may still balance
        let next = offset + pos + 1;
        search = &text[next..];
        offset = next;
    }
    None
}

/// Content between the first `<solution>` and its matching `</solution>`.
pub fn extract_solution_tags(text: &str) -> Option<String> {
    let open = text.find("<solution>")?;
    let start = open + "<solution>".len();
    let close = text[start..].find("</solution>")?;
    Some(text[start..start + close].to_string())
}

/// Verdict from the last occurrence of `[[A]]` or `[[B]]`.
///
/// Models restate verdicts; the final statement is the binding one.
pub fn extract_verdict(text: &str) -> Option<Verdict> {
    let a = text.rfind("[[A]]");
    let b = text.rfind("[[B]]");
    match (a, b) {
        (Some(pa), Some(pb)) => Some(if pa > pb { Verdict::A } else { Verdict::B }),
        (Some(_), None) => Some(Verdict::A),
        (None, Some(_)) => Some(Verdict::B),
        (None, None) => None,
    }
}

/// Parses a full trajectory. Objective tasks expect a boxed answer,
/// subjective tasks a `<solution>` block.
pub fn parse_trajectory(text: &str, kind: TaskKind) -> Trajectory {
    let self_solution = match kind {
        TaskKind::Objective => extract_boxed(text),
        TaskKind::Subjective => extract_solution_tags(text),
    };
    Trajectory {
        raw_text: text.to_string(),
        self_solution,
        reasoning: text.to_string(),
        verdict: extract_verdict(text),
    }
}
