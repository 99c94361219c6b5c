//! Bit-exact prompt rendering.
//!
//! Template bytes are fixed at build time via `include_str!` and covered by
//! checksum tests; rendering is a single-pass placeholder substitution, so
//! substituted content is never rescanned for placeholders.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const S2J_OBJECTIVE_TEMPLATE: &str = include_str!("../templates/s2j_objective.txt");
pub const S2J_SUBJECTIVE_TEMPLATE: &str = include_str!("../templates/s2j_subjective.txt");
pub const BASELINE_INSTRUCT_TEMPLATE: &str = include_str!("../templates/baseline_instruct.txt");
pub const BASELINE_REASONER_TEMPLATE: &str = include_str!("../templates/baseline_reasoner.txt");
pub const SOLVE_ONLY_TEMPLATE: &str = include_str!("../templates/solve_only.txt");
pub const JUDGE_WITH_GT_TEMPLATE: &str = include_str!("../templates/judge_with_gt.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    S2jObjective,
    S2jSubjective,
    BaselineInstruct,
    BaselineReasoner,
    SolveOnly,
    JudgeWithGt,
}

impl PromptKind {
    pub fn template(self) -> &'static str {
        match self {
            PromptKind::S2jObjective => S2J_OBJECTIVE_TEMPLATE,
            PromptKind::S2jSubjective => S2J_SUBJECTIVE_TEMPLATE,
            PromptKind::BaselineInstruct => BASELINE_INSTRUCT_TEMPLATE,
            PromptKind::BaselineReasoner => BASELINE_REASONER_TEMPLATE,
            PromptKind::SolveOnly => SOLVE_ONLY_TEMPLATE,
            PromptKind::JudgeWithGt => JUDGE_WITH_GT_TEMPLATE,
        }
    }

    pub fn needs_candidates(self) -> bool {
        !matches!(self, PromptKind::SolveOnly)
    }

    pub fn needs_ground_truth(self) -> bool {
        matches!(self, PromptKind::JudgeWithGt)
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "s2j_objective" => Ok(PromptKind::S2jObjective),
            "s2j_subjective" => Ok(PromptKind::S2jSubjective),
            "baseline_instruct" => Ok(PromptKind::BaselineInstruct),
            "baseline_reasoner" => Ok(PromptKind::BaselineReasoner),
            "solve_only" => Ok(PromptKind::SolveOnly),
            "judge_with_gt" => Ok(PromptKind::JudgeWithGt),
            other => Err(Error::Input(format!("unknown prompt kind {other:?}"))),
        }
    }
}

fn substitute(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while !rest.is_empty() {
        if let Some(pos) = rest.find('{') {
            out.push_str(&rest[..pos]);
            let tail = &rest[pos..];
            for (name, value) in values {
                let token = format!("{{{name}}}");
                if tail.starts_with(&token) {
                    out.push_str(value);
                    rest = &tail[token.len()..];
                    continue 'outer;
                }
            }
            out.push('{');
            rest = &tail[1..];
        } else {
            out.push_str(rest);
            break;
        }
    }
    out
}

/// Renders a prompt by byte-exact substitution into the stored template.
pub fn render_prompt(
    kind: PromptKind,
    query: &str,
    answer_a: Option<&str>,
    answer_b: Option<&str>,
    ground_truth: Option<&str>,
) -> Result<String> {
    let mut values: Vec<(&str, &str)> = vec![("question", query)];
    if kind.needs_candidates() {
        let a = answer_a
            .ok_or_else(|| Error::Input(format!("{kind:?} requires answer_a")))?;
        let b = answer_b
            .ok_or_else(|| Error::Input(format!("{kind:?} requires answer_b")))?;
        values.push(("answer_a", a));
        values.push(("answer_b", b));
    }
    if kind.needs_ground_truth() {
        let gt = ground_truth
            .ok_or_else(|| Error::Input(format!("{kind:?} requires ground_truth")))?;
        values.push(("ground_truth", gt));
    }
    Ok(substitute(kind.template(), &values))
}
