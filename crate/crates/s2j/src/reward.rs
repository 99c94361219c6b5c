//! Composite reward computation: the judging outcome reward, the objective
//! and subjective solving rewards, and their combination under the three
//! ablation modes.
//!
//! In `s2j` mode the total is the 0.5 + 0.5 sum of the solve and judge
//! components. The single-component ablations use a {0, 1} scale; group
//! normalization makes the scale irrelevant within a mode.

use serde::{Deserialize, Serialize};

use crate::synth::PreferencePair;
use crate::trajectory::{TaskKind, Trajectory, Verdict};
use crate::verifier::verify_optional;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    S2j,
    JudgeOnly,
    SolveOnly,
}

impl std::fmt::Display for RewardMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RewardMode::S2j => write!(f, "s2j"),
            RewardMode::JudgeOnly => write!(f, "judge_only"),
            RewardMode::SolveOnly => write!(f, "solve_only"),
        }
    }
}

/// Auxiliary scalar-RM scores for one instance: the labeled better response,
/// the worse one, and the judge's own solution. All three must come from the
/// same scorer for the same query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub s_better: f64,
    pub s_worse: f64,
    pub s_self: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_solve: f64,
    pub r_judge: f64,
    pub total: f64,
    pub mode: RewardMode,
}

/// 0.5 when the predicted verdict matches the label; 0 otherwise, including
/// an unparseable (absent) verdict.
pub fn judge_reward(verdict: Option<Verdict>, label: Verdict) -> f64 {
    match verdict {
        Some(v) if v == label => 0.5,
        _ => 0.0,
    }
}

/// 0.5 when the self-solution verifies against the ground truth.
pub fn solve_reward_objective(self_solution: Option<&str>, truth: &str) -> Result<f64> {
    Ok(if verify_optional(self_solution, truth)? { 0.5 } else { 0.0 })
}

/// Subjective solving reward. The aux-RM gate requires the scorer to order
/// the labeled pair correctly (strictly); only then is the self-solution
/// rewarded for scoring strictly closer to the better response.
pub fn solve_reward_subjective(scores: ScoreTriple) -> Result<f64> {
    for (name, v) in [
        ("s_better", scores.s_better),
        ("s_worse", scores.s_worse),
        ("s_self", scores.s_self),
    ] {
        if !v.is_finite() {
            return Err(Error::Input(format!("non-finite score {name}={v}")));
        }
    }
    if scores.s_better > scores.s_worse
        && (scores.s_self - scores.s_better).abs() < (scores.s_self - scores.s_worse).abs()
    {
        Ok(0.5)
    } else {
        Ok(0.0)
    }
}

/// Composes the per-trajectory reward for the given mode.
///
/// Subjective instances need `scores` whenever the mode involves solving;
/// objective instances need a ground truth on the pair.
pub fn total_reward(
    traj: &Trajectory,
    instance: &PreferencePair,
    scores: Option<ScoreTriple>,
    mode: RewardMode,
) -> Result<RewardBreakdown> {
    let r_judge = judge_reward(traj.verdict, instance.label);
    let solve_component = |scores: Option<ScoreTriple>| -> Result<f64> {
        match instance.kind {
            TaskKind::Objective => {
                let truth = instance.ground_truth.as_deref().ok_or_else(|| {
                    Error::Input(format!("objective instance {} lacks ground truth", instance.id))
                })?;
                solve_reward_objective(traj.self_solution.as_deref(), truth)
            }
            TaskKind::Subjective => {
                let scores = scores.ok_or_else(|| {
                    Error::Input(format!(
                        "subjective instance {} requires aux scores in {} mode",
                        instance.id, mode
                    ))
                })?;
                solve_reward_subjective(scores)
            }
        }
    };
    let (r_solve, total) = match mode {
        RewardMode::S2j => {
            let r_solve = solve_component(scores)?;
            (r_solve, r_solve + r_judge)
        }
        RewardMode::JudgeOnly => (0.0, if r_judge > 0.0 { 1.0 } else { 0.0 }),
        RewardMode::SolveOnly => {
            let r_solve = solve_component(scores)?;
            (r_solve, if r_solve > 0.0 { 1.0 } else { 0.0 })
        }
    };
    Ok(RewardBreakdown { r_solve, r_judge: if mode == RewardMode::SolveOnly { 0.0 } else { r_judge }, total, mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::Source;
    use crate::trajectory::parse_trajectory;

    fn pair(kind: TaskKind, truth: Option<&str>) -> PreferencePair {
        PreferencePair {
            id: "q1".into(),
            query: "sum?".into(),
            response_a: "\\boxed{4}".into(),
            response_b: "\\boxed{10}".into(),
            label: Verdict::B,
            kind,
            ground_truth: truth.map(|s| s.to_string()),
            source: Source::Custom,
        }
    }

    #[test]
    fn judge_reward_cases() {
        assert_eq!(judge_reward(Some(Verdict::B), Verdict::B), 0.5);
        assert_eq!(judge_reward(Some(Verdict::A), Verdict::B), 0.0);
        assert_eq!(judge_reward(None, Verdict::A), 0.0);
    }

    #[test]
    fn solve_objective_cases() {
        assert_eq!(solve_reward_objective(Some("10"), "10").unwrap(), 0.5);
        assert_eq!(solve_reward_objective(Some("4"), "10").unwrap(), 0.0);
        assert_eq!(solve_reward_objective(None, "10").unwrap(), 0.0);
    }

    #[test]
    fn solve_subjective_cases() {
        let r = solve_reward_subjective(ScoreTriple { s_better: 0.9, s_worse: 0.2, s_self: 0.8 });
        assert_eq!(r.unwrap(), 0.5);
        // gate fails: scorer ordered the pair wrongly
        let r = solve_reward_subjective(ScoreTriple { s_better: 0.2, s_worse: 0.9, s_self: 0.8 });
        assert_eq!(r.unwrap(), 0.0);
        // equidistant: strict inequality is false
        let r = solve_reward_subjective(ScoreTriple { s_better: 0.75, s_worse: 0.25, s_self: 0.5 });
        assert_eq!(r.unwrap(), 0.0);
    }

    #[test]
    fn solve_subjective_rejects_non_finite() {
        let r = solve_reward_subjective(ScoreTriple { s_better: f64::NAN, s_worse: 0.0, s_self: 0.0 });
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn s2j_totals() {
        let p = pair(TaskKind::Objective, Some("10"));
        let good = parse_trajectory("mine: \\boxed{10} verdict [[B]]", TaskKind::Objective);
        let b = total_reward(&good, &p, None, RewardMode::S2j).unwrap();
        assert_eq!((b.r_solve, b.r_judge, b.total), (0.5, 0.5, 1.0));

        let half = parse_trajectory("mine: \\boxed{4} verdict [[B]]", TaskKind::Objective);
        let b = total_reward(&half, &p, None, RewardMode::S2j).unwrap();
        assert_eq!((b.r_solve, b.r_judge, b.total), (0.0, 0.5, 0.5));
    }

    #[test]
    fn judge_only_uses_unit_scale() {
        let p = pair(TaskKind::Objective, Some("10"));
        let t = parse_trajectory("[[B]]", TaskKind::Objective);
        let b = total_reward(&t, &p, None, RewardMode::JudgeOnly).unwrap();
        assert_eq!((b.r_solve, b.total), (0.0, 1.0));
        let t = parse_trajectory("[[A]]", TaskKind::Objective);
        let b = total_reward(&t, &p, None, RewardMode::JudgeOnly).unwrap();
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn solve_only_uses_unit_scale() {
        let p = pair(TaskKind::Objective, Some("10"));
        let t = parse_trajectory("\\boxed{10} but [[A]]", TaskKind::Objective);
        let b = total_reward(&t, &p, None, RewardMode::SolveOnly).unwrap();
        assert_eq!((b.r_judge, b.total), (0.0, 1.0));
    }

    #[test]
    fn subjective_s2j_without_scores_is_input_error() {
        let p = pair(TaskKind::Subjective, None);
        let t = parse_trajectory("<solution>x</solution> [[B]]", TaskKind::Subjective);
        assert!(matches!(
            total_reward(&t, &p, None, RewardMode::S2j),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn judge_only_needs_no_scores() {
        let p = pair(TaskKind::Subjective, None);
        let t = parse_trajectory("<solution>x</solution> [[B]]", TaskKind::Subjective);
        let b = total_reward(&t, &p, None, RewardMode::JudgeOnly).unwrap();
        assert_eq!(b.total, 1.0);
    }
}
