//! Group-relative advantage estimation and the dynamic-sampling filter.
//!
//! Each prompt's rollout group is baselined against its own mean and
//! normalized by the population standard deviation. Zero-variance groups get
//! zero advantages and can additionally be dropped, since a uniform group
//! carries no learning signal. Clip ratios are exported as metadata for an
//! external trainer; clipping itself acts on policy-probability ratios
//! during the gradient step, which happens outside this crate.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::schema::{self, SchemaHeader, BATCH_SCHEMA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdvantageConfig {
    pub group_size: usize,
    pub epsilon: f64,
    pub clip_low: f64,
    pub clip_high: f64,
    pub drop_uniform_groups: bool,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        Self {
            group_size: 16,
            epsilon: 1e-6,
            clip_low: 0.2,
            clip_high: 0.28,
            drop_uniform_groups: true,
        }
    }
}

impl AdvantageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Config(format!(
                "advantage.group_size must be >= 2, got {}",
                self.group_size
            )));
        }
        if !(self.clip_low > 0.0 && self.clip_high >= self.clip_low) {
            return Err(Error::Config(format!(
                "advantage clip ratios must satisfy clip_high >= clip_low > 0, got low={} high={}",
                self.clip_low, self.clip_high
            )));
        }
        Ok(())
    }
}

/// G rollouts for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub instance_id: String,
    pub prompt: String,
    pub responses: Vec<String>,
    pub rewards: Vec<f64>,
    pub advantages: Option<Vec<f64>>,
    pub kept: bool,
}

/// a_i = (r_i - mean) / (std_pop + epsilon); all zeros when the group has no
/// variance.
pub fn group_advantages(rewards: &[f64], cfg: &AdvantageConfig) -> Result<Vec<f64>> {
    if rewards.len() != cfg.group_size {
        return Err(Error::Input(format!(
            "expected {} rewards per group, got {}",
            cfg.group_size,
            rewards.len()
        )));
    }
    if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(Error::Input(format!("non-finite reward {bad} in group")));
    }
    // an exactly uniform group has no signal; checking the values (not the
    // computed std) avoids rounding noise in the mean reintroducing one
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(rewards.iter().map(|r| (r - mean) / (std + cfg.epsilon)).collect())
}

/// Applies the dynamic-sampling drop rule and fills in advantages for kept
/// groups. Dropped groups carry no advantages.
pub fn filter_group(mut group: RolloutGroup, cfg: &AdvantageConfig) -> Result<RolloutGroup> {
    if group.rewards.is_empty() {
        return Err(Error::Input(format!("group {} has no rewards", group.instance_id)));
    }
    let uniform = group.rewards.iter().all(|r| *r == group.rewards[0]);
    if cfg.drop_uniform_groups && uniform {
        group.kept = false;
        group.advantages = None;
    } else {
        group.kept = true;
        group.advantages = Some(group_advantages(&group.rewards, cfg)?);
    }
    Ok(group)
}

/// Writes the training-batch JSONL hand-off: a `batch.v1` header carrying the
/// clip metadata and drop count, then one record per response of every kept
/// group.
pub fn export_training_batch<W: Write>(
    groups: &[RolloutGroup],
    cfg: &AdvantageConfig,
    out: &mut W,
) -> Result<()> {
    for g in groups.iter().filter(|g| g.kept) {
        if g.advantages.is_none() {
            return Err(Error::Input(format!(
                "kept group {} has not been scored with advantages",
                g.instance_id
            )));
        }
    }
    let kept = groups.iter().filter(|g| g.kept).count();
    let dropped = groups.len() - kept;
    let header = SchemaHeader::new(BATCH_SCHEMA).with_extra(serde_json::json!({
        "clip_low": cfg.clip_low,
        "clip_high": cfg.clip_high,
        "group_size": cfg.group_size,
        "kept_groups": kept,
        "dropped_groups": dropped,
    }));
    schema::write_header(out, &header)?;
    for g in groups.iter().filter(|g| g.kept) {
        let advantages = g.advantages.as_ref().unwrap();
        for (i, response) in g.responses.iter().enumerate() {
            let record = serde_json::json!({
                "instance_id": g.instance_id,
                "rollout_index": i,
                "prompt": g.prompt,
                "response": response,
                "reward": g.rewards[i],
                "advantage": advantages[i],
                "kept": true,
            });
            schema::write_record(out, &record)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(group_size: usize) -> AdvantageConfig {
        AdvantageConfig { group_size, ..AdvantageConfig::default() }
    }

    #[test]
    fn hand_computed_example() {
        // mean 0.5, population std 0.353553
        let a = group_advantages(&[1.0, 0.5, 0.0, 0.5], &cfg(4)).unwrap();
        let expect = [1.41421, 0.0, -1.41421, 0.0];
        for (got, want) in a.iter().zip(expect) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_variance_gives_zeros() {
        let a = group_advantages(&[0.5; 4], &cfg(4)).unwrap();
        assert_eq!(a, vec![0.0; 4]);
    }

    #[test]
    fn pair_group() {
        let a = group_advantages(&[1.0, 0.0], &cfg(2)).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-4);
        assert!((a[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch_is_input_error() {
        assert!(matches!(
            group_advantages(&[1.0, 0.0], &cfg(4)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn non_finite_reward_rejected() {
        assert!(matches!(
            group_advantages(&[1.0, f64::INFINITY], &cfg(2)),
            Err(Error::Input(_))
        ));
    }

    fn group(rewards: Vec<f64>) -> RolloutGroup {
        RolloutGroup {
            instance_id: "g".into(),
            prompt: "p".into(),
            responses: rewards.iter().map(|_| "r".to_string()).collect(),
            rewards,
            advantages: None,
            kept: false,
        }
    }

    #[test]
    fn uniform_group_dropped() {
        let g = filter_group(group(vec![1.0; 16]), &cfg(16)).unwrap();
        assert!(!g.kept);
        assert!(g.advantages.is_none());
    }

    #[test]
    fn mixed_group_kept() {
        let mut rewards = vec![0.0; 16];
        rewards[0] = 1.0;
        let g = filter_group(group(rewards), &cfg(16)).unwrap();
        assert!(g.kept);
        assert!(g.advantages.is_some());
    }

    #[test]
    fn filter_disabled_keeps_uniform() {
        let mut c = cfg(16);
        c.drop_uniform_groups = false;
        let g = filter_group(group(vec![0.5; 16]), &c).unwrap();
        assert!(g.kept);
        assert_eq!(g.advantages.unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn export_counts_and_header() {
        let c = cfg(16);
        let g1 = filter_group(group((0..16).map(|i| i as f64).collect()), &c).unwrap();
        let g2 = filter_group(group((0..16).map(|i| (i % 2) as f64).collect()), &c).unwrap();
        let dropped = filter_group(group(vec![1.0; 16]), &c).unwrap();
        let mut buf = Vec::new();
        export_training_batch(&[g1, g2, dropped], &c, &mut buf).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&buf).unwrap().trim().lines().collect();
        assert_eq!(lines.len(), 1 + 32);
        let header: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(header["schema"], "batch.v1");
        assert_eq!(header["dropped_groups"], 1);
        assert_eq!(header["clip_high"], 0.28);
    }

    #[test]
    fn export_empty_batch_has_header() {
        let mut buf = Vec::new();
        export_training_batch(&[], &cfg(16), &mut buf).unwrap();
        let text = std::str::from_utf8(&buf).unwrap();
        assert_eq!(text.trim().lines().count(), 1);
    }

    #[test]
    fn export_unscored_kept_group_is_error() {
        let mut g = group(vec![1.0, 0.0]);
        g.kept = true; // scored flag forged without advantages
        let mut buf = Vec::new();
        assert!(matches!(
            export_training_batch(&[g], &cfg(2), &mut buf),
            Err(Error::Input(_))
        ));
    }
}
