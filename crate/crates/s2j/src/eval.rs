//! Benchmark evaluation and solve-to-judge gap reports.
//!
//! Judging and solving runs produce per-query [`JudgeRecord`]s; joining them
//! on query id yields the gap statistic P(judged wrong | solved), reported
//! per subset with a macro (per-subset mean) average by default. Completions
//! can be served live or replayed from a cached `completions.v1` file, which
//! makes every report bit-reproducible.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gateway::{ChatClient, SamplingParams};
use crate::prompts::{render_prompt, PromptKind};
use crate::schema::{self, COMPLETIONS_SCHEMA};
use crate::synth::PreferencePair;
use crate::trajectory::{parse_trajectory, TaskKind, Verdict};
use crate::verifier;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub subsample_cap: usize,
    pub seed: u64,
    pub swap_positions: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { subsample_cap: 512, seed: 0, swap_positions: false }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsample_cap < 1 {
            return Err(Error::Config("eval.subsample_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Identity when under the cap; otherwise a seeded uniform sample of exactly
/// `subsample_cap` items, stable under a fixed seed.
pub fn subsample<T: Clone>(items: &[T], cfg: &EvalConfig) -> Vec<T> {
    if items.len() <= cfg.subsample_cap {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..items.len()).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices.into_iter().take(cfg.subsample_cap).collect();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| items[i].clone()).collect()
}

/// Per-query evaluation outcome; solving and judging runs fill in their own
/// fields and are joined on `query_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRecord {
    pub query_id: String,
    pub solved: Option<bool>,
    pub judged: Option<bool>,
    pub judged_with_gt: Option<bool>,
    pub subset: String,
}

/// Serves one completion per prompt; live client or replay cache.
pub trait CompletionProvider {
    fn complete(&self, prompt: &str) -> Result<String>;
}

pub fn prompt_key(prompt: &str) -> String {
    format!("{:x}", Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub prompt_sha256: String,
    pub prompt: String,
    pub text: String,
}

/// Live provider: forwards to a chat endpoint and records every completion
/// so the run can later be replayed.
pub struct LiveProvider<'a> {
    client: &'a ChatClient,
    params: SamplingParams,
    seen: std::sync::Mutex<Vec<CompletionRecord>>,
}

impl<'a> LiveProvider<'a> {
    pub fn new(client: &'a ChatClient, params: SamplingParams) -> Self {
        Self { client, params, seen: std::sync::Mutex::new(Vec::new()) }
    }

    /// Writes everything completed so far as a replayable cache file.
    pub fn dump_cache(&self, path: &Path) -> Result<()> {
        let seen = self.seen.lock().unwrap();
        schema::write_jsonl(path, COMPLETIONS_SCHEMA, &seen)
    }
}

impl CompletionProvider for LiveProvider<'_> {
    fn complete(&self, prompt: &str) -> Result<String> {
        let text = self.client.complete(prompt, &self.params)?.text;
        self.seen.lock().unwrap().push(CompletionRecord {
            prompt_sha256: prompt_key(prompt),
            prompt: prompt.to_string(),
            text: text.clone(),
        });
        Ok(text)
    }
}

/// Replay provider: serves completions from a cache file keyed by prompt
/// hash; a prompt absent from the cache is an endpoint failure.
pub struct ReplayProvider {
    by_key: HashMap<String, String>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self> {
        let (_, records): (_, Vec<CompletionRecord>) = schema::read_jsonl(path, COMPLETIONS_SCHEMA)?;
        let by_key = records.into_iter().map(|r| (r.prompt_sha256, r.text)).collect();
        Ok(Self { by_key })
    }
}

impl CompletionProvider for ReplayProvider {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.by_key
            .get(&prompt_key(prompt))
            .cloned()
            .ok_or_else(|| Error::Endpoint("prompt not present in replay cache".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgingOutcome {
    pub records: Vec<JudgeRecord>,
    pub accuracy: Option<f64>,
    pub failures: usize,
}

fn judge_once(
    provider: &dyn CompletionProvider,
    pair: &PreferencePair,
    kind: PromptKind,
    a: &str,
    b: &str,
    label: Verdict,
) -> Result<bool> {
    let prompt = render_prompt(kind, &pair.query, Some(a), Some(b), pair.ground_truth.as_deref())?;
    let text = provider.complete(&prompt)?;
    let parsed = parse_trajectory(&text, pair.kind);
    Ok(parsed.verdict == Some(label))
}

/// Judges each pair once (or twice with slots swapped), recording
/// judged = verdict equals label. Endpoint failures are excluded from the
/// accuracy denominator but counted.
pub fn evaluate_judging(
    provider: &dyn CompletionProvider,
    benchmark: &[PreferencePair],
    kind: PromptKind,
    cfg: &EvalConfig,
) -> Result<JudgingOutcome> {
    cfg.validate()?;
    let pairs = subsample(benchmark, cfg);
    let with_gt = kind == PromptKind::JudgeWithGt;
    let mut records = Vec::new();
    let mut failures = 0usize;
    for pair in &pairs {
        let forward = judge_once(provider, pair, kind, &pair.response_a, &pair.response_b, pair.label);
        let judged = match forward {
            Err(Error::Endpoint(_)) | Err(Error::Request(_)) => {
                failures += 1;
                continue;
            }
            Err(e) => return Err(e),
            Ok(forward_ok) if cfg.swap_positions => {
                let flipped = match pair.label {
                    Verdict::A => Verdict::B,
                    Verdict::B => Verdict::A,
                };
                match judge_once(provider, pair, kind, &pair.response_b, &pair.response_a, flipped) {
                    Err(Error::Endpoint(_)) | Err(Error::Request(_)) => {
                        failures += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                    Ok(swapped_ok) => forward_ok && swapped_ok,
                }
            }
            Ok(forward_ok) => forward_ok,
        };
        records.push(JudgeRecord {
            query_id: pair.id.clone(),
            solved: None,
            judged: if with_gt { None } else { Some(judged) },
            judged_with_gt: if with_gt { Some(judged) } else { None },
            subset: pair.source.to_string(),
        });
    }
    let hits = records
        .iter()
        .filter(|r| r.judged.or(r.judged_with_gt) == Some(true))
        .count();
    let accuracy =
        (!records.is_empty()).then(|| hits as f64 / records.len() as f64);
    Ok(JudgingOutcome { records, accuracy, failures })
}

/// Solves each query with the solve-only prompt and verifies the boxed
/// answer against the ground truth.
pub fn evaluate_solving(
    provider: &dyn CompletionProvider,
    benchmark: &[PreferencePair],
    cfg: &EvalConfig,
) -> Result<JudgingOutcome> {
    cfg.validate()?;
    let pairs = subsample(benchmark, cfg);
    let mut records = Vec::new();
    let mut failures = 0usize;
    for pair in &pairs {
        let truth = pair.ground_truth.as_deref().ok_or_else(|| {
            Error::Input(format!("pair {} has no ground truth to solve against", pair.id))
        })?;
        let prompt = render_prompt(PromptKind::SolveOnly, &pair.query, None, None, None)?;
        let text = match provider.complete(&prompt) {
            Err(Error::Endpoint(_)) | Err(Error::Request(_)) => {
                failures += 1;
                continue;
            }
            Err(e) => return Err(e),
            Ok(text) => text,
        };
        let parsed = parse_trajectory(&text, TaskKind::Objective);
        let solved = verifier::verify_optional(parsed.self_solution.as_deref(), truth)?;
        records.push(JudgeRecord {
            query_id: pair.id.clone(),
            solved: Some(solved),
            judged: None,
            judged_with_gt: None,
            subset: pair.source.to_string(),
        });
    }
    let hits = records.iter().filter(|r| r.solved == Some(true)).count();
    let accuracy = (!records.is_empty()).then(|| hits as f64 / records.len() as f64);
    Ok(JudgingOutcome { records, accuracy, failures })
}

/// Merges solving and judging records on query id, keeping whichever fields
/// each side filled in.
pub fn join_records(batches: &[Vec<JudgeRecord>]) -> Vec<JudgeRecord> {
    let mut joined: BTreeMap<String, JudgeRecord> = BTreeMap::new();
    for batch in batches {
        for r in batch {
            let entry = joined.entry(r.query_id.clone()).or_insert_with(|| JudgeRecord {
                query_id: r.query_id.clone(),
                solved: None,
                judged: None,
                judged_with_gt: None,
                subset: r.subset.clone(),
            });
            entry.solved = r.solved.or(entry.solved);
            entry.judged = r.judged.or(entry.judged);
            entry.judged_with_gt = r.judged_with_gt.or(entry.judged_with_gt);
        }
    }
    joined.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub s_acc: Option<f64>,
    pub j_acc: Option<f64>,
    pub j_acc_gt: Option<f64>,
    /// P(judged wrong | solved); absent when nothing was solved.
    pub gap: Option<f64>,
    pub n_solved: usize,
    pub n_total: usize,
    pub delta_vs_base: Option<f64>,
}

fn fraction(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Computes the gap statistics over joined records. The gap conditions on
/// solved items only, so it is null (never 0) when nothing was solved.
pub fn gap_report(records: &[JudgeRecord], base: Option<&GapReport>) -> GapReport {
    let with_solved: Vec<_> = records.iter().filter(|r| r.solved.is_some()).collect();
    let with_judged: Vec<_> = records.iter().filter(|r| r.judged.is_some()).collect();
    let with_gt: Vec<_> = records.iter().filter(|r| r.judged_with_gt.is_some()).collect();
    let n_solved = with_solved.iter().filter(|r| r.solved == Some(true)).count();
    let s_acc = fraction(n_solved, with_solved.len());
    let j_acc = fraction(
        with_judged.iter().filter(|r| r.judged == Some(true)).count(),
        with_judged.len(),
    );
    let j_acc_gt = fraction(
        with_gt.iter().filter(|r| r.judged_with_gt == Some(true)).count(),
        with_gt.len(),
    );
    let solved_and_judged: Vec<_> = records
        .iter()
        .filter(|r| r.solved == Some(true) && r.judged.is_some())
        .collect();
    let gap = fraction(
        solved_and_judged.iter().filter(|r| r.judged == Some(false)).count(),
        solved_and_judged.len(),
    );
    let delta_vs_base = match (gap, base.and_then(|b| b.gap)) {
        (Some(g), Some(b)) => Some(g - b),
        _ => None,
    };
    GapReport { s_acc, j_acc, j_acc_gt, gap, n_solved, n_total: records.len(), delta_vs_base }
}

/// Per-subset reports plus a separately computed average row.
pub fn gap_reports_by_subset(
    records: &[JudgeRecord],
    base: Option<&BTreeMap<String, GapReport>>,
) -> BTreeMap<String, GapReport> {
    let mut by_subset: BTreeMap<String, Vec<JudgeRecord>> = BTreeMap::new();
    for r in records {
        by_subset.entry(r.subset.clone()).or_default().push(r.clone());
    }
    by_subset
        .into_iter()
        .map(|(subset, rows)| {
            let report = gap_report(&rows, base.and_then(|b| b.get(&subset)));
            (subset, report)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    /// Mean of per-subset statistics; the default.
    Macro,
    /// Pooled over all records regardless of subset.
    Micro,
}

/// Macro average of the per-subset reports: each statistic is the mean over
/// subsets where it is present; gap is the mean of per-subset gaps.
pub fn macro_average(reports: &BTreeMap<String, GapReport>) -> GapReport {
    fn mean_of(values: Vec<f64>) -> Option<f64> {
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
    let pick = |f: fn(&GapReport) -> Option<f64>| {
        mean_of(reports.values().filter_map(f).collect())
    };
    GapReport {
        s_acc: pick(|r| r.s_acc),
        j_acc: pick(|r| r.j_acc),
        j_acc_gt: pick(|r| r.j_acc_gt),
        gap: pick(|r| r.gap),
        n_solved: reports.values().map(|r| r.n_solved).sum(),
        n_total: reports.values().map(|r| r.n_total).sum(),
        delta_vs_base: pick(|r| r.delta_vs_base),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Input(format!("unknown report format {other:?}"))),
        }
    }
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "—".to_string(),
    }
}

fn delta(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:+.1}", v * 100.0),
        None => "—".to_string(),
    }
}

/// Computes the average row for the chosen mode: macro is the per-subset
/// mean, micro pools all records before computing the statistics.
pub fn average_report(
    reports: &BTreeMap<String, GapReport>,
    records: &[JudgeRecord],
    mode: AverageMode,
) -> GapReport {
    match mode {
        AverageMode::Macro => macro_average(reports),
        AverageMode::Micro => gap_report(records, None),
    }
}

/// Renders the per-subset reports plus the average row. Column order is
/// fixed: S-Acc, J-Acc, J-Acc w/ GT, Gap, Δ; percentages at one decimal.
pub fn render_report(
    reports: &BTreeMap<String, GapReport>,
    format: ReportFormat,
    avg: GapReport,
) -> String {
    let mut rows: Vec<(String, &GapReport)> =
        reports.iter().map(|(k, v)| (k.clone(), v)).collect();
    rows.push(("Average".to_string(), &avg));
    match format {
        ReportFormat::Table => {
            let mut out = String::new();
            out.push_str(&format!(
                "{:<24} {:>8} {:>8} {:>12} {:>8} {:>8}\n",
                "Subset", "S-Acc", "J-Acc", "J-Acc w/ GT", "Gap", "Δ"
            ));
            for (name, r) in &rows {
                out.push_str(&format!(
                    "{:<24} {:>8} {:>8} {:>12} {:>8} {:>8}\n",
                    name,
                    pct(r.s_acc),
                    pct(r.j_acc),
                    pct(r.j_acc_gt),
                    pct(r.gap),
                    delta(r.delta_vs_base)
                ));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("subset,s_acc,j_acc,j_acc_gt,gap,delta\n");
            for (name, r) in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    name,
                    pct(r.s_acc),
                    pct(r.j_acc),
                    pct(r.j_acc_gt),
                    pct(r.gap),
                    delta(r.delta_vs_base)
                ));
            }
            out
        }
        ReportFormat::Json => {
            let map: BTreeMap<String, &GapReport> =
                rows.iter().map(|(k, v)| (k.clone(), *v)).collect();
            let mut text = serde_json::to_string_pretty(&map).expect("report serializes");
            text.push('\n');
            text
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::Source;

    fn record(id: &str, subset: &str, solved: Option<bool>, judged: Option<bool>) -> JudgeRecord {
        JudgeRecord {
            query_id: id.into(),
            solved,
            judged,
            judged_with_gt: None,
            subset: subset.into(),
        }
    }

    #[test]
    fn subsample_under_cap_is_identity() {
        let items: Vec<u32> = (0..300).collect();
        let cfg = EvalConfig::default();
        assert_eq!(subsample(&items, &cfg), items);
    }

    #[test]
    fn subsample_hits_cap_exactly_and_is_stable() {
        let items: Vec<u32> = (0..600).collect();
        let cfg = EvalConfig { seed: 7, ..EvalConfig::default() };
        let a = subsample(&items, &cfg);
        let b = subsample(&items, &cfg);
        assert_eq!(a.len(), 512);
        assert_eq!(a, b);
        let other = subsample(&items, &EvalConfig { seed: 8, ..cfg });
        assert_ne!(a, other);
    }

    #[test]
    fn gap_counts_solved_but_misjudged() {
        let records = vec![
            record("1", "s", Some(true), Some(true)),
            record("2", "s", Some(true), Some(true)),
            record("3", "s", Some(true), Some(true)),
            record("4", "s", Some(true), Some(false)),
        ];
        let r = gap_report(&records, None);
        assert!((r.gap.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(r.n_solved, 4);
    }

    #[test]
    fn gap_null_when_nothing_solved() {
        let records = vec![record("1", "s", Some(false), Some(false))];
        let r = gap_report(&records, None);
        assert_eq!(r.gap, None);
        assert_eq!(r.n_solved, 0);
    }

    #[test]
    fn gap_ignores_unsolved_records() {
        let base = vec![
            record("1", "s", Some(true), Some(false)),
            record("2", "s", Some(true), Some(true)),
        ];
        let g1 = gap_report(&base, None).gap;
        let mut more = base.clone();
        for i in 0..50 {
            more.push(record(&format!("u{i}"), "s", Some(false), Some(i % 2 == 0)));
        }
        assert_eq!(gap_report(&more, None).gap, g1);
    }

    #[test]
    fn complement_identity_holds_exactly() {
        let records: Vec<JudgeRecord> = (0..97)
            .map(|i| record(&i.to_string(), "s", Some(true), Some(i % 3 != 0)))
            .collect();
        let r = gap_report(&records, None);
        let p_correct = 1.0 - r.gap.unwrap();
        let direct = records.iter().filter(|x| x.judged == Some(true)).count() as f64 / 97.0;
        assert!((p_correct - direct).abs() < 1e-12);
    }

    #[test]
    fn delta_against_base() {
        let records = vec![
            record("1", "s", Some(true), Some(false)),
            record("2", "s", Some(true), Some(true)),
        ];
        let base = gap_report(&[record("1", "s", Some(true), Some(false))], None);
        let r = gap_report(&records, Some(&base));
        assert!((r.delta_vs_base.unwrap() - (0.5 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn join_merges_fields_by_query() {
        let solving = vec![record("q1", "s", Some(true), None)];
        let judging = vec![record("q1", "s", None, Some(false))];
        let joined = join_records(&[solving, judging]);
        assert_eq!(joined.len(), 1);
        assert_eq!(joined[0].solved, Some(true));
        assert_eq!(joined[0].judged, Some(false));
    }

    #[test]
    fn macro_average_is_mean_of_subsets() {
        let mut records = Vec::new();
        for (subset, fails) in [("a", 337), ("b", 337), ("c", 445)] {
            for i in 0..1000 {
                records.push(record(
                    &format!("{subset}{i}"),
                    subset,
                    Some(true),
                    Some(i >= fails),
                ));
            }
        }
        let reports = gap_reports_by_subset(&records, None);
        let avg = macro_average(&reports);
        assert!((avg.gap.unwrap() - (0.337 + 0.337 + 0.445) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn table_renders_null_gap_as_dash() {
        let mut reports = BTreeMap::new();
        reports.insert("empty".to_string(), gap_report(&[], None));
        let avg = macro_average(&reports);
        let text = render_report(&reports, ReportFormat::Table, avg);
        assert!(text.contains("—"));
        assert!(text.contains("S-Acc"));
    }

    #[test]
    fn csv_and_json_agree_on_values() {
        let records = vec![
            record("1", "s", Some(true), Some(true)),
            record("2", "s", Some(true), Some(false)),
        ];
        let reports = gap_reports_by_subset(&records, None);
        let csv = render_report(&reports, ReportFormat::Csv, macro_average(&reports));
        assert!(csv.contains("s,100.0,50.0,—,50.0,—"));
        let json = render_report(&reports, ReportFormat::Json, macro_average(&reports));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!((parsed["s"]["gap"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    struct CannedProvider {
        by_prompt_contains: Vec<(String, String)>,
    }

    impl CompletionProvider for CannedProvider {
        fn complete(&self, prompt: &str) -> Result<String> {
            for (needle, text) in &self.by_prompt_contains {
                if prompt.contains(needle) {
                    return Ok(text.clone());
                }
            }
            Err(Error::Endpoint("no canned reply".into()))
        }
    }

    fn pair(id: &str, query: &str, label: Verdict) -> PreferencePair {
        PreferencePair {
            id: id.into(),
            query: query.into(),
            response_a: "alpha".into(),
            response_b: "beta".into(),
            label,
            kind: TaskKind::Objective,
            ground_truth: Some("4".into()),
            source: Source::MathDpo,
        }
    }

    #[test]
    fn judging_accuracy_counts_correct_verdicts() {
        let provider = CannedProvider {
            by_prompt_contains: vec![
                ("q-one".into(), "\\boxed{4} so [[A]]".into()),
                ("q-two".into(), "\\boxed{4} so [[A]]".into()),
            ],
        };
        let bench = vec![pair("1", "q-one", Verdict::A), pair("2", "q-two", Verdict::B)];
        let out = evaluate_judging(&provider, &bench, PromptKind::S2jObjective, &EvalConfig::default())
            .unwrap();
        assert_eq!(out.accuracy, Some(0.5));
        assert_eq!(out.failures, 0);
    }

    #[test]
    fn absent_verdict_counts_as_misjudged() {
        let provider = CannedProvider {
            by_prompt_contains: vec![("q-one".into(), "no verdict here".into())],
        };
        let bench = vec![pair("1", "q-one", Verdict::A)];
        let out = evaluate_judging(&provider, &bench, PromptKind::S2jObjective, &EvalConfig::default())
            .unwrap();
        assert_eq!(out.records[0].judged, Some(false));
        assert_eq!(out.accuracy, Some(0.0));
    }

    #[test]
    fn endpoint_failure_excluded_from_denominator() {
        let provider = CannedProvider {
            by_prompt_contains: vec![("q-one".into(), "[[A]]".into())],
        };
        let bench = vec![pair("1", "q-one", Verdict::A), pair("2", "q-unseen", Verdict::A)];
        let out = evaluate_judging(&provider, &bench, PromptKind::S2jObjective, &EvalConfig::default())
            .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.failures, 1);
        assert_eq!(out.accuracy, Some(1.0));
    }

    #[test]
    fn swap_positions_requires_both_orders_correct() {
        // always answers [[A]]: correct forward (label A), wrong when swapped
        let provider = CannedProvider {
            by_prompt_contains: vec![("q-one".into(), "[[A]]".into())],
        };
        let bench = vec![pair("1", "q-one", Verdict::A)];
        let cfg = EvalConfig { swap_positions: true, ..EvalConfig::default() };
        let out = evaluate_judging(&provider, &bench, PromptKind::S2jObjective, &cfg).unwrap();
        assert_eq!(out.records[0].judged, Some(false));
    }

    #[test]
    fn solving_verifies_boxed_answer() {
        let provider = CannedProvider {
            by_prompt_contains: vec![
                ("q-one".into(), "the sum is \\boxed{4}".into()),
                ("q-two".into(), "the sum is \\boxed{5}".into()),
                ("q-three".into(), "no box at all".into()),
            ],
        };
        let bench = vec![
            pair("1", "q-one", Verdict::A),
            pair("2", "q-two", Verdict::A),
            pair("3", "q-three", Verdict::A),
        ];
        let out = evaluate_solving(&provider, &bench, &EvalConfig::default()).unwrap();
        let solved: Vec<_> = out.records.iter().map(|r| r.solved).collect();
        assert_eq!(solved, vec![Some(true), Some(false), Some(false)]);
        assert_eq!(out.accuracy, Some(1.0 / 3.0));
    }

    #[test]
    fn replay_round_trips_live_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let records = vec![CompletionRecord {
            prompt_sha256: prompt_key("p"),
            prompt: "p".into(),
            text: "reply".into(),
        }];
        schema::write_jsonl(&path, COMPLETIONS_SCHEMA, &records).unwrap();
        let replay = ReplayProvider::load(&path).unwrap();
        assert_eq!(replay.complete("p").unwrap(), "reply");
        assert!(matches!(replay.complete("missing"), Err(Error::Endpoint(_))));
    }
}
