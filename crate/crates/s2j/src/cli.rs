//! Command-line surface: one subcommand per pipeline stage.
//!
//! Exit codes: 0 success; 1 model/judging failures over threshold or bad
//! pipeline input; 2 configuration error; 3 endpoint or scorer
//! infrastructure error.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::advantage::{export_training_batch, filter_group, RolloutGroup};
use crate::config::{load_config, RunConfig};
use crate::eval::{
    average_report, evaluate_judging, evaluate_solving, gap_reports_by_subset, join_records,
    AverageMode, CompletionProvider, GapReport, JudgeRecord, LiveProvider, ReplayProvider,
    ReportFormat,
};
use crate::gateway::{ChatClient, HttpTransport, ScoreClient};
use crate::prompts::{render_prompt, PromptKind};
use crate::reward::{total_reward, RewardMode, ScoreTriple};
use crate::schema::{
    self, RewardRecord, SampleRecord, SchemaHeader, TrajectoryRecord, PAIR_SCHEMA, RECORD_SCHEMA,
    REWARD_SCHEMA, SAMPLES_SCHEMA, TRAJECTORY_SCHEMA,
};
use crate::sim::{run_comparison, SimConfig};
use crate::synth::{synthesize_pairs, PreferencePair};
use crate::trajectory::{parse_trajectory, TaskKind};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "s2j", about = "Solve-to-judge reward pipeline", version)]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InOut {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize preference pairs from verified generator responses.
    Synth(InOut),
    /// Sample judge trajectories for each pair from a chat endpoint.
    Rollout {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        endpoint: String,
    },
    /// Score trajectories against their pairs under a reward mode.
    Score {
        /// Pair file the trajectories were rolled out from.
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        io: InOut,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<RewardMode>,
        /// Scalar-scorer endpoint for subjective instances.
        #[arg(long)]
        scorer: Option<String>,
    },
    /// Group rewards, apply the uniform-group filter, and export a batch.
    Advantage(InOut),
    /// Judge and solve a benchmark, writing per-query records.
    Evaluate {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        endpoint: Option<String>,
        /// Replay completions from a cache instead of a live endpoint.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Write the completion cache here after a live run.
        #[arg(long)]
        cache_out: Option<PathBuf>,
        #[arg(long, default_value = "s2j_objective", value_parser = PromptKind::parse)]
        prompt: PromptKind,
        /// Also run the solve-only pass so records carry the solved bit.
        #[arg(long)]
        with_solving: bool,
        #[arg(long)]
        swap_positions: bool,
        #[arg(long)]
        cap: Option<usize>,
        /// Exit 1 when the endpoint-failure fraction exceeds this.
        #[arg(long, default_value_t = 0.5)]
        max_failures: f64,
    },
    /// Compute gap statistics from evaluation records.
    GapReport {
        #[command(flatten)]
        io: InOut,
        #[arg(long, default_value = "table", value_parser = ReportFormat::parse)]
        format: ReportFormat,
        /// Pool all records for the average row instead of the per-subset mean.
        #[arg(long)]
        micro: bool,
        /// Baseline gap report (JSON) for the delta column.
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// Train the synthetic policy under all reward modes and compare gaps.
    Simulate {
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Render one prompt to stdout.
    RenderPrompt {
        #[arg(long, value_parser = PromptKind::parse)]
        kind: PromptKind,
        #[arg(long)]
        query: String,
        #[arg(long)]
        answer_a: Option<String>,
        #[arg(long)]
        answer_b: Option<String>,
        #[arg(long)]
        ground_truth: Option<String>,
    },
}

fn parse_mode(name: &str) -> std::result::Result<RewardMode, String> {
    match name {
        "s2j" => Ok(RewardMode::S2j),
        "judge_only" => Ok(RewardMode::JudgeOnly),
        "solve_only" => Ok(RewardMode::SolveOnly),
        other => Err(format!("unknown reward mode {other:?} (s2j, judge_only, solve_only)")),
    }
}

/// Maps an error onto the exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Endpoint(_) | Error::Request(_) | Error::Scorer(_) => 3,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    config.validate()?;
    if let Some(seed) = cli.seed {
        config.synth.seed = seed;
        config.eval.seed = seed;
        config.sim.seed = seed;
    }
    match cli.command {
        Command::Synth(io) => cmd_synth(&config, &io),
        Command::Rollout { io, endpoint } => cmd_rollout(&config, &io, &endpoint),
        Command::Score { pairs, io, mode, scorer } => cmd_score(&config, &pairs, &io, mode, scorer),
        Command::Advantage(io) => cmd_advantage(&config, &io),
        Command::Evaluate {
            io,
            endpoint,
            replay,
            cache_out,
            prompt,
            with_solving,
            swap_positions,
            cap,
            max_failures,
        } => cmd_evaluate(
            &config,
            &io,
            endpoint.as_deref(),
            replay.as_deref(),
            cache_out.as_deref(),
            prompt,
            with_solving,
            swap_positions,
            cap,
            max_failures,
        ),
        Command::GapReport { io, format, micro, base } => {
            cmd_gap_report(&io, format, micro, base.as_deref())
        }
        Command::Simulate { trials, steps, output } => {
            cmd_simulate(&config, trials, steps, output.as_deref())
        }
        Command::RenderPrompt { kind, query, answer_a, answer_b, ground_truth } => {
            let text = render_prompt(
                kind,
                &query,
                answer_a.as_deref(),
                answer_b.as_deref(),
                ground_truth.as_deref(),
            )?;
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_synth(config: &RunConfig, io: &InOut) -> Result<()> {
    let (_, samples): (_, Vec<SampleRecord>) = schema::read_jsonl(&io.input, SAMPLES_SCHEMA)?;
    let mut pairs = Vec::new();
    let mut discarded = 0usize;
    for s in &samples {
        let made = synthesize_pairs(&s.query, &s.ground_truth, &s.responses, &config.synth)?;
        if made.is_empty() {
            discarded += 1;
        }
        pairs.extend(made);
    }
    schema::write_jsonl(&io.output, PAIR_SCHEMA, &pairs)?;
    eprintln!(
        "synth: {} pairs from {} queries ({discarded} discarded single-sided)",
        pairs.len(),
        samples.len()
    );
    Ok(())
}

fn cmd_rollout(config: &RunConfig, io: &InOut, endpoint: &str) -> Result<()> {
    let endpoint = config.endpoint(endpoint)?.clone();
    let client = ChatClient::new(endpoint, Arc::new(HttpTransport::new()))?;
    let (_, pairs): (_, Vec<PreferencePair>) = schema::read_jsonl(&io.input, PAIR_SCHEMA)?;
    let group_size = config.advantage.group_size;
    let mut records = Vec::new();
    for pair in &pairs {
        let kind = match pair.kind {
            TaskKind::Objective => PromptKind::S2jObjective,
            TaskKind::Subjective => PromptKind::S2jSubjective,
        };
        let prompt = render_prompt(
            kind,
            &pair.query,
            Some(&pair.response_a),
            Some(&pair.response_b),
            None,
        )?;
        let prompts = vec![prompt; group_size];
        for (i, result) in client.complete_batch(&prompts, &config.sampling).into_iter().enumerate()
        {
            let text = result?.text;
            let traj = parse_trajectory(&text, pair.kind);
            records.push(TrajectoryRecord {
                instance_id: pair.id.clone(),
                rollout_index: i,
                raw_text: text,
                self_solution: traj.self_solution,
                verdict: traj.verdict,
                kind: pair.kind,
            });
        }
    }
    schema::write_jsonl(&io.output, TRAJECTORY_SCHEMA, &records)?;
    Ok(())
}

fn cmd_score(
    config: &RunConfig,
    pairs_path: &Path,
    io: &InOut,
    mode: Option<RewardMode>,
    scorer: Option<String>,
) -> Result<()> {
    let mode = mode.unwrap_or(config.reward_mode);
    let (_, pairs): (_, Vec<PreferencePair>) = schema::read_jsonl(pairs_path, PAIR_SCHEMA)?;
    let by_id: std::collections::HashMap<&str, &PreferencePair> =
        pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let (_, trajectories): (_, Vec<TrajectoryRecord>) =
        schema::read_jsonl(&io.input, TRAJECTORY_SCHEMA)?;
    let score_client = match scorer {
        Some(name) => Some(ScoreClient::new(
            config.endpoint(&name)?.clone(),
            Arc::new(HttpTransport::new()),
        )?),
        None => None,
    };
    let mut records = Vec::new();
    for t in &trajectories {
        let pair = by_id.get(t.instance_id.as_str()).ok_or_else(|| {
            Error::Input(format!("trajectory references unknown instance {}", t.instance_id))
        })?;
        let traj = parse_trajectory(&t.raw_text, t.kind);
        let scores = match (pair.kind, mode, &score_client) {
            // judging-only needs no aux scores
            (_, RewardMode::JudgeOnly, _) | (TaskKind::Objective, _, _) => None,
            (TaskKind::Subjective, _, Some(client)) => {
                match subjective_scores(client, pair, traj.self_solution.as_deref()) {
                    Ok(s) => Some(s),
                    // scorer down: fall back to the gate-failure path so the
                    // trajectory still earns its judgment reward
                    Err(Error::Scorer(msg)) => {
                        eprintln!("warning: scorer failed for {}: {msg}; using gate-failure fallback", pair.id);
                        Some(ScoreTriple { s_better: 0.0, s_worse: 0.0, s_self: 0.0 })
                    }
                    Err(e) => return Err(e),
                }
            }
            (TaskKind::Subjective, _, None) => {
                return Err(Error::Config(format!(
                    "subjective instance {} needs --scorer in {} mode",
                    pair.id, mode
                )));
            }
        };
        let breakdown = total_reward(&traj, pair, scores, mode)?;
        records.push(RewardRecord {
            instance_id: t.instance_id.clone(),
            rollout_index: t.rollout_index,
            r_solve: breakdown.r_solve,
            r_judge: breakdown.r_judge,
            total: breakdown.total,
            mode,
        });
    }
    schema::write_jsonl(&io.output, REWARD_SCHEMA, &records)?;
    Ok(())
}

fn subjective_scores(
    client: &ScoreClient,
    pair: &PreferencePair,
    self_solution: Option<&str>,
) -> Result<ScoreTriple> {
    let (better, worse) = match pair.label {
        crate::trajectory::Verdict::A => (&pair.response_a, &pair.response_b),
        crate::trajectory::Verdict::B => (&pair.response_b, &pair.response_a),
    };
    let s_better = client.score(&pair.query, better)?;
    let s_worse = client.score(&pair.query, worse)?;
    // no self-solution cannot pass the closeness test; score it as the worse
    // response so the indicator is false
    let s_self = match self_solution {
        Some(text) => client.score(&pair.query, text)?,
        None => s_worse,
    };
    Ok(ScoreTriple { s_better, s_worse, s_self })
}

fn cmd_advantage(config: &RunConfig, io: &InOut) -> Result<()> {
    let (_, rewards): (_, Vec<RewardRecord>) = schema::read_jsonl(&io.input, REWARD_SCHEMA)?;
    let mut by_instance: BTreeMap<String, Vec<&RewardRecord>> = BTreeMap::new();
    for r in &rewards {
        by_instance.entry(r.instance_id.clone()).or_default().push(r);
    }
    let mut groups = Vec::new();
    for (instance_id, mut rows) in by_instance {
        rows.sort_by_key(|r| r.rollout_index);
        let group = RolloutGroup {
            instance_id,
            prompt: String::new(),
            responses: rows.iter().map(|r| r.rollout_index.to_string()).collect(),
            rewards: rows.iter().map(|r| r.total).collect(),
            advantages: None,
            kept: false,
        };
        groups.push(filter_group(group, &config.advantage)?);
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(&io.output)?);
    export_training_batch(&groups, &config.advantage, &mut out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    config: &RunConfig,
    io: &InOut,
    endpoint: Option<&str>,
    replay: Option<&Path>,
    cache_out: Option<&Path>,
    prompt: PromptKind,
    with_solving: bool,
    swap_positions: bool,
    cap: Option<usize>,
    max_failures: f64,
) -> Result<()> {
    let mut eval_cfg = config.eval;
    eval_cfg.swap_positions = swap_positions || eval_cfg.swap_positions;
    if let Some(cap) = cap {
        eval_cfg.subsample_cap = cap;
    }
    let (_, pairs): (_, Vec<PreferencePair>) = schema::read_jsonl(&io.input, PAIR_SCHEMA)?;

    let run = |provider: &dyn CompletionProvider| -> Result<(Vec<JudgeRecord>, usize, usize)> {
        let judging = evaluate_judging(provider, &pairs, prompt, &eval_cfg)?;
        let mut batches = vec![judging.records];
        let mut failures = judging.failures;
        let mut attempted = pairs.len().min(eval_cfg.subsample_cap);
        if with_solving {
            let solvable: Vec<PreferencePair> =
                pairs.iter().filter(|p| p.ground_truth.is_some()).cloned().collect();
            let solving = evaluate_solving(provider, &solvable, &eval_cfg)?;
            failures += solving.failures;
            attempted += solvable.len().min(eval_cfg.subsample_cap);
            batches.push(solving.records);
        }
        Ok((join_records(&batches), failures, attempted))
    };

    let (records, failures, attempted) = match (replay, endpoint) {
        (Some(cache), _) => {
            let provider = ReplayProvider::load(cache)?;
            run(&provider)?
        }
        (None, Some(name)) => {
            let client =
                ChatClient::new(config.endpoint(name)?.clone(), Arc::new(HttpTransport::new()))?;
            let provider = LiveProvider::new(&client, config.sampling);
            let out = run(&provider)?;
            if let Some(path) = cache_out {
                provider.dump_cache(path)?;
            }
            out
        }
        (None, None) => {
            return Err(Error::Config("evaluate needs --endpoint or --replay".into()));
        }
    };
    schema::write_jsonl(&io.output, RECORD_SCHEMA, &records)?;
    if attempted > 0 && failures as f64 / attempted as f64 > max_failures {
        return Err(Error::Input(format!(
            "{failures} of {attempted} evaluations failed, over the {max_failures} threshold"
        )));
    }
    Ok(())
}

fn cmd_gap_report(
    io: &InOut,
    format: ReportFormat,
    micro: bool,
    base: Option<&Path>,
) -> Result<()> {
    let (_, records): (_, Vec<JudgeRecord>) = schema::read_jsonl(&io.input, RECORD_SCHEMA)?;
    let base_reports: Option<BTreeMap<String, GapReport>> = match base {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let reports = gap_reports_by_subset(&records, base_reports.as_ref());
    let mode = if micro { AverageMode::Micro } else { AverageMode::Macro };
    let avg = average_report(&reports, &records, mode);
    let text = crate::eval::render_report(&reports, format, avg);
    std::fs::write(&io.output, &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_simulate(
    config: &RunConfig,
    trials: usize,
    steps: Option<usize>,
    output: Option<&Path>,
) -> Result<()> {
    let sim = SimConfig { steps: steps.unwrap_or(config.sim.steps), ..config.sim.clone() };
    let report = run_comparison(&sim, trials)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    if let Some(path) = output {
        std::fs::write(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

/// Writes a `samples.v1` file; used by tests and small fixtures.
pub fn write_samples(path: &Path, samples: &[SampleRecord]) -> Result<()> {
    schema::write_jsonl(path, SAMPLES_SCHEMA, samples)
}

/// Writes a `pair.v1` file with a header carrying the pair count.
pub fn write_pairs(path: &Path, pairs: &[PreferencePair]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = SchemaHeader::new(PAIR_SCHEMA)
        .with_extra(serde_json::json!({ "count": pairs.len() }));
    schema::write_header(&mut out, &header)?;
    for p in pairs {
        schema::write_record(&mut out, p)?;
    }
    Ok(())
}
