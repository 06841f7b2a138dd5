//! Optimizes a response policy against the composite reward with clipped
//! updates and a KL penalty toward the frozen reference. Prompts are built
//! by retrieving evidence for each claim, and every sampled response is
//! scored by the trained classifiers plus embedding relevance — the same
//! reward `respond` reports.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;

use refute_core::policy::{align, write_curve_csv, AlignConfig, PolicyError};
use refute_core::reward::{compute_reward, RewardConfig};
use refute_core::{PromptTemplate, TwoStagePipeline};

use crate::args::RetrievalArgs;
use crate::config::{pick, set};
use crate::engine::{names, resolve_pipeline};
use crate::error::{data, usage, CliError, CliResult};
use crate::io::{
    ensure_parent, load_classifiers, load_corpus, load_index, load_policy, load_scorer,
    read_jsonl,
};
use crate::lock::TrainingLock;
use crate::Ctx;

#[derive(Debug, serde::Deserialize)]
struct ClaimRecord {
    claim: String,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Claims to practice on, as JSON lines: {"claim": ...}.
    #[arg(long, value_name = "FILE")]
    pub claims: PathBuf,
    /// Frozen reference policy (default: <artifacts>/policy.bin).
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Aligned policy checkpoint to write (default: <artifacts>/aligned.bin).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Optimization curve CSV to write (default: <artifacts>/alignment_curve.csv).
    #[arg(long, value_name = "FILE")]
    pub curve: Option<PathBuf>,
    /// Evidence store (default: <artifacts>/corpus.store).
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Inverted index (default: <artifacts>/index.bin).
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Dense scorer checkpoint (default: <artifacts>/scorer.bin).
    #[arg(long, value_name = "FILE")]
    pub scorer: Option<PathBuf>,
    /// Feedback classifier checkpoint (default: <artifacts>/classifiers.bin).
    #[arg(long, value_name = "FILE")]
    pub classifiers: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// KL penalty coefficient toward the reference policy.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Rollout/update rounds.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Trajectories sampled per round.
    #[arg(long)]
    pub rollouts: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Retune the KL coefficient toward this per-sequence divergence.
    #[arg(long)]
    pub kl_target: Option<f64>,
    /// Scale on the relevance terms of the reward.
    #[arg(long)]
    pub alpha: Option<f64>,
}

pub fn run(ctx: &Ctx, args: AlignArgs) -> CliResult<()> {
    let _lock = TrainingLock::acquire(&ctx.artifacts_dir())?;

    let corpus = load_corpus(&ctx.artifact_path(&args.store, names::STORE))?;
    let index = load_index(&ctx.artifact_path(&args.index, names::INDEX))?;
    let scorer = load_scorer(&ctx.artifact_path(&args.scorer, names::SCORER))?;
    let classifiers = load_classifiers(&ctx.artifact_path(&args.classifiers, names::CLASSIFIERS))?;
    let reference = load_policy(&ctx.artifact_path(&args.reference, names::POLICY))?;
    let claims: Vec<ClaimRecord> = read_jsonl(&args.claims, "claims")?;

    // Render one prompt per claim from its retrieved evidence; the reward
    // closure recovers (claim, evidence) by prompt lookup.
    let pipeline_config = resolve_pipeline(ctx, &args.retrieval)?;
    let pipeline = TwoStagePipeline::new(&index, &corpus, &scorer, pipeline_config)
        .map_err(|e| usage(e.to_string()))?;
    let template = PromptTemplate::default();
    let mut prompts: Vec<String> = Vec::with_capacity(claims.len());
    let mut by_prompt: HashMap<String, (String, Vec<String>)> = HashMap::new();
    let mut skipped = 0usize;
    for record in &claims {
        let documents =
            pipeline.retrieve(&record.claim).map_err(|e| data(format!("retrieval: {e}")))?;
        let evidence: Vec<String> = documents
            .iter()
            .filter_map(|d| corpus.get(&d.doc_id))
            .map(|d| d.evidence_text())
            .collect();
        if evidence.is_empty() {
            skipped += 1;
            continue;
        }
        let prompt = template
            .render(&record.claim, &evidence)
            .map_err(|e| data(format!("prompt for {:?}: {e}", record.claim)))?;
        if by_prompt.insert(prompt.clone(), (record.claim.clone(), evidence)).is_none() {
            prompts.push(prompt);
        }
    }
    if skipped > 0 {
        eprintln!("warning: {skipped} claims retrieved no evidence and were skipped");
    }
    if prompts.is_empty() {
        return Err(data("no claim retrieved any evidence; check the store and index"));
    }

    let mut reward_config = RewardConfig::default();
    set(&mut reward_config.alpha, args.alpha, ctx.file.reward.alpha);
    reward_config.validate().map_err(|e| usage(e.to_string()))?;
    let reward_fn = |prompt: &str, response: &str| -> Result<f64, String> {
        let (claim, evidence) =
            by_prompt.get(prompt).ok_or_else(|| format!("unknown prompt: {prompt:?}"))?;
        compute_reward(&classifiers, &scorer, &reward_config, claim, evidence, response)
            .map(|breakdown| breakdown.total)
            .map_err(|e| e.to_string())
    };

    let file = &ctx.file.align;
    let mut config = AlignConfig::default();
    set(&mut config.ppo.beta, args.beta, file.beta);
    set(&mut config.ppo.learning_rate, args.learning_rate, file.learning_rate);
    set(&mut config.iterations, args.iterations, file.iterations);
    set(&mut config.rollouts_per_iteration, args.rollouts, file.rollouts);
    config.kl_target = args.kl_target.or(file.kl_target);
    config.ppo.seed = pick(ctx.seed, file.seed, config.ppo.seed);

    let outcome = align(&reference, &prompts, &reward_fn, &config).map_err(policy_error)?;

    let stride = (outcome.curve.len() / 10).max(1);
    for point in outcome
        .curve
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == outcome.curve.len())
        .map(|(_, p)| p)
    {
        println!(
            "iteration {:>4}  reward {:>7.4}  kl {:>8.5}  clip {:>5.3}  beta {:>7.4}",
            point.iteration, point.mean_reward, point.mean_kl, point.clip_fraction, point.beta
        );
    }
    if outcome.invalid_rollouts > 0 || outcome.aborted_updates > 0 {
        eprintln!(
            "warning: {} invalid rollouts dropped, {} updates rolled back",
            outcome.invalid_rollouts, outcome.aborted_updates
        );
    }

    let out_path = ctx.artifact_path(&args.out, names::ALIGNED);
    ensure_parent(&out_path)?;
    outcome
        .actor
        .policy
        .save(&out_path)
        .map_err(|e| data(format!("cannot write policy {}: {e}", out_path.display())))?;
    println!("aligned policy written to {}", out_path.display());

    let curve_path = ctx.artifact_path(&args.curve, names::CURVE);
    ensure_parent(&curve_path)?;
    write_curve_csv(&curve_path, &outcome.curve)
        .map_err(|e| data(format!("cannot write curve {}: {e}", curve_path.display())))?;
    println!("optimization curve written to {}", curve_path.display());
    Ok(())
}

fn policy_error(err: PolicyError) -> CliError {
    match &err {
        PolicyError::BadConfig(_) => usage(err.to_string()),
        _ => data(format!("alignment: {err}")),
    }
}
