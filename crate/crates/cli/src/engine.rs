//! Builds the engine from saved artifacts plus resolved settings. Both
//! `respond` and `serve` construct it here, so the command line and the
//! HTTP service run the exact same machinery.

use std::path::PathBuf;
use std::time::Duration;

use refute_core::lexical::Bm25Params;
use refute_core::orchestrate::{EngineConfig, RetryPolicy};
use refute_core::reward::RewardConfig;
use refute_core::{Engine, PipelineConfig, PromptTemplate};

use crate::args::{ArtifactArgs, GenerationArgs, RetrievalArgs};
use crate::backend::BackendChoice;
use crate::config::{pick, set};
use crate::error::{data, usage, CliResult};
use crate::io::{load_classifiers, load_corpus, load_index, load_scorer};
use crate::Ctx;

/// Conventional artifact file names under the artifact directory.
pub mod names {
    pub const STORE: &str = "corpus.store";
    pub const INDEX: &str = "index.bin";
    pub const SCORER: &str = "scorer.bin";
    pub const CLASSIFIERS: &str = "classifiers.bin";
    pub const POLICY: &str = "policy.bin";
    pub const ALIGNED: &str = "aligned.bin";
    pub const CURVE: &str = "alignment_curve.csv";
}

/// Final retrieval shape from flags, file, and defaults.
pub fn resolve_pipeline(ctx: &Ctx, args: &RetrievalArgs) -> CliResult<PipelineConfig> {
    let mut config = PipelineConfig::default();
    let file = &ctx.file.retrieval;
    set(&mut config.m, args.m, file.m);
    set(&mut config.k_out, args.k, file.k);
    set(&mut config.bm25.k1, args.k1, file.k1);
    set(&mut config.bm25.b, args.b, file.b);
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

/// Lexical scoring constants alone (for index-only commands).
pub fn resolve_bm25(ctx: &Ctx, args: &RetrievalArgs) -> CliResult<Bm25Params> {
    let mut params = Bm25Params::default();
    let file = &ctx.file.retrieval;
    set(&mut params.k1, args.k1, file.k1);
    set(&mut params.b, args.b, file.b);
    params.validate().map_err(usage)?;
    Ok(params)
}

pub fn resolve_backend(ctx: &Ctx, args: &GenerationArgs, policy: &Option<PathBuf>) -> CliResult<BackendChoice> {
    let file = &ctx.file.generation;
    let kind = args.backend.clone().or_else(|| file.backend.clone());
    let policy_path = policy
        .clone()
        .or_else(|| Some(ctx.artifact_path(&None, names::ALIGNED)));
    BackendChoice::resolve(
        kind.as_deref(),
        args.stub_text.clone().or_else(|| file.stub_text.clone()),
        policy_path,
        args.url.clone().or_else(|| file.url.clone()),
    )
}

/// Loads every artifact, assembles the engine, and registers artifact
/// hashes for `/health`.
pub fn build_engine(
    ctx: &Ctx,
    artifacts: &ArtifactArgs,
    retrieval: &RetrievalArgs,
    generation: &GenerationArgs,
    alpha: Option<f64>,
) -> CliResult<Engine> {
    let store_path = ctx.artifact_path(&artifacts.store, names::STORE);
    let index_path = ctx.artifact_path(&artifacts.index, names::INDEX);
    let scorer_path = ctx.artifact_path(&artifacts.scorer, names::SCORER);
    let classifiers_path = ctx.artifact_path(&artifacts.classifiers, names::CLASSIFIERS);

    let corpus = load_corpus(&store_path)?;
    let index = load_index(&index_path)?;
    let scorer = load_scorer(&scorer_path)?;
    let classifiers = load_classifiers(&classifiers_path)?;

    let gen_file = &ctx.file.generation;
    let mut reward = RewardConfig::default();
    set(&mut reward.alpha, alpha, ctx.file.reward.alpha);
    let config = EngineConfig {
        pipeline: resolve_pipeline(ctx, retrieval)?,
        reward,
        max_tokens: pick(generation.max_tokens, gen_file.max_tokens, 64),
        temperature: pick(generation.gen_temperature, gen_file.temperature, 0.0),
        timeout: Duration::from_millis(pick(generation.timeout_ms, gen_file.timeout_ms, 10_000)),
        retry: RetryPolicy {
            retries: pick(generation.retries, gen_file.retries, 2),
            base_delay: Duration::from_millis(pick(
                generation.retry_delay_ms,
                gen_file.retry_delay_ms,
                100,
            )),
        },
    };

    let choice = resolve_backend(ctx, generation, &artifacts.policy)?;
    let policy_registration = match &choice {
        BackendChoice::Policy { path } => Some(path.clone()),
        _ => None,
    };
    let backend = choice.build()?;

    let mut engine =
        Engine::new(corpus, index, scorer, classifiers, PromptTemplate::default(), backend, config)
            .map_err(|e| usage(e.to_string()))?;

    let mut registrations = vec![
        ("store", store_path),
        ("index", index_path),
        ("scorer", scorer_path),
        ("classifiers", classifiers_path),
    ];
    if let Some(path) = policy_registration {
        registrations.push(("policy", path));
    }
    for (name, path) in registrations {
        engine
            .register_artifact(name, &path)
            .map_err(|e| data(format!("cannot hash artifact {}: {e}", path.display())))?;
    }
    Ok(engine)
}
