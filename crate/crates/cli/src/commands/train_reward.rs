//! Trains the three feedback classifiers (refutation, factuality,
//! politeness) from one file of labeled judgments and saves them as a
//! single checkpoint, printing held-out metrics per aspect.

use std::path::PathBuf;

use clap::Args;

use refute_core::reward::{
    train_classifier, Aspect, AspectClassifiers, ClassifierTrainConfig, FeedbackExample,
    TrainedClassifier,
};

use crate::config::{pick, set};
use crate::engine::names;
use crate::error::{data, CliResult};
use crate::io::{ensure_parent, read_jsonl};
use crate::lock::TrainingLock;
use crate::Ctx;

#[derive(Debug, Args)]
pub struct TrainRewardArgs {
    /// Labeled judgments as JSON lines: {"claim": ..., "evidence": [...],
    /// "response": ..., "label": 0|1, "aspect": "refutation"|"factuality"|"politeness"}.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Classifier checkpoint to write (default: <artifacts>/classifiers.bin).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Hashed bag-of-words feature dimension.
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Relative loss change that stops training early.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Fraction of each class held out for the metrics.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Train with plain cross entropy instead of class-balanced weighting.
    #[arg(long)]
    pub unbalanced: bool,
    /// Print the per-aspect metrics as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(ctx: &Ctx, args: TrainRewardArgs) -> CliResult<()> {
    let _lock = TrainingLock::acquire(&ctx.artifacts_dir())?;
    let examples: Vec<FeedbackExample> = read_jsonl(&args.data, "feedback")?;

    let file = &ctx.file.feedback;
    let mut config = ClassifierTrainConfig::default();
    set(&mut config.feature_dim, args.feature_dim, file.feature_dim);
    set(&mut config.learning_rate, args.learning_rate, file.learning_rate);
    set(&mut config.max_epochs, args.max_epochs, file.max_epochs);
    set(&mut config.tolerance, args.tolerance, file.tolerance);
    set(&mut config.test_fraction, args.test_fraction, file.test_fraction);
    set(&mut config.balanced, args.unbalanced.then_some(false), file.balanced);
    config.seed = pick(ctx.seed, file.seed, config.seed);

    let mut trained: Vec<TrainedClassifier> = Vec::with_capacity(Aspect::ALL.len());
    for aspect in Aspect::ALL {
        let subset: Vec<FeedbackExample> =
            examples.iter().filter(|ex| ex.aspect == aspect).cloned().collect();
        if subset.is_empty() {
            return Err(data(format!(
                "{} has no {} examples; all three aspects need labeled data",
                args.data.display(),
                aspect.name()
            )));
        }
        trained.push(
            train_classifier(&subset, aspect, &config)
                .map_err(|e| data(format!("{} classifier: {e}", aspect.name())))?,
        );
    }

    if args.json {
        let body: serde_json::Map<String, serde_json::Value> = trained
            .iter()
            .zip(Aspect::ALL)
            .map(|(t, aspect)| {
                (
                    aspect.name().to_string(),
                    serde_json::json!({
                        "balanced_accuracy": t.metrics.balanced_accuracy,
                        "accuracy": t.metrics.accuracy,
                        "f1": t.metrics.f1,
                        "precision": t.metrics.precision,
                        "recall": t.metrics.recall,
                        "epochs_run": t.epochs_run,
                        "train_size": t.train_size,
                        "test_size": t.test_size,
                    }),
                )
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Object(body))
                .expect("metrics serialize")
        );
    } else {
        println!(
            "{:<12} {:>8} {:>9} {:>7} {:>10} {:>7} {:>7} {:>6} {:>5}",
            "aspect", "bal.acc", "accuracy", "f1", "precision", "recall", "epochs", "train",
            "test"
        );
        for (t, aspect) in trained.iter().zip(Aspect::ALL) {
            println!(
                "{:<12} {:>8.3} {:>9.3} {:>7.3} {:>10.3} {:>7.3} {:>7} {:>6} {:>5}",
                aspect.name(),
                t.metrics.balanced_accuracy,
                t.metrics.accuracy,
                t.metrics.f1,
                t.metrics.precision,
                t.metrics.recall,
                t.epochs_run,
                t.train_size,
                t.test_size
            );
        }
    }

    let mut parts = trained.into_iter();
    let (refutation, factuality, politeness) = (
        parts.next().expect("three classifiers").classifier,
        parts.next().expect("three classifiers").classifier,
        parts.next().expect("three classifiers").classifier,
    );
    let classifiers = AspectClassifiers::new(refutation, factuality, politeness)
        .map_err(|e| data(e.to_string()))?;

    let out_path = ctx.artifact_path(&args.out, names::CLASSIFIERS);
    ensure_parent(&out_path)?;
    classifiers
        .save(&out_path)
        .map_err(|e| data(format!("cannot write classifiers {}: {e}", out_path.display())))?;
    println!("classifiers written to {}", out_path.display());
    Ok(())
}
