//! Release gate: every guarantee the engine ships with, checked end to end.
//!
//! Each test covers one numbered guarantee and prints a `[criterion NN] PASS`
//! line with the values it measured (visible under `--nocapture`); the test
//! names are numbered so the harness reports them in order. Tolerances and
//! time budgets are pinned as constants next to the test that uses them.
//! Every check runs on synthetic data generated in-process, except the last,
//! which evaluates a user-supplied dataset when `REFUTE_EVAL_DIR` is set and
//! only reports (never fails on) the measured baseline quality.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use refute_core::dense::{
    loss_eq1, train, RetrieverTrainBatch, RetrieverTrainConfig,
};
use refute_core::lexical::{tokenize_with, Bm25Params, InvertedIndex, Stage};
use refute_core::orchestrate::PromptTemplate;
use refute_core::pipeline::{
    evaluate_lexical, evaluate_two_stage, ndcg_at_k, recall_at_k, EvalExample,
};
use refute_core::policy::{
    align, exact_sequence_kl, rollout, ActorPolicy, AlignConfig, Policy, PpoConfig, ToyEnvSpec,
};
use refute_core::reward::{
    compute_reward, train_classifier, Aspect, AspectClassifiers, ClassifierTrainConfig,
    FeedbackClassifier, RewardConfig,
};
use refute_core::synthetic::{
    imbalanced_feedback, planted_benchmark, random_corpus, random_queries, separable_feedback,
    PlantedConfig,
};
use refute_core::corpus::{ingest, IngestOutcome};
use refute_core::{DenseScorer, EmbeddingConfig, EvidenceDocument, PipelineConfig};

// ---------------------------------------------------------------------------
// 1. Indexed BM25 retrieval equals exhaustive brute-force scoring.
// ---------------------------------------------------------------------------

const C1_CORPORA: usize = 20;
const C1_QUERIES_PER_CORPUS: usize = 50;
const C1_TOP: usize = 20;
const C1_SCORE_TOL: f64 = 1e-12;
const C1_BUDGET_SECS: f64 = 10.0;

/// Reassembles BM25 from the printed formulas over raw token counts: no
/// postings, no index — every document is scored against every query.
struct BruteForceBm25 {
    doc_ids: Vec<String>,
    term_counts: Vec<HashMap<String, usize>>,
    doc_lengths: Vec<usize>,
    avg_len: f64,
    doc_frequency: HashMap<String, usize>,
}

impl BruteForceBm25 {
    fn build(docs: &[(String, String)], tokenizer: &refute_core::lexical::TokenizerConfig) -> Self {
        let mut term_counts = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut doc_frequency: HashMap<String, usize> = HashMap::new();
        for (_, text) in docs {
            let tokens = tokenize_with(text, tokenizer);
            doc_lengths.push(tokens.len());
            let mut counts: HashMap<String, usize> = HashMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            for term in counts.keys() {
                *doc_frequency.entry(term.clone()).or_insert(0) += 1;
            }
            term_counts.push(counts);
        }
        let avg_len =
            doc_lengths.iter().sum::<usize>() as f64 / doc_lengths.len().max(1) as f64;
        Self {
            doc_ids: docs.iter().map(|(id, _)| id.clone()).collect(),
            term_counts,
            doc_lengths,
            avg_len,
            doc_frequency,
        }
    }

    fn score(&self, query_tokens: &[String], doc: usize, params: &Bm25Params) -> f64 {
        let n = self.doc_ids.len() as f64;
        let mut score = 0.0;
        for token in query_tokens {
            let Some(&tf) = self.term_counts[doc].get(token) else { continue };
            let df = self.doc_frequency[token] as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let tf = tf as f64;
            let norm = 1.0 - params.b + params.b * self.doc_lengths[doc] as f64 / self.avg_len;
            // The saturation factor is a single rounded quantity scaled by
            // idf; evaluating it the same way keeps true score ties exactly
            // tied, so the id tie-break is exercised rather than defeated by
            // last-ulp reassociation noise.
            let saturation = tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
            score += idf * saturation;
        }
        score
    }

    /// Top `limit` by (score desc, doc_id asc) over matched documents, then
    /// unmatched documents padded in ascending id order.
    fn top(&self, query_tokens: &[String], limit: usize, params: &Bm25Params) -> Vec<(String, f64)> {
        let mut matched: Vec<(String, f64)> = (0..self.doc_ids.len())
            .map(|i| (self.doc_ids[i].clone(), self.score(query_tokens, i, params)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        matched.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        matched.truncate(limit);
        if matched.len() < limit {
            let mut rest: Vec<String> = self
                .doc_ids
                .iter()
                .filter(|id| !matched.iter().any(|(m, _)| m == *id))
                .cloned()
                .collect();
            rest.sort();
            for id in rest.into_iter().take(limit - matched.len()) {
                matched.push((id, 0.0));
            }
        }
        matched
    }
}

#[test]
fn c01_indexed_bm25_matches_brute_force() {
    let t0 = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut compared = 0usize;
    for trial in 0..C1_CORPORA {
        let n_docs = 50 + trial * 50; // 50..=1000
        let vocab = 25 + trial * 12;
        let corpus = random_corpus(n_docs, vocab, 9_000 + trial as u64);
        let index = InvertedIndex::build(&corpus).unwrap();
        let params = Bm25Params {
            k1: 0.4 + 0.12 * trial as f64,
            b: (trial as f64) / (C1_CORPORA - 1) as f64,
        };

        let docs: Vec<(String, String)> =
            corpus.iter().map(|d| (d.doc_id.clone(), d.evidence_text())).collect();
        let oracle = BruteForceBm25::build(&docs, index.tokenizer());

        for (qi, query) in
            random_queries(C1_QUERIES_PER_CORPUS, vocab, 17_000 + trial as u64).iter().enumerate()
        {
            let got = index.retrieve_top_m(query, C1_TOP, &params);
            let tokens = index.tokenize_query(query);
            let want = oracle.top(&tokens, C1_TOP, &params);
            assert_eq!(got.len(), want.len(), "trial {trial} query {qi}: result size");
            for (rank, (g, w)) in got.iter().zip(&want).enumerate() {
                assert_eq!(g.stage, Stage::Lexical);
                assert_eq!(
                    g.doc_id, w.0,
                    "trial {trial} query {qi} rank {rank}: index returned {} but brute force says {}",
                    g.doc_id, w.0
                );
                let gap = (g.score - w.1).abs();
                assert!(
                    gap <= C1_SCORE_TOL,
                    "trial {trial} query {qi} rank {rank}: score gap {gap:e} > {C1_SCORE_TOL:e}"
                );
                worst_gap = worst_gap.max(gap);
                compared += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < C1_BUDGET_SECS, "took {secs:.1}s, budget {C1_BUDGET_SECS}s");
    println!(
        "[criterion 01] PASS bm25 vs brute force: {C1_CORPORA} corpora x {C1_QUERIES_PER_CORPUS} \
         queries, {compared} ranked entries identical, worst score gap {worst_gap:.2e} \
         (tol {C1_SCORE_TOL:.0e}), {secs:.1}s"
    );
}

// ---------------------------------------------------------------------------
// 2. Analytic contrastive-loss gradients match central finite differences.
// ---------------------------------------------------------------------------

const C2_INSTANCES: usize = 100;
const C2_REL_TOL: f64 = 1e-4;
const C2_FD_STEP: f64 = 1e-6;
/// Instances whose hinge argument or positive-max margin sits closer than
/// this to a kink are re-drawn: finite differences straddle the
/// non-differentiable point there and measure nothing about the gradient.
const C2_KINK_MARGIN: f64 = 1e-3;
/// Absolute disagreement bound, set by what central differences can resolve:
/// the loss is O(0.1), so each FD entry carries rounding noise of roughly
/// ulp(loss)/(2h) ≈ 1e-11 — and some draws (a saturated softmax, or every
/// document in one hash bucket) have true gradients at or below that level.
/// Down there the relative test compares measurement noise with itself, so
/// differences under this bound are accepted outright. A genuinely wrong
/// formula cannot hide behind it: it would also miss on the ordinary draws,
/// whose gradient norms are O(1)..O(100).
const C2_ABS_TOL: f64 = 1e-9;
const C2_BUDGET_SECS: f64 = 30.0;

#[test]
fn c02_contrastive_gradient_matches_finite_differences() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let doc = |id: &str, title: String| EvidenceDocument {
        doc_id: id.to_string(),
        title,
        abstract_text: String::new(),
        source: "fd".into(),
        ingest_time: 0,
    };

    let mut checked = 0usize;
    let mut attempts = 0usize;
    let mut worst_rel = 0.0f64;
    let mut below_resolution = 0usize;
    while checked < C2_INSTANCES {
        attempts += 1;
        assert!(attempts < 10 * C2_INSTANCES, "kink filter rejected too many draws");

        let scorer = DenseScorer::with_random_projection(
            EmbeddingConfig { dim: 8, ..Default::default() },
            rng.random_range(0.4..1.2),
            attempts as u64,
        )
        .unwrap();
        let k = rng.random_range(1..=3usize);
        let mut word = || format!("w{}", rng.random_range(0..40usize));
        let claim = format!("{} {}", word(), word());
        let batch = RetrieverTrainBatch::new(
            claim.clone(),
            doc("g", word()),
            (0..k).map(|i| doc(&format!("p{i}"), word())).collect(),
            (0..k).map(|i| doc(&format!("n{i}"), word())).collect(),
        )
        .unwrap();
        let tau = rng.random_range(0.1..0.5);
        let lambda = rng.random_range(0.0..0.5);

        // Kink filter, from public scores only.
        let rel = |d: &EvidenceDocument| scorer.relevance(&claim, &d.evidence_text());
        let mut pos: Vec<f64> = batch.positives.iter().map(rel).collect();
        pos.sort_by(|a, b| b.total_cmp(a));
        let hinge_arg = pos[0] - rel(&batch.gold) + tau;
        if hinge_arg.abs() < C2_KINK_MARGIN {
            continue;
        }
        if hinge_arg > 0.0 && pos.len() > 1 && (pos[0] - pos[1]).abs() < C2_KINK_MARGIN {
            continue;
        }

        let out = loss_eq1(&scorer, &batch, tau, lambda).unwrap();
        let mut fd = out.grad.clone();
        let nudged = |r: usize, c: usize, delta: f64| {
            let mut m = scorer.projection().clone();
            m[[r, c]] += delta;
            let s = DenseScorer::from_projection(scorer.config().clone(), m).unwrap();
            loss_eq1(&s, &batch, tau, lambda).unwrap().loss
        };
        for r in 0..8 {
            for c in 0..8 {
                fd[[r, c]] =
                    (nudged(r, c, C2_FD_STEP) - nudged(r, c, -C2_FD_STEP)) / (2.0 * C2_FD_STEP);
            }
        }
        let diff = (&out.grad - &fd).mapv(|x| x * x).sum().sqrt();
        let scale = fd
            .mapv(|x| x * x)
            .sum()
            .sqrt()
            .max(out.grad.mapv(|x| x * x).sum().sqrt());
        assert!(
            diff <= (C2_REL_TOL * scale).max(C2_ABS_TOL),
            "instance {checked} (attempt {attempts}): gradient gap {diff:e} vs scale {scale:e} \
             (tau {tau:.3}, lambda {lambda:.3}, k {k})"
        );
        if C2_REL_TOL * scale >= C2_ABS_TOL {
            worst_rel = worst_rel.max(diff / scale);
        } else {
            below_resolution += 1;
        }
        checked += 1;
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < C2_BUDGET_SECS, "took {secs:.1}s, budget {C2_BUDGET_SECS}s");
    println!(
        "[criterion 02] PASS gradient check: {C2_INSTANCES} random instances \
         ({attempts} drawn), worst rel err {worst_rel:.2e} (tol {C2_REL_TOL:.0e}), \
         {below_resolution} near-zero gradients under the {C2_ABS_TOL:.0e} absolute bound, \
         {secs:.1}s"
    );
}

// ---------------------------------------------------------------------------
// 3. Training the dense reranker lifts retrieval on the planted benchmark.
// ---------------------------------------------------------------------------

const C3_TRAINED_N1_MIN: f64 = 0.8;
const C3_UNTRAINED_N1_MAX: f64 = 0.3;
const C3_BUDGET_SECS: f64 = 180.0;

#[test]
fn c03_trained_reranker_lifts_planted_benchmark() {
    let t0 = Instant::now();
    let bench = planted_benchmark(&PlantedConfig {
        docs: 2000,
        concepts: 40,
        topics: 5,
        train_claims: 200,
        eval_claims: 100,
        filler_pool: 30,
        doc_fillers: 4,
        claim_fillers: 0,
        seed: 17,
    })
    .unwrap();
    let index = InvertedIndex::build(&bench.corpus).unwrap();
    let pipe_cfg = PipelineConfig::default();
    let emb = EmbeddingConfig { dim: 1024, temperature: 0.2, ..Default::default() };

    let untrained = DenseScorer::new(emb.clone()).unwrap();
    let before =
        evaluate_two_stage(&index, &bench.corpus, &untrained, &bench.eval, &pipe_cfg).unwrap();
    let bm25 =
        evaluate_lexical(&index, &bench.corpus, &bench.eval, pipe_cfg.m, &pipe_cfg.bm25).unwrap();

    let train_cfg = RetrieverTrainConfig {
        learning_rate: 0.1,
        weight_decay: 0.1,
        k: 5,
        tau: 1.0,
        epochs: 5,
        warmup_steps: 100,
        seed: 42,
        ..Default::default()
    };
    let out = train(DenseScorer::new(emb).unwrap(), &bench.train, &bench.corpus, &index, &train_cfg)
        .unwrap();
    let after =
        evaluate_two_stage(&index, &bench.corpus, &out.scorer, &bench.eval, &pipe_cfg).unwrap();

    let secs = t0.elapsed().as_secs_f64();
    assert!(
        before.metric("n@1") <= C3_UNTRAINED_N1_MAX,
        "untrained reranker scores n@1 {:.3} > {C3_UNTRAINED_N1_MAX}",
        before.metric("n@1"),
    );
    assert!(
        after.metric("n@1") >= C3_TRAINED_N1_MIN,
        "trained reranker scores n@1 {:.3} < {C3_TRAINED_N1_MIN}",
        after.metric("n@1"),
    );
    assert!(
        after.metric("n@5") >= bm25.metric("n@5"),
        "reranked n@5 {:.3} fell below lexical-only n@5 {:.3}",
        after.metric("n@5"),
        bm25.metric("n@5"),
    );
    assert!(secs < C3_BUDGET_SECS, "took {secs:.1}s, budget {C3_BUDGET_SECS}s");
    println!(
        "[criterion 03] PASS reranker lift: trained n@1 {:.3} (>= {C3_TRAINED_N1_MIN}), \
         untrained n@1 {:.3} (<= {C3_UNTRAINED_N1_MAX}), reranked n@5 {:.3} >= bm25 n@5 {:.3}, \
         {secs:.1}s",
        after.metric("n@1"),
        before.metric("n@1"),
        after.metric("n@5"),
        bm25.metric("n@5"),
    );
}

// ---------------------------------------------------------------------------
// 4. Ranking metrics match their direct formulas.
// ---------------------------------------------------------------------------

const C4_CASES: usize = 1000;
const C4_TOL: f64 = 1e-9;

#[test]
fn c04_ranking_metrics_match_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..C4_CASES {
        let k = rng.random_range(1..=20usize);
        let rank: Option<usize> =
            if rng.random_range(0..5) == 0 { None } else { Some(rng.random_range(1..=30usize)) };

        let direct_ndcg = match rank {
            Some(r) if r <= k => 1.0 / ((r + 1) as f64).log2(),
            _ => 0.0,
        };
        let direct_recall = match rank {
            Some(r) if r <= k => 1.0,
            _ => 0.0,
        };
        let n = ndcg_at_k(rank, k).unwrap();
        let r = recall_at_k(rank, k).unwrap();
        let gap = (n - direct_ndcg).abs().max((r - direct_recall).abs());
        assert!(gap <= C4_TOL, "case {case}: rank {rank:?} k {k} gap {gap:e}");
        worst = worst.max(gap);

        // At cutoff 1 the two metrics are the same indicator, bit for bit.
        assert_eq!(
            ndcg_at_k(rank, 1).unwrap(),
            recall_at_k(rank, 1).unwrap(),
            "case {case}: n@1 != r@1 at rank {rank:?}"
        );
    }
    println!(
        "[criterion 04] PASS metric formulas: {C4_CASES} randomized cases, worst gap \
         {worst:.2e} (tol {C4_TOL:.0e}), n@1 == r@1 on every case"
    );
}

// ---------------------------------------------------------------------------
// 5. Reward composition: additive, reduces at alpha = 0, monotone per part.
// ---------------------------------------------------------------------------

const C5_EVALS: usize = 1000;
const C5_TOL: f64 = 1e-9;
const C5_PERTURBATION_PAIRS: usize = 100;

#[test]
fn c05_reward_composition_additive_and_monotone() {
    let scorer = DenseScorer::new(EmbeddingConfig { dim: 64, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let text = |rng: &mut ChaCha8Rng| -> String {
        let len = rng.random_range(2..6usize);
        (0..len).map(|_| format!("t{}", rng.random_range(0..50usize))).collect::<Vec<_>>().join(" ")
    };
    let classifiers = |r: f64, f: f64, p: f64| {
        AspectClassifiers::new(
            FeedbackClassifier::with_bias(Aspect::Refutation, 64, r),
            FeedbackClassifier::with_bias(Aspect::Factuality, 64, f),
            FeedbackClassifier::with_bias(Aspect::Politeness, 64, p),
        )
        .unwrap()
    };

    let mut worst = 0.0f64;
    for case in 0..C5_EVALS {
        let clf = classifiers(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        let claim = text(&mut rng);
        let evidence: Vec<String> =
            (0..rng.random_range(1..=3usize)).map(|_| text(&mut rng)).collect();
        let response = text(&mut rng);
        let alpha = rng.random_range(0.0..2.0);

        let out = compute_reward(
            &clf,
            &scorer,
            &RewardConfig { alpha, ..Default::default() },
            &claim,
            &evidence,
            &response,
        )
        .unwrap();
        let recomposed = out.refutation
            + out.factuality
            + out.politeness
            + out.alpha * (out.claim_relevance + out.evidence_relevance);
        let gap = (out.total - recomposed).abs();
        assert!(gap <= C5_TOL, "case {case}: total {} vs parts {recomposed}", out.total);
        worst = worst.max(gap);

        // alpha = 0 drops relevance entirely: total is the classifier sum.
        let base = compute_reward(
            &clf,
            &scorer,
            &RewardConfig { alpha: 0.0, ..Default::default() },
            &claim,
            &evidence,
            &response,
        )
        .unwrap();
        let classifier_sum = base.refutation + base.factuality + base.politeness;
        let gap0 = (base.total - classifier_sum).abs();
        assert!(gap0 <= C5_TOL, "case {case}: alpha=0 total {} vs {classifier_sum}", base.total);
        worst = worst.max(gap0);
    }

    // Raising any single component strictly raises the total, all else fixed.
    for pair in 0..C5_PERTURBATION_PAIRS {
        let biases =
            [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let claim = text(&mut rng);
        let evidence = vec![text(&mut rng)];
        let response = text(&mut rng);
        let config = RewardConfig { alpha: rng.random_range(0.0..2.0), ..Default::default() };

        let lo = compute_reward(
            &classifiers(biases[0], biases[1], biases[2]),
            &scorer,
            &config,
            &claim,
            &evidence,
            &response,
        )
        .unwrap();

        let mut bumped = biases;
        bumped[pair % 3] += 0.9;
        let hi = compute_reward(
            &classifiers(bumped[0], bumped[1], bumped[2]),
            &scorer,
            &config,
            &claim,
            &evidence,
            &response,
        )
        .unwrap();
        assert!(
            hi.total > lo.total,
            "pair {pair}: bumping component {} did not raise total ({} vs {})",
            pair % 3,
            hi.total,
            lo.total
        );

        // More weight on (nonnegative) relevance can only raise the total.
        assert!(lo.claim_relevance + lo.evidence_relevance > 0.0);
        let heavier = compute_reward(
            &classifiers(biases[0], biases[1], biases[2]),
            &scorer,
            &RewardConfig { alpha: config.alpha + 0.3, ..Default::default() },
            &claim,
            &evidence,
            &response,
        )
        .unwrap();
        assert!(
            heavier.total > lo.total,
            "pair {pair}: raising the relevance weight did not raise total"
        );
    }
    println!(
        "[criterion 05] PASS reward composition: {C5_EVALS} additivity + alpha=0 cases \
         (worst gap {worst:.2e}, tol {C5_TOL:.0e}), {C5_PERTURBATION_PAIRS} strict \
         monotonicity pairs"
    );
}

// ---------------------------------------------------------------------------
// 6. Classifier protocol: separable data trains cleanly; class balancing
//    beats plain cross entropy on skewed data.
// ---------------------------------------------------------------------------

const C6_SEPARABLE_BA_MIN: f64 = 0.95;
const C6_IMBALANCE_SEEDS: [u64; 5] = [11, 23, 24, 25, 42];
const C6_MIN_WINS: usize = 4;

#[test]
fn c06_classifier_protocol_separable_and_imbalanced() {
    // Cleanly separable data: held-out balanced accuracy near-perfect.
    let data = separable_feedback(Aspect::Refutation, 400, 19);
    let trained =
        train_classifier(&data, Aspect::Refutation, &ClassifierTrainConfig::default()).unwrap();
    let ba = trained.metrics.balanced_accuracy;
    assert!(ba >= C6_SEPARABLE_BA_MIN, "separable held-out BA {ba:.3} < {C6_SEPARABLE_BA_MIN}");

    // 90/10 skew: class-balanced loss must beat unweighted loss on balanced
    // accuracy in most runs.
    let mut wins = 0usize;
    let mut detail = String::new();
    for &seed in &C6_IMBALANCE_SEEDS {
        let data = imbalanced_feedback(Aspect::Politeness, 300, 0.1, seed);
        let run = |balanced: bool| {
            train_classifier(
                &data,
                Aspect::Politeness,
                &ClassifierTrainConfig { seed, balanced, ..Default::default() },
            )
            .unwrap()
            .metrics
            .balanced_accuracy
        };
        let (with_weights, plain) = (run(true), run(false));
        if with_weights > plain {
            wins += 1;
        }
        detail.push_str(&format!(" seed{seed}:{with_weights:.2}v{plain:.2}"));
    }
    assert!(
        wins >= C6_MIN_WINS,
        "class balancing won only {wins}/{} skewed runs (need >= {C6_MIN_WINS}):{detail}",
        C6_IMBALANCE_SEEDS.len()
    );
    println!(
        "[criterion 06] PASS classifier protocol: separable held-out BA {ba:.3} \
         (>= {C6_SEPARABLE_BA_MIN}), balanced loss wins {wins}/{} skewed runs:{detail}",
        C6_IMBALANCE_SEEDS.len()
    );
}

// ---------------------------------------------------------------------------
// 7. Policy alignment: near-optimal reward at small beta, KL shrinking
//    monotonically as beta grows, and a huge beta pinning the actor to the
//    reference.
// ---------------------------------------------------------------------------

const C7_REWARD_FRACTION_MIN: f64 = 0.9;
const C7_BETAS: [f64; 3] = [0.05, 0.2, 1.0];
const C7_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const C7_RUN_BUDGET_SECS: f64 = 120.0;

fn run_alignment(env: &ToyEnvSpec, reference: &Policy, beta: f64, seed: u64, iterations: usize) -> refute_core::policy::AlignOutcome {
    let config = AlignConfig {
        ppo: PpoConfig { beta, learning_rate: 0.05, seed, ..Default::default() },
        iterations,
        rollouts_per_iteration: 128,
        kl_target: None,
        ..Default::default()
    };
    align(reference, &env.prompts, &env.reward_fn(), &config).unwrap()
}

#[test]
fn c07_alignment_reward_and_kl_tradeoff() {
    let env = ToyEnvSpec::desk_default(17);
    let reference = env.reference_policy(91, 1.0).unwrap();
    let optimum = env.max_reward();

    let mut mean_kl = [0.0f64; 3];
    let mut min_reward_small_beta = f64::INFINITY;
    let mut slowest_run = 0.0f64;
    for (bi, &beta) in C7_BETAS.iter().enumerate() {
        for &seed in &C7_SEEDS {
            let t0 = Instant::now();
            let out = run_alignment(&env, &reference, beta, seed, 150);
            let secs = t0.elapsed().as_secs_f64();
            slowest_run = slowest_run.max(secs);
            assert!(secs < C7_RUN_BUDGET_SECS, "one run took {secs:.1}s (budget {C7_RUN_BUDGET_SECS}s)");
            let last = out.curve.last().unwrap();
            mean_kl[bi] += last.mean_kl / C7_SEEDS.len() as f64;
            if beta == C7_BETAS[0] {
                min_reward_small_beta = min_reward_small_beta.min(last.mean_reward);
                assert!(
                    last.mean_reward >= C7_REWARD_FRACTION_MIN * optimum,
                    "seed {seed}: final mean reward {:.3} < {:.3}",
                    last.mean_reward,
                    C7_REWARD_FRACTION_MIN * optimum
                );
            }
        }
    }
    assert!(
        mean_kl[0] > mean_kl[1] && mean_kl[1] > mean_kl[2],
        "mean final KL not strictly decreasing in beta: {mean_kl:?}"
    );

    // A very large penalty makes drifting from the reference unprofitable:
    // greedy decoding must agree with the reference on every prompt.
    let pinned = run_alignment(&env, &reference, 1e3, 9, 30);
    for prompt in &env.prompts {
        assert_eq!(
            pinned.actor.policy.generate_greedy(prompt),
            reference.generate_greedy(prompt),
            "beta=1e3 actor drifted from reference on {prompt:?}"
        );
    }
    println!(
        "[criterion 07] PASS alignment: min final reward {min_reward_small_beta:.3} at \
         beta {} (>= {:.2} of optimum {optimum}), mean final KL {:.3}/{:.3}/{:.3} strictly \
         decreasing over betas {C7_BETAS:?}, beta=1e3 greedy == reference, slowest run {slowest_run:.1}s",
        C7_BETAS[0], C7_REWARD_FRACTION_MIN, mean_kl[0], mean_kl[1], mean_kl[2]
    );
}

// ---------------------------------------------------------------------------
// 8. Sampled sequence-KL estimate agrees with exact enumeration.
// ---------------------------------------------------------------------------

const C8_ROLLOUTS: usize = 10_000;
const C8_SE_MULTIPLE: f64 = 2.0;

/// Exact sequence KL by brute force: walk every action sequence of length
/// <= max_length, accumulating p(sequence) * (log p - log q). Tractable only
/// because the vocabulary and horizon are tiny — which is the point.
fn enumerated_kl(actor: &Policy, reference: &Policy, prompt: &str) -> f64 {
    fn recurse(
        actor: &Policy,
        reference: &Policy,
        state: usize,
        depth: usize,
        logp: f64,
        logq: f64,
    ) -> f64 {
        if depth == actor.max_length() {
            return logp.exp() * (logp - logq);
        }
        let lp = actor.log_probs(state);
        let lq = reference.log_probs(state);
        let mut total = 0.0;
        for action in 0..actor.num_states() {
            let (nlp, nlq) = (logp + lp[action], logq + lq[action]);
            if action == actor.eos_id() {
                total += nlp.exp() * (nlp - nlq);
            } else {
                total += recurse(actor, reference, action, depth + 1, nlp, nlq);
            }
        }
        total
    }
    recurse(actor, reference, actor.initial_state(prompt), 0, 0.0, 0.0)
}

#[test]
fn c08_sampled_kl_estimate_matches_enumeration() {
    let vocab: Vec<String> =
        ["aye", "bee", "sea", "dee", "ees"].iter().map(|s| s.to_string()).collect();
    let actor_policy = Policy::with_random_logits(vocab.clone(), 3, 401, 0.8).unwrap();
    let reference = Policy::with_random_logits(vocab, 3, 402, 0.8).unwrap();
    let prompt = "measure divergence now".to_string();

    let exact = enumerated_kl(&actor_policy, &reference, &prompt);
    // The dynamic-programming KL must agree with brute-force enumeration.
    let dp = exact_sequence_kl(&actor_policy, &reference, &prompt).unwrap();
    assert!(
        (dp - exact).abs() <= 1e-10,
        "closed-form KL {dp} disagrees with enumeration {exact}"
    );

    let actor = ActorPolicy::from_reference(&actor_policy);
    let prompts: Vec<String> = std::iter::repeat(prompt).take(C8_ROLLOUTS).collect();
    let batch = rollout(&actor, &reference, &prompts, &|_, _| Ok(0.0), 13).unwrap();
    let samples: Vec<f64> = batch.trajectories.iter().map(|t| t.kl_sum()).collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let deviation = (mean - exact).abs();
    assert!(
        deviation <= C8_SE_MULTIPLE * se,
        "estimate {mean:.4} is {:.2} SEs from exact {exact:.4} (se {se:.4})",
        deviation / se
    );
    println!(
        "[criterion 08] PASS kl estimator: exact {exact:.4}, {C8_ROLLOUTS}-rollout estimate \
         {mean:.4} ({:.2} SEs, allowed {C8_SE_MULTIPLE}), se {se:.4}",
        deviation / se
    );
}

// ---------------------------------------------------------------------------
// 9. Prompt rendering is byte-identical to the committed golden file.
// ---------------------------------------------------------------------------

#[test]
fn c09_prompt_render_matches_golden_bytes() {
    let claim = "regular vitamin c intake prevents the common cold";
    let evidence = vec![
        "randomized trials show vitamin c does not reduce cold incidence in the general \
         population [SEP] pooled analysis of 29 trials covering 11306 participants"
            .to_string(),
        "prophylactic vitamin c modestly shortens cold duration but does not prevent \
         infection [SEP] effects concentrated in marathon runners and skiers"
            .to_string(),
    ];
    let rendered = PromptTemplate::default().render(claim, &evidence).unwrap();
    let golden = include_str!("data/prompt_golden.txt");
    assert_eq!(
        rendered.as_bytes(),
        golden.as_bytes(),
        "rendered prompt differs from the committed golden file"
    );
    println!(
        "[criterion 09] PASS prompt golden: rendered {} bytes identical to committed file",
        golden.len()
    );
}

// ---------------------------------------------------------------------------
// 10. Optional external dataset: lexical baseline quality, reported only.
// ---------------------------------------------------------------------------

const C10_ENV: &str = "REFUTE_EVAL_DIR";
const C10_REFERENCE_N1: f64 = 0.292;
const C10_BAND: f64 = 0.05;

#[test]
fn c10_external_dataset_lexical_baseline_report() {
    let Some(dir) = std::env::var_os(C10_ENV) else {
        println!(
            "[criterion 10] SKIP external baseline: set {C10_ENV} to a directory holding \
             docs.jsonl and claims.jsonl to run it"
        );
        return;
    };
    let dir = std::path::PathBuf::from(dir);

    let docs = std::fs::File::open(dir.join("docs.jsonl")).expect("open docs.jsonl");
    let IngestOutcome { corpus, report } =
        ingest(std::io::BufReader::new(docs)).expect("ingest docs.jsonl");
    let claims_raw = std::fs::read_to_string(dir.join("claims.jsonl")).expect("read claims.jsonl");
    let dataset: Vec<EvalExample> = claims_raw
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("claims.jsonl line"))
        .collect();
    assert!(!dataset.is_empty(), "claims.jsonl holds no examples");

    let index = InvertedIndex::build(&corpus).unwrap();
    let pipe_cfg = PipelineConfig::default();
    let outcome =
        evaluate_lexical(&index, &corpus, &dataset, pipe_cfg.m, &pipe_cfg.bm25).unwrap();
    let n1 = outcome.metric("n@1");
    let lo = C10_REFERENCE_N1 - C10_BAND;
    let hi = C10_REFERENCE_N1 + C10_BAND;
    let verdict = if (lo..=hi).contains(&n1) { "inside" } else { "OUTSIDE" };
    println!(
        "[criterion 10] PASS external baseline (report only): {} docs ({} kept), {} claims \
         ({} evaluated), bm25 n@1 {n1:.3} — {verdict} the reference band {lo:.3}..{hi:.3}",
        report.total, report.retained, dataset.len(), outcome.evaluated
    );
}
