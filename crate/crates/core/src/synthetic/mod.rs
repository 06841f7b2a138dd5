//! Seeded desk-scale data generators used by the test suite, the benches,
//! and the demo commands: a planted retrieval benchmark whose lexical and
//! semantic signals are deliberately decoupled, random corpora for oracle
//! comparisons, and labeled feedback sets with controlled separability and
//! class balance.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, EvidenceDocument};
use crate::pipeline::EvalExample;
use crate::reward::{Aspect, FeedbackExample};

/// Shape of the planted retrieval benchmark.
///
/// Documents come in topic groups of six — one gold plus five confusers —
/// all sharing a group token that lexical retrieval keys on. Claims carry a
/// *claim-side* concept token (`qc<c>`) while only gold documents carry the
/// matching *document-side* token (`dc<c>`); the two never collide
/// lexically, so ranking the gold above its confusers requires a scorer
/// that has learned the concept pairing. Evaluation claims use held-out
/// groups (fresh group tokens) of concepts seen in training.
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    /// Total corpus size; groups come first, filler-only background after.
    pub docs: usize,
    pub concepts: usize,
    /// Topic groups per concept; the last topic of each concept is held out
    /// for evaluation.
    pub topics: usize,
    pub train_claims: usize,
    pub eval_claims: usize,
    /// Size of the shared filler-token pool.
    pub filler_pool: usize,
    /// Filler tokens per document / per claim.
    pub doc_fillers: usize,
    pub claim_fillers: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            docs: 2000,
            concepts: 40,
            topics: 3,
            train_claims: 200,
            eval_claims: 100,
            filler_pool: 30,
            doc_fillers: 8,
            claim_fillers: 5,
            seed: 17,
        }
    }
}

impl PlantedConfig {
    const GROUP_SIZE: usize = 6;

    fn groups(&self) -> usize {
        self.concepts * self.topics
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.concepts == 0 || self.topics < 2 {
            return Err("need at least one concept and two topics".to_string());
        }
        if self.docs < self.groups() * Self::GROUP_SIZE {
            return Err(format!(
                "{} docs cannot hold {} groups of {}",
                self.docs,
                self.groups(),
                Self::GROUP_SIZE
            ));
        }
        if self.train_claims == 0 || self.eval_claims == 0 {
            return Err("need train and eval claims".to_string());
        }
        if self.filler_pool == 0 || self.doc_fillers == 0 {
            return Err("need a non-empty filler pool and document filler count".to_string());
        }
        Ok(())
    }
}

/// A generated benchmark: the corpus plus train/eval claim sets.
#[derive(Debug)]
pub struct PlantedBenchmark {
    pub corpus: Corpus,
    pub train: Vec<EvalExample>,
    pub eval: Vec<EvalExample>,
}

fn filler_words(rng: &mut ChaCha8Rng, pool: usize, count: usize) -> String {
    (0..count).map(|_| format!("w{}", rng.random_range(0..pool))).collect::<Vec<_>>().join(" ")
}

/// Builds the benchmark deterministically from the config seed.
pub fn planted_benchmark(config: &PlantedConfig) -> Result<PlantedBenchmark, String> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut docs = Vec::with_capacity(config.docs);

    for concept in 0..config.concepts {
        for topic in 0..config.topics {
            let group = concept * config.topics + topic;
            let gold_fillers = filler_words(&mut rng, config.filler_pool, config.doc_fillers);
            docs.push(EvidenceDocument {
                doc_id: format!("g{group:03}gold"),
                title: format!("dc{concept} grp{group} {gold_fillers}"),
                abstract_text: String::new(),
                source: "planted".into(),
                ingest_time: 0,
            });
            for member in 0..PlantedConfig::GROUP_SIZE - 1 {
                let fillers = filler_words(&mut rng, config.filler_pool, config.doc_fillers);
                docs.push(EvidenceDocument {
                    doc_id: format!("g{group:03}c{member}"),
                    title: format!("grp{group} {fillers}"),
                    abstract_text: String::new(),
                    source: "planted".into(),
                    ingest_time: 0,
                });
            }
        }
    }
    let background = config.docs - docs.len();
    for i in 0..background {
        let fillers = filler_words(&mut rng, config.filler_pool, config.doc_fillers + 2);
        docs.push(EvidenceDocument {
            doc_id: format!("bg{i:04}"),
            title: fillers,
            abstract_text: String::new(),
            source: "planted".into(),
            ingest_time: 0,
        });
    }
    let corpus = Corpus::new(docs).map_err(|e| e.to_string())?;

    // Train claims target topics 0..topics-1; eval claims target the final,
    // held-out topic of each concept.
    let train_groups: Vec<usize> = (0..config.concepts)
        .flat_map(|c| (0..config.topics - 1).map(move |t| c * config.topics + t))
        .collect();
    let eval_groups: Vec<usize> =
        (0..config.concepts).map(|c| c * config.topics + (config.topics - 1)).collect();

    let claims_for = |groups: &[usize], count: usize, rng: &mut ChaCha8Rng| {
        (0..count)
            .map(|i| {
                let group = groups[i % groups.len()];
                let concept = group / config.topics;
                let mut claim = format!("qc{concept} grp{group}");
                if config.claim_fillers > 0 {
                    claim.push(' ');
                    claim.push_str(&filler_words(rng, config.filler_pool, config.claim_fillers));
                }
                EvalExample { claim, gold_doc_id: format!("g{group:03}gold") }
            })
            .collect::<Vec<_>>()
    };
    let train = claims_for(&train_groups, config.train_claims, &mut rng);
    let eval = claims_for(&eval_groups, config.eval_claims, &mut rng);

    Ok(PlantedBenchmark { corpus, train, eval })
}

/// A corpus of `n_docs` documents of random tokens drawn from a
/// `vocab_size`-word pool — the substrate for brute-force oracle
/// comparisons.
pub fn random_corpus(n_docs: usize, vocab_size: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n_docs)
        .map(|i| {
            let title_len = rng.random_range(3..20);
            let abstract_len = rng.random_range(0..30);
            let word = |rng: &mut ChaCha8Rng| format!("v{}", rng.random_range(0..vocab_size));
            let title: Vec<String> = (0..title_len).map(|_| word(&mut rng)).collect();
            let abstract_text: Vec<String> = (0..abstract_len).map(|_| word(&mut rng)).collect();
            EvidenceDocument {
                doc_id: format!("r{i:05}"),
                title: title.join(" "),
                abstract_text: abstract_text.join(" "),
                source: "random".into(),
                ingest_time: 0,
            }
        })
        .collect();
    Corpus::new(docs).expect("generated ids are unique")
}

/// Random queries over the same token pool as [`random_corpus`].
pub fn random_queries(n: usize, vocab_size: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..8);
            (0..len)
                .map(|_| format!("v{}", rng.random_range(0..vocab_size)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Signal vocabularies per feedback aspect: words typical of positive and
/// negative responses.
fn aspect_pools(aspect: Aspect) -> (&'static [&'static str], &'static [&'static str]) {
    match aspect {
        Aspect::Refutation => (
            &["refuted", "contradicted", "disproven", "debunked", "incorrect"],
            &["supported", "confirmed", "verified", "consistent", "accurate"],
        ),
        Aspect::Factuality => (
            &["study", "trial", "measured", "dataset", "replicated"],
            &["rumor", "hearsay", "guess", "myth", "speculation"],
        ),
        Aspect::Politeness => (
            &["respectfully", "kindly", "appreciate", "thanks", "gladly"],
            &["nonsense", "ridiculous", "absurd", "idiotic", "garbage"],
        ),
    }
}

/// A linearly separable labeled set: positive and negative responses draw
/// from disjoint signal vocabularies. Labels alternate, so classes are
/// balanced.
pub fn separable_feedback(aspect: Aspect, n: usize, seed: u64) -> Vec<FeedbackExample> {
    let (pos, neg) = aspect_pools(aspect);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = (i % 2 == 0) as u8;
            let pool = if label == 1 { pos } else { neg };
            let a = pool.choose(&mut rng).unwrap();
            let b = pool.choose(&mut rng).unwrap();
            FeedbackExample {
                claim: format!("claim topic {}", i % 7),
                evidence: vec![format!("evidence body {}", i % 5)],
                response: format!("the claim is {a} and {b} by the cited sources"),
                label,
                aspect,
            }
        })
        .collect()
}

/// A class-imbalanced set (fraction `positive_fraction` positive) where a
/// large share of negatives is textually identical to the positives. On the
/// overlap an unweighted fit sides with the majority class; class-balanced
/// weighting recovers the minority, which is exactly the gap balanced
/// accuracy exposes.
pub fn imbalanced_feedback(
    aspect: Aspect,
    n: usize,
    positive_fraction: f64,
    seed: u64,
) -> Vec<FeedbackExample> {
    assert!((0.0..1.0).contains(&positive_fraction) && positive_fraction > 0.0);
    let (_, neg) = aspect_pools(aspect);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = ((n as f64 * positive_fraction).round() as usize).clamp(1, n - 1);
    let overlap_template =
        |variant: usize| format!("the marker claim shares wording variant {variant}");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i < n_pos;
        // Half the negatives mirror positive wording exactly; the rest are
        // separable. Claim and evidence stay constant so the overlap really
        // is textually identical — per-example variant tokens there would
        // let a high-dimensional fit shatter it instead of facing the
        // majority-vs-minority vote.
        let mirrored = !positive && i % 2 == 0;
        let response = if positive || mirrored {
            overlap_template(i % 5)
        } else {
            let a = neg.choose(&mut rng).unwrap();
            format!("plainly {a} response with distinct phrasing")
        };
        out.push(FeedbackExample {
            claim: "claim under review".to_string(),
            evidence: vec!["evidence snippet".to_string()],
            response,
            label: positive as u8,
            aspect,
        });
    }
    out
}
