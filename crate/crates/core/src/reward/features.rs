//! Text featurization for the feedback classifiers: hashed word and bigram
//! counts over the (claim ∥ evidence ∥ response) concatenation, with a
//! segment prefix on every feature so "not" in a response and "not" in a
//! claim stay distinguishable.
//!
//! Stopwords are kept: feedback aspects such as politeness live largely in
//! function words.

use std::collections::BTreeMap;

use crate::hashing::bucket;
use crate::lexical::{tokenize_with, TokenizerConfig};

const CLAIM_PREFIX: &str = "c:";
const EVIDENCE_PREFIX: &str = "e:";
const RESPONSE_PREFIX: &str = "r:";

fn add_segment(counts: &mut BTreeMap<usize, f64>, prefix: &str, text: &str, dim: usize) {
    let tokens = tokenize_with(text, &TokenizerConfig::keep_stopwords());
    for token in &tokens {
        *counts.entry(bucket(&format!("{prefix}{token}"), dim)).or_insert(0.0) += 1.0;
    }
    for pair in tokens.windows(2) {
        *counts.entry(bucket(&format!("{prefix}{} {}", pair[0], pair[1]), dim)).or_insert(0.0) +=
            1.0;
    }
}

/// Sparse (bucket, count) features, sorted by bucket. Bigrams never span
/// evidence-document boundaries.
pub(crate) fn featurize(
    claim: &str,
    evidence: &[String],
    response: &str,
    dim: usize,
) -> Vec<(usize, f64)> {
    let mut counts = BTreeMap::new();
    add_segment(&mut counts, CLAIM_PREFIX, claim, dim);
    for doc in evidence {
        add_segment(&mut counts, EVIDENCE_PREFIX, doc, dim);
    }
    add_segment(&mut counts, RESPONSE_PREFIX, response, dim);
    counts.into_iter().collect()
}
