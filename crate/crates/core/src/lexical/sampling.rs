//! Positive/negative document sampling for retriever training.
//!
//! Positives are the BM25 top-k once the gold evidence (and anything else
//! excluded) is removed: hard candidates the dense scorer must learn to rank
//! *below* gold. Negatives come from the lowest-relevance pool — documents
//! with BM25 score exactly 0 against the claim — so they add contrast
//! without injecting label noise; when that pool is too small the bottom
//! decile(s) of nonzero scores fill the gap, lowest scores first.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use thiserror::Error;

use super::{Bm25Params, InvertedIndex};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("corpus too small to sample {needed} documents ({available} available after exclusions)")]
    CorpusTooSmall { needed: usize, available: usize },
}

/// Top-k BM25-ranked documents for the claim, excluding `exclude` (the gold
/// evidence always belongs there). Fully deterministic — rank order plus the
/// doc_id tie rule leave nothing to chance.
pub fn sample_positives(
    index: &InvertedIndex,
    claim_text: &str,
    k: usize,
    exclude: &HashSet<String>,
    params: &Bm25Params,
) -> Result<Vec<String>, SamplingError> {
    check_available(index, k, exclude)?;
    let ranked = index.ranked(claim_text, index.doc_count(), params);
    let ids = ranked
        .into_iter()
        .map(|(i, _)| index.doc_id(i as usize))
        .filter(|id| !exclude.contains(*id))
        .take(k)
        .map(str::to_string)
        .collect::<Vec<_>>();
    debug_assert_eq!(ids.len(), k);
    Ok(ids)
}

/// k distinct documents drawn uniformly (seeded) from the low-relevance
/// pool: documents whose BM25 score against the claim is 0. If the pool has
/// fewer than k members, every pool member is taken and the remainder is
/// drawn from the bottom decile of nonzero scores (extended decile by decile
/// if still short). Never returns excluded ids.
pub fn sample_negatives(
    index: &InvertedIndex,
    claim_text: &str,
    k: usize,
    exclude: &HashSet<String>,
    seed: u64,
    params: &Bm25Params,
) -> Result<Vec<String>, SamplingError> {
    check_available(index, k, exclude)?;

    let tokens = index.tokenize_query(claim_text);
    // Ascending score, doc_id tie-break — the tail of this list is the
    // "inverse BM25" ordering.
    let mut nonzero = index.matched_scores(&tokens, params);
    nonzero.reverse();
    let matched: HashSet<u32> = nonzero.iter().map(|&(i, _)| i).collect();

    let mut zero_pool: Vec<u32> = (0..index.doc_count() as u32)
        .filter(|i| !matched.contains(i) && !exclude.contains(index.doc_id(*i as usize)))
        .collect();
    zero_pool.sort_by(|&a, &b| index.doc_id(a as usize).cmp(index.doc_id(b as usize)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<u32> = Vec::with_capacity(k);
    if zero_pool.len() >= k {
        sample_distinct(&mut zero_pool, k, &mut rng, &mut picked);
    } else {
        picked.append(&mut zero_pool);
        let fillers: Vec<u32> = nonzero
            .iter()
            .map(|&(i, _)| i)
            .filter(|&i| !exclude.contains(index.doc_id(i as usize)))
            .collect();
        let decile = fillers.len().div_ceil(10).max(1);
        let mut offset = 0;
        while picked.len() < k && offset < fillers.len() {
            let mut chunk: Vec<u32> =
                fillers[offset..(offset + decile).min(fillers.len())].to_vec();
            offset += decile;
            let need = (k - picked.len()).min(chunk.len());
            sample_distinct(&mut chunk, need, &mut rng, &mut picked);
        }
    }
    debug_assert_eq!(picked.len(), k);
    Ok(picked.into_iter().map(|i| index.doc_id(i as usize).to_string()).collect())
}

fn check_available(
    index: &InvertedIndex,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<(), SamplingError> {
    // Counts every excluded id against the corpus even if absent from it:
    // a cheap lower bound that never lets an unsatisfiable request through.
    let available = index.doc_count().saturating_sub(exclude.len());
    if available < k {
        return Err(SamplingError::CorpusTooSmall { needed: k, available });
    }
    Ok(())
}

/// Partial Fisher–Yates: moves `n` uniform draws from `pool` into `out`.
fn sample_distinct(pool: &mut Vec<u32>, n: usize, rng: &mut ChaCha8Rng, out: &mut Vec<u32>) {
    for _ in 0..n {
        let j = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(j));
    }
}
