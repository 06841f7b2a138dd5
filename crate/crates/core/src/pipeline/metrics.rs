//! Ranking metrics over the 1-based rank of the gold document.
//!
//! The evaluation data carries a single gold per claim, so NDCG reduces to
//! the closed form `1/log2(rank+1)` (zero outside the cutoff) and recall to
//! an indicator. A graded multi-gold NDCG is provided for corpora with
//! several annotated documents per claim, but the default harness does not
//! use it.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("metric cutoff k must be ≥ 1, got {0}")]
    InvalidK(usize),
    #[error("ranks are 1-based; got rank 0")]
    ZeroRank,
    #[error("found {found} gold ranks but only {total} golds exist")]
    TooManyRanks { found: usize, total: usize },
    #[error("multi-gold evaluation needs at least one gold document")]
    NoGolds,
}

fn check(rank_of_gold: Option<usize>, k: usize) -> Result<(), MetricsError> {
    if k < 1 {
        return Err(MetricsError::InvalidK(k));
    }
    if rank_of_gold == Some(0) {
        return Err(MetricsError::ZeroRank);
    }
    Ok(())
}

/// NDCG@k with a single gold document: `1/log2(rank+1)` if the gold ranks
/// inside the cutoff, else 0. `None` means the gold never entered the ranking.
pub fn ndcg_at_k(rank_of_gold: Option<usize>, k: usize) -> Result<f64, MetricsError> {
    check(rank_of_gold, k)?;
    Ok(match rank_of_gold {
        Some(rank) if rank <= k => 1.0 / ((rank + 1) as f64).log2(),
        _ => 0.0,
    })
}

/// Recall@k with a single gold document: 1 if the gold ranks inside the
/// cutoff, else 0.
pub fn recall_at_k(rank_of_gold: Option<usize>, k: usize) -> Result<f64, MetricsError> {
    check(rank_of_gold, k)?;
    Ok(match rank_of_gold {
        Some(rank) if rank <= k => 1.0,
        _ => 0.0,
    })
}

/// Multi-gold NDCG@k with binary relevance: DCG sums `1/log2(rank+1)` over
/// the golds found in the ranking, the ideal DCG packs all `total_golds`
/// golds at the top. `gold_ranks` lists the 1-based ranks of the golds that
/// appeared (absent golds are simply omitted).
pub fn ndcg_multi_gold(
    gold_ranks: &[usize],
    total_golds: usize,
    k: usize,
) -> Result<f64, MetricsError> {
    if k < 1 {
        return Err(MetricsError::InvalidK(k));
    }
    if total_golds == 0 {
        return Err(MetricsError::NoGolds);
    }
    if gold_ranks.contains(&0) {
        return Err(MetricsError::ZeroRank);
    }
    if gold_ranks.len() > total_golds {
        return Err(MetricsError::TooManyRanks { found: gold_ranks.len(), total: total_golds });
    }
    let dcg: f64 = gold_ranks
        .iter()
        .filter(|&&rank| rank <= k)
        .map(|&rank| 1.0 / ((rank + 1) as f64).log2())
        .sum();
    let ideal: f64 = (1..=total_golds.min(k)).map(|i| 1.0 / ((i + 1) as f64).log2()).sum();
    Ok(dcg / ideal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ndcg_closed_form_cases() {
        for k in [1, 3, 5, 100] {
            assert_eq!(ndcg_at_k(Some(1), k).unwrap(), 1.0, "ideal ranking maxes out");
        }
        assert_eq!(ndcg_at_k(Some(3), 3).unwrap(), 0.5, "1/log2(4)");
        assert_eq!(ndcg_at_k(Some(4), 3).unwrap(), 0.0, "outside cutoff");
        let expected = 1.0 / 3.0f64.log2();
        assert!((ndcg_at_k(Some(2), 3).unwrap() - expected).abs() < 1e-15);
        assert_eq!(ndcg_at_k(None, 5).unwrap(), 0.0, "gold absent from ranking");
    }

    #[test]
    fn recall_closed_form_cases() {
        assert_eq!(recall_at_k(Some(2), 3).unwrap(), 1.0);
        assert_eq!(recall_at_k(Some(6), 5).unwrap(), 0.0);
        assert_eq!(recall_at_k(None, 5).unwrap(), 0.0);
        // At cutoff 1 the two metrics coincide.
        for rank in [Some(1), Some(2), Some(9), None] {
            assert_eq!(ndcg_at_k(rank, 1).unwrap(), recall_at_k(rank, 1).unwrap());
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        assert_eq!(ndcg_at_k(Some(1), 0), Err(MetricsError::InvalidK(0)));
        assert_eq!(recall_at_k(None, 0), Err(MetricsError::InvalidK(0)));
        assert_eq!(ndcg_at_k(Some(0), 3), Err(MetricsError::ZeroRank));
        assert_eq!(ndcg_multi_gold(&[1], 0, 3), Err(MetricsError::NoGolds));
        assert_eq!(
            ndcg_multi_gold(&[1, 2, 3], 2, 3),
            Err(MetricsError::TooManyRanks { found: 3, total: 2 })
        );
    }

    #[test]
    fn multi_gold_reduces_to_single_gold() {
        for rank in 1..20 {
            for k in 1..10 {
                let single = ndcg_at_k(Some(rank), k).unwrap();
                let multi = ndcg_multi_gold(&[rank], 1, k).unwrap();
                assert!((single - multi).abs() < 1e-15, "rank {rank} k {k}");
            }
        }
    }

    #[test]
    fn multi_gold_hand_case() {
        // Golds at ranks 1 and 3 out of 2 golds, cutoff 3:
        // DCG = 1 + 1/log2(4) = 1.5; IDCG = 1 + 1/log2(3).
        let expected = 1.5 / (1.0 + 1.0 / 3.0f64.log2());
        let got = ndcg_multi_gold(&[1, 3], 2, 3).unwrap();
        assert!((got - expected).abs() < 1e-15);
        // A gold outside the cutoff contributes nothing.
        assert_eq!(ndcg_multi_gold(&[4, 5], 2, 3).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn metric_bounds_and_identities(rank in 1usize..200, k in 1usize..100) {
            let n = ndcg_at_k(Some(rank), k).unwrap();
            let r = recall_at_k(Some(rank), k).unwrap();
            prop_assert!((0.0..=1.0).contains(&n));
            prop_assert!((0.0..=1.0).contains(&r));
            // Single-gold NDCG never exceeds recall at the same cutoff.
            prop_assert!(n <= r);
            // Recall is non-decreasing in k, NDCG non-increasing in rank.
            prop_assert!(r <= recall_at_k(Some(rank), k + 1).unwrap());
            prop_assert!(n >= ndcg_at_k(Some(rank + 1), k).unwrap());
        }

        #[test]
        fn multi_gold_bounds(
            ranks in proptest::collection::btree_set(1usize..50, 1..6),
            extra in 0usize..4,
            k in 1usize..30,
        ) {
            let ranks: Vec<usize> = ranks.into_iter().collect();
            let total = ranks.len() + extra;
            let v = ndcg_multi_gold(&ranks, total, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&v), "got {v}");
        }
    }
}
