//! Ranking + contrastive training objective for the dense scorer, with
//! exact analytic gradients over the projection matrix.
//!
//! For one batch (claim x, gold e, positives {e_i^p}, negatives {e_i^n}):
//!
//! ```text
//! loss = max(0, max_i f(x, e_i^p) − f(x, e) + τ)
//!        − λ · exp(f(x,e)) / (exp(f(x,e)) + Σ_i exp(f(x, e_i^n)))
//! ```
//!
//! with f = temperature-scaled cosine relevance. The hinge demands gold beat
//! the strongest sampled positive by margin τ; the second term is λ times
//! the softmax probability of the gold pair against the negatives —
//! subtracted as printed, not its logarithm. The log form (the canonical
//! InfoNCE objective) is available as [`ContrastiveForm::LogProbability`]
//! for comparison. Subgradients at ties: the hinge at exactly 0 contributes
//! nothing; among tied positives the lowest index is the maximizer.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DenseError, DenseScorer, EmbedCache};
use crate::corpus::EvidenceDocument;

/// Which functional form the contrastive term takes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastiveForm {
    /// −λ · p(gold): the printed form. Bounded below by −λ.
    #[default]
    Probability,
    /// −λ · ln p(gold): the InfoNCE form.
    LogProbability,
}

/// One claim with its gold evidence and k sampled positives/negatives.
#[derive(Debug, Clone)]
pub struct RetrieverTrainBatch {
    pub claim: String,
    pub gold: EvidenceDocument,
    pub positives: Vec<EvidenceDocument>,
    pub negatives: Vec<EvidenceDocument>,
}

impl RetrieverTrainBatch {
    /// Validates the structural invariants: equal-size non-empty sides,
    /// all ids distinct, gold in neither side.
    pub fn new(
        claim: String,
        gold: EvidenceDocument,
        positives: Vec<EvidenceDocument>,
        negatives: Vec<EvidenceDocument>,
    ) -> Result<Self, DenseError> {
        if positives.is_empty() || positives.len() != negatives.len() {
            return Err(DenseError::InvalidBatch(format!(
                "need equal non-empty sides, got {} positives / {} negatives",
                positives.len(),
                negatives.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        seen.insert(gold.doc_id.as_str());
        for doc in positives.iter().chain(&negatives) {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(DenseError::InvalidBatch(format!(
                    "doc {:?} appears twice (or collides with gold) in one batch",
                    doc.doc_id
                )));
            }
        }
        Ok(Self { claim, gold, positives, negatives })
    }

    pub fn k(&self) -> usize {
        self.positives.len()
    }
}

/// A loss value with its gradient over the scorer projection.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Array2<f64>,
}

/// Evaluates the objective in its default (printed) form.
pub fn loss_eq1(
    scorer: &DenseScorer,
    batch: &RetrieverTrainBatch,
    tau: f64,
    lambda: f64,
) -> Result<LossGrad, DenseError> {
    loss_with_form(scorer, batch, tau, lambda, ContrastiveForm::Probability)
}

pub fn loss_with_form(
    scorer: &DenseScorer,
    batch: &RetrieverTrainBatch,
    tau: f64,
    lambda: f64,
    form: ContrastiveForm,
) -> Result<LossGrad, DenseError> {
    debug_assert!(tau >= 0.0 && lambda >= 0.0);
    let t = scorer.config().temperature;
    let dim = scorer.config().dim;

    let x = scorer.embed_cache(&batch.claim);
    let gold = scorer.embed_cache(&batch.gold.evidence_text());
    let pos: Vec<EmbedCache> =
        batch.positives.iter().map(|d| scorer.embed_cache(&d.evidence_text())).collect();
    let neg: Vec<EmbedCache> =
        batch.negatives.iter().map(|d| scorer.embed_cache(&d.evidence_text())).collect();

    let score = |e: &EmbedCache| x.unit.dot(&e.unit) / t;
    let s_gold = score(&gold);
    let s_pos: Vec<f64> = pos.iter().map(&score).collect();
    let s_neg: Vec<f64> = neg.iter().map(&score).collect();

    let mut loss = 0.0;
    let mut grad = Array2::<f64>::zeros((dim, dim));

    // Hinge on the realized max branch. Strict `>` keeps the lowest-index
    // maximizer under ties.
    let mut star = 0;
    for (i, &s) in s_pos.iter().enumerate() {
        if s > s_pos[star] {
            star = i;
        }
    }
    let hinge_arg = s_pos[star] - s_gold + tau;
    if hinge_arg > 0.0 {
        loss += hinge_arg;
        add_pair_grad(&mut grad, &x, &pos[star], 1.0, t);
        add_pair_grad(&mut grad, &x, &gold, -1.0, t);
    }

    // Contrastive term, max-stabilized so extreme temperatures can't
    // overflow the exponentials.
    let m = s_neg.iter().fold(s_gold, |a, &b| a.max(b));
    let e_gold = (s_gold - m).exp();
    let e_neg: Vec<f64> = s_neg.iter().map(|&s| (s - m).exp()).collect();
    let denom = e_gold + e_neg.iter().sum::<f64>();
    let p = e_gold / denom;
    match form {
        ContrastiveForm::Probability => {
            loss -= lambda * p;
            add_pair_grad(&mut grad, &x, &gold, -lambda * p * (1.0 - p), t);
            for (j, n) in neg.iter().enumerate() {
                add_pair_grad(&mut grad, &x, n, lambda * p * e_neg[j] / denom, t);
            }
        }
        ContrastiveForm::LogProbability => {
            loss -= lambda * p.ln();
            add_pair_grad(&mut grad, &x, &gold, -lambda * (1.0 - p), t);
            for (j, n) in neg.iter().enumerate() {
                add_pair_grad(&mut grad, &x, n, lambda * e_neg[j] / denom, t);
            }
        }
    }

    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(DenseError::NonFinite { context: snippet(&batch.claim) });
    }
    Ok(LossGrad { loss, grad })
}

/// Adds `coeff · ∂f(a, b)/∂P` to `grad`, where f is the temperature-scaled
/// cosine of the two cached embeddings. Each non-fallback side contributes
/// `((u_other − cos·u_side)/(t·‖y_side‖)) φ_sideᵀ`; fallback embeddings are
/// constants and contribute nothing.
fn add_pair_grad(grad: &mut Array2<f64>, a: &EmbedCache, b: &EmbedCache, coeff: f64, t: f64) {
    if coeff == 0.0 {
        return;
    }
    add_side(grad, a, b, coeff, t);
    add_side(grad, b, a, coeff, t);
}

fn add_side(grad: &mut Array2<f64>, side: &EmbedCache, other: &EmbedCache, coeff: f64, t: f64) {
    if side.fallback {
        return;
    }
    let cos = side.unit.dot(&other.unit);
    let mut dir = other.unit.clone();
    dir.scaled_add(-cos, &side.unit);
    dir *= coeff / (t * side.norm);
    for &(bucket, value) in &side.features {
        grad.column_mut(bucket).scaled_add(value, &dir);
    }
}

fn snippet(text: &str) -> String {
    let mut s: String = text.chars().take(40).collect();
    if s.len() < text.len() {
        s.push('…');
    }
    s
}
