//! Inverted index and Okapi BM25 scoring.
//!
//! IDF uses the +1-inside-log form, ln((N − df + 0.5)/(df + 0.5) + 1),
//! which is non-negative for every df ≤ N; that keeps all match scores
//! strictly positive and makes the "lowest relevance" sampling pool (score
//! exactly 0 ⇔ no term overlap) well-defined. Repeated query tokens each
//! contribute a full term score, so queries are bags, not sets.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sort_ranked, tokenize_with, ScoredDocument, Stage, TokenizerConfig};
use crate::artifact::{self, ArtifactError};
use crate::corpus::Corpus;

const INDEX_MAGIC: [u8; 4] = *b"EVIX";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// BM25 free parameters. Defaults k1=1.2, b=0.75.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), String> {
        if !self.k1.is_finite() || self.k1 < 0.0 {
            return Err(format!("k1 must be ≥ 0, got {}", self.k1));
        }
        if !self.b.is_finite() || !(0.0..=1.0).contains(&self.b) {
            return Err(format!("b must be in [0, 1], got {}", self.b));
        }
        Ok(())
    }
}

/// One posting: a document index and the term's frequency in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_index: u32,
    pub term_frequency: u32,
}

/// Immutable term → postings map over a tokenized corpus.
///
/// Postings lists are sorted by `doc_index`; a term's document frequency is
/// its postings-list length by construction. The tokenizer config is stored
/// so reloaded indexes tokenize queries exactly as they tokenized documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    /// Document indices ordered by ascending doc_id; used to pad rankings
    /// with zero-score documents deterministically.
    ids_sorted: Vec<u32>,
    tokenizer: TokenizerConfig,
}

impl InvertedIndex {
    /// Indexes `evidence_text` of every document with the default tokenizer.
    pub fn build(corpus: &Corpus) -> Result<Self, IndexError> {
        Self::build_with(corpus, TokenizerConfig::default())
    }

    pub fn build_with(corpus: &Corpus, tokenizer: TokenizerConfig) -> Result<Self, IndexError> {
        if corpus.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lengths = Vec::with_capacity(corpus.len());

        for (doc_index, doc) in corpus.iter().enumerate() {
            let tokens = tokenize_with(&doc.evidence_text(), &tokenizer);
            doc_lengths.push(tokens.len() as u32);
            doc_ids.push(doc.doc_id.clone());

            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings
                    .entry(term)
                    .or_default()
                    .push(Posting { doc_index: doc_index as u32, term_frequency: tf });
            }
        }

        let avg_doc_length =
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / doc_lengths.len() as f64;
        let mut ids_sorted: Vec<u32> = (0..doc_ids.len() as u32).collect();
        ids_sorted.sort_by(|&a, &b| doc_ids[a as usize].cmp(&doc_ids[b as usize]));

        Ok(Self { postings, doc_ids, doc_lengths, avg_doc_length, ids_sorted, tokenizer })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_id(&self, doc_index: usize) -> &str {
        &self.doc_ids[doc_index]
    }

    /// Index position of a document id, if indexed.
    pub fn doc_index(&self, doc_id: &str) -> Option<usize> {
        self.ids_sorted
            .binary_search_by(|&i| self.doc_ids[i as usize].as_str().cmp(doc_id))
            .ok()
            .map(|pos| self.ids_sorted[pos] as usize)
    }

    pub fn doc_length(&self, doc_index: usize) -> u32 {
        self.doc_lengths[doc_index]
    }

    /// Document frequency: how many documents contain `term`.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    /// Tokenizes `query_text` with the index's own tokenizer config.
    pub fn tokenize_query(&self, query_text: &str) -> Vec<String> {
        tokenize_with(query_text, &self.tokenizer)
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_score(&self, tf: u32, doc_index: usize, params: &Bm25Params) -> f64 {
        let tf = f64::from(tf);
        let len = f64::from(self.doc_lengths[doc_index]);
        let norm = 1.0 - params.b + params.b * len / self.avg_doc_length;
        tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }

    /// BM25 score of one document against a pre-tokenized query: sum over
    /// query token occurrences of IDF(t) · tf·(k1+1)/(tf + k1·(1−b+b·len/avg)).
    ///
    /// # Panics
    /// Panics if `doc_index` is out of range.
    pub fn bm25_score(&self, query_tokens: &[String], doc_index: usize, params: &Bm25Params) -> f64 {
        assert!(doc_index < self.doc_count(), "doc_index {doc_index} out of range");
        let mut score = 0.0;
        for token in query_tokens {
            let Some(list) = self.postings.get(token) else { continue };
            if let Ok(pos) = list.binary_search_by_key(&(doc_index as u32), |p| p.doc_index) {
                score += self.idf(list.len()) * self.term_score(list[pos].term_frequency, doc_index, params);
            }
        }
        score
    }

    /// Scores every document with at least one query-term match, returned as
    /// (doc_index, score) with score > 0, sorted descending / doc_id-ascending.
    pub fn matched_scores(&self, query_tokens: &[String], params: &Bm25Params) -> Vec<(u32, f64)> {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for token in query_tokens {
            let Some(list) = self.postings.get(token) else { continue };
            let idf = self.idf(list.len());
            for p in list {
                *acc.entry(p.doc_index).or_insert(0.0) +=
                    idf * self.term_score(p.term_frequency, p.doc_index as usize, params);
            }
        }
        let mut scored: Vec<(String, f64)> = Vec::new(); // (doc_id, score) for the shared sort rule
        let mut indices: HashMap<&str, u32> = HashMap::with_capacity(acc.len());
        for (doc_index, score) in acc {
            let id = &self.doc_ids[doc_index as usize];
            indices.insert(id, doc_index);
            scored.push((id.clone(), score));
        }
        sort_ranked(&mut scored);
        scored.into_iter().map(|(id, s)| (indices[id.as_str()], s)).collect()
    }

    /// Full BM25 ranking truncated to `limit`: matched documents first
    /// (descending score, doc_id tie-break), then zero-score documents in
    /// ascending doc_id order. Returns fewer than `limit` only when the
    /// corpus itself is smaller.
    pub fn ranked(&self, query_text: &str, limit: usize, params: &Bm25Params) -> Vec<(u32, f64)> {
        let tokens = self.tokenize_query(query_text);
        let mut out = self.matched_scores(&tokens, params);
        out.truncate(limit);
        if out.len() < limit {
            let matched: std::collections::HashSet<u32> =
                out.iter().map(|&(i, _)| i).collect();
            for &i in &self.ids_sorted {
                if out.len() == limit {
                    break;
                }
                if !matched.contains(&i) {
                    out.push((i, 0.0));
                }
            }
        }
        out
    }

    /// The m highest-BM25 documents for a query text, zero-score padded so
    /// the stage-1 output size is always min(m, corpus size).
    ///
    /// # Panics
    /// Panics if `m` is zero.
    pub fn retrieve_top_m(&self, query_text: &str, m: usize, params: &Bm25Params) -> Vec<ScoredDocument> {
        assert!(m >= 1, "m must be at least 1");
        self.ranked(query_text, m, params)
            .into_iter()
            .map(|(i, score)| ScoredDocument::new(self.doc_ids[i as usize].clone(), score, Stage::Lexical))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        Ok(artifact::save(path, INDEX_MAGIC, INDEX_VERSION, self)?)
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        Ok(artifact::load(path, INDEX_MAGIC, INDEX_VERSION, "inverted index")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EvidenceDocument;

    fn corpus_from(texts: &[&str]) -> Corpus {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| EvidenceDocument {
                doc_id: format!("d{i:03}"),
                title: t.to_string(),
                abstract_text: String::new(),
                source: "test".into(),
                ingest_time: 0,
            })
            .collect();
        Corpus::new(docs).unwrap()
    }

    /// Brute-force BM25 over retokenized documents; shares nothing with the
    /// index internals beyond the tokenizer.
    fn oracle_score(texts: &[&str], query: &[&str], doc: usize, params: &Bm25Params) -> f64 {
        let docs: Vec<Vec<String>> =
            texts.iter().map(|t| tokenize_with(&format!("{t} [SEP] "), &TokenizerConfig::default())).collect();
        let n = docs.len() as f64;
        let avg = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
        let mut score = 0.0;
        for q in query {
            let df = docs.iter().filter(|d| d.iter().any(|t| t == q)).count() as f64;
            let tf = docs[doc].iter().filter(|t| t.as_str() == *q).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let norm = 1.0 - params.b + params.b * docs[doc].len() as f64 / avg;
            score += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
        }
        score
    }

    #[test]
    fn postings_count_term_occurrences() {
        let index = InvertedIndex::build(&corpus_from(&["apple banana apple"])).unwrap();
        assert_eq!(index.document_frequency("apple"), 1);
        assert_eq!(
            index.postings["apple"],
            vec![Posting { doc_index: 0, term_frequency: 2 }]
        );
        assert_eq!(index.postings["banana"], vec![Posting { doc_index: 0, term_frequency: 1 }]);
        // "sep" from the field separator is also indexed: length 3 + 1.
        assert_eq!(index.avg_doc_length(), 4.0);
    }

    #[test]
    fn identical_docs_share_postings_lists() {
        let index = InvertedIndex::build(&corpus_from(&["covid spreads", "covid spreads"])).unwrap();
        let list = &index.postings["covid"];
        assert_eq!(list.len(), 2);
        assert_eq!(list[0].doc_index, 0);
        assert_eq!(list[1].doc_index, 1);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(
            InvertedIndex::build(&Corpus::default()),
            Err(IndexError::EmptyCorpus)
        ));
    }

    #[test]
    fn score_matches_brute_force_oracle() {
        let texts =
            &["covid vaccine works", "vaccine hesitancy grows", "weather report sunny covid covid"];
        let index = InvertedIndex::build(&corpus_from(texts)).unwrap();
        let params = Bm25Params::default();
        let query: Vec<String> = vec!["covid".into(), "vaccine".into()];
        for doc in 0..texts.len() {
            let got = index.bm25_score(&query, doc, &params);
            let want = oracle_score(texts, &["covid", "vaccine"], doc, &params);
            assert!((got - want).abs() <= 1e-12, "doc {doc}: {got} vs oracle {want}");
        }
    }

    #[test]
    fn no_overlap_and_empty_queries_score_zero() {
        let index = InvertedIndex::build(&corpus_from(&["alpha beta"])).unwrap();
        let params = Bm25Params::default();
        assert_eq!(index.bm25_score(&["gamma".into()], 0, &params), 0.0);
        assert_eq!(index.bm25_score(&[], 0, &params), 0.0);
    }

    #[test]
    fn top_m_pads_with_zero_scores_by_doc_id() {
        let index =
            InvertedIndex::build(&corpus_from(&["covid", "flu", "measles", "covid twice covid"]))
                .unwrap();
        let top = index.retrieve_top_m("covid", 4, &Bm25Params::default());
        assert_eq!(top.len(), 4);
        assert!(top[0].score > 0.0 && top[1].score > 0.0);
        // Unmatched documents pad the tail in ascending doc_id order.
        assert_eq!(top[2].doc_id, "d001");
        assert_eq!(top[2].score, 0.0);
        assert_eq!(top[3].doc_id, "d002");
        assert!(top.iter().all(|s| s.stage == Stage::Lexical));
    }

    #[test]
    fn equal_scores_tie_break_by_doc_id() {
        // Two identical docs get identical scores; d000 must precede d001.
        let index = InvertedIndex::build(&corpus_from(&["same text", "same text"])).unwrap();
        let top = index.retrieve_top_m("same", 2, &Bm25Params::default());
        assert_eq!(top[0].doc_id, "d000");
        assert_eq!(top[1].doc_id, "d001");
        assert!((top[0].score - top[1].score).abs() < 1e-15);
    }

    #[test]
    fn serialization_round_trips_scores_bit_identically() {
        let texts: Vec<String> = (0..50)
            .map(|i| format!("doc number {i} mentions covid {} times vaccine", i % 5))
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let index = InvertedIndex::build(&corpus_from(&refs)).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.evix");
        index.save(&path).unwrap();
        let reloaded = InvertedIndex::load(&path).unwrap();

        let params = Bm25Params::default();
        for query in ["covid vaccine", "number 3", "absent terms only"] {
            let a = index.retrieve_top_m(query, 10, &params);
            let b = reloaded.retrieve_top_m(query, 10, &params);
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.doc_id, y.doc_id);
                assert_eq!(x.score.to_bits(), y.score.to_bits(), "scores must be bit-identical");
            }
        }
    }
}
