//! Deterministic tokenization shared by indexing, querying, and feature
//! hashing.
//!
//! Segmentation keeps maximal runs of Unicode-alphanumeric characters and
//! lowercases them, so "COVID-19 Vaccines" → ["covid", "19", "vaccines"].
//! The stopword list is fixed and versioned: index files record the version
//! they were built with, keeping scores reproducible across builds.

use serde::{Deserialize, Serialize};

/// Bump when [`STOPWORDS`] changes; stored inside index artifacts.
pub const STOPWORD_LIST_VERSION: u32 = 1;

/// Classic 33-entry English stopword list (sorted; binary-searchable).
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is",
    "it", "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there",
    "these", "they", "this", "to", "was", "will", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub remove_stopwords: bool,
    pub stopword_list_version: u32,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { remove_stopwords: true, stopword_list_version: STOPWORD_LIST_VERSION }
    }
}

impl TokenizerConfig {
    /// Stopword removal disabled; used where function words carry signal
    /// (feedback classification, response text).
    pub fn keep_stopwords() -> Self {
        Self { remove_stopwords: false, ..Self::default() }
    }
}

fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Tokenizes with the given config. Empty input yields an empty sequence.
pub fn tokenize_with(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    if config.remove_stopwords {
        tokens.retain(|t| !is_stopword(t));
    }
    tokens
}

/// Tokenizes with the default config (stopword removal on).
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, &TokenizerConfig::default())
}
