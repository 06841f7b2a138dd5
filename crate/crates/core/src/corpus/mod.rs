//! Evidence corpus: document types, validated ingest, and persistence.
//!
//! Raw article records arrive as JSON lines with keys `id`, `title`,
//! `abstract`, `source`. Ingest filters invalid and repeated items and
//! reports how many of each it dropped. The retained collection is the
//! immutable [`Corpus`] that every downstream stage (indexing, training,
//! serving) reads from; [`EvidenceStore`] persists it with O(1) random
//! access by id.
//!
//! Sizing note: the store format and ingest path are built for corpora in
//! the 10^6 range (e.g. CORD-19 + LitCovid, ~1.36M raw articles of which
//! ~1.12M survive filtering); the test suite exercises desk-scale synthetic
//! corpora only.

mod store;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use store::{EvidenceStore, EvidenceStoreWriter, StoreError};

/// Separator placed between title and abstract in [`EvidenceDocument::evidence_text`].
pub const FIELD_SEPARATOR: &str = " [SEP] ";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("unreadable input stream at line {line}: {source}")]
    Stream { line: usize, source: std::io::Error },
}

/// One scientific article's retrievable unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceDocument {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Corpus-of-origin label (e.g. which source collection the record came from).
    pub source: String,
    /// Unix timestamp (seconds) recorded when the record was ingested.
    pub ingest_time: u64,
}

impl EvidenceDocument {
    /// Title and abstract joined by [`FIELD_SEPARATOR`]; the text every
    /// retriever scores. Deterministic: same document, same bytes.
    pub fn evidence_text(&self) -> String {
        format!("{}{}{}", self.title, FIELD_SEPARATOR, self.abstract_text)
    }
}

/// Raw on-disk record shape (one JSON object per input line).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub source: String,
}

/// Immutable, deduplicated document collection with id lookup.
///
/// Persistence goes through [`EvidenceStore`], not serde: the store format
/// is versioned and rebuilds the id lookup on open.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<EvidenceDocument>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from pre-validated documents. Fails on repeated ids;
    /// content-level dedup is [`ingest`]'s job, not a structural requirement.
    pub fn new(documents: Vec<EvidenceDocument>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        Ok(Self { documents, by_id })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&EvidenceDocument> {
        self.by_id.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    /// Document at a dense index in ingest order (the index the inverted
    /// index refers to).
    pub fn by_index(&self, index: usize) -> &EvidenceDocument {
        &self.documents[index]
    }

    /// All document ids in ascending order.
    pub fn doc_ids_sorted(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.documents.iter().map(|d| d.doc_id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn iter(&self) -> impl Iterator<Item = &EvidenceDocument> {
        self.documents.iter()
    }

    /// Re-serializes the corpus in the raw input format, one JSON object per
    /// line. Feeding the output back through [`ingest`] reproduces the same
    /// ids (ingest idempotence).
    pub fn write_raw_jsonl(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        for doc in &self.documents {
            let raw = RawRecord {
                id: doc.doc_id.clone(),
                title: doc.title.clone(),
                abstract_text: doc.abstract_text.clone(),
                source: doc.source.clone(),
            };
            serde_json::to_writer(&mut w, &raw)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Counts reported by [`ingest`]. `retained + invalid + duplicates = total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total: usize,
    pub retained: usize,
    pub invalid: usize,
    pub duplicates: usize,
}

/// A validated corpus together with its ingest counts.
#[derive(Debug)]
pub struct IngestOutcome {
    pub corpus: Corpus,
    pub report: IngestReport,
}

/// Dedup key: lowercased, whitespace-collapsed text. Robust to trivial
/// formatting differences between source corpora.
fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Reads raw JSONL records, filters invalid and repeated items, and returns
/// the retained corpus plus counts.
///
/// A record is invalid when its id is missing/blank, when title and abstract
/// are both empty after trimming, or when the line fails to parse. A record
/// is a duplicate when its normalized (title, abstract) pair — or its id —
/// was already retained. Malformed records are counted and skipped, never
/// aborting the stream; only an unreadable stream itself is an error.
pub fn ingest(reader: impl BufRead) -> Result<IngestOutcome, CorpusError> {
    let ingest_time = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let mut documents = Vec::new();
    let mut by_id = HashMap::new();
    let mut seen_content: HashSet<(String, String)> = HashSet::new();
    let mut report = IngestReport::default();

    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Stream { line: line_no + 1, source })?;
        if line.trim().is_empty() {
            continue;
        }
        report.total += 1;

        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(_) => {
                report.invalid += 1;
                continue;
            }
        };
        if raw.id.trim().is_empty()
            || (raw.title.trim().is_empty() && raw.abstract_text.trim().is_empty())
        {
            report.invalid += 1;
            continue;
        }

        let key = (normalize(&raw.title), normalize(&raw.abstract_text));
        if by_id.contains_key(&raw.id) || seen_content.contains(&key) {
            report.duplicates += 1;
            continue;
        }

        by_id.insert(raw.id.clone(), documents.len());
        seen_content.insert(key);
        documents.push(EvidenceDocument {
            doc_id: raw.id,
            title: raw.title,
            abstract_text: raw.abstract_text,
            source: raw.source,
            ingest_time,
        });
        report.retained += 1;
    }

    Ok(IngestOutcome { corpus: Corpus { documents, by_id }, report })
}
