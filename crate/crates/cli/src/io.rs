//! Shared file plumbing: JSONL datasets and artifact load/save with
//! errors that name the file and classify as data problems.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;

use refute_core::reward::AspectClassifiers;
use refute_core::{Corpus, DenseScorer, EvidenceStore, InvertedIndex, Policy};

use crate::error::{data, CliResult};

/// Reads one JSON record per line, skipping blank lines. Errors carry the
/// file, the 1-based line number, and what the record was supposed to be.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<Vec<T>> {
    let file = File::open(path)
        .map_err(|e| data(format!("cannot open {what} file {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line =
            line.map_err(|e| data(format!("cannot read {} line {}: {e}", path.display(), i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            data(format!("{what} file {} line {}: {e}", path.display(), i + 1))
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(data(format!("{what} file {} contains no records", path.display())));
    }
    Ok(records)
}

/// Creates the parent directory of an output path so `save` calls never
/// fail on a missing directory.
pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                data(format!("cannot create directory {}: {e}", parent.display()))
            })?;
        }
    }
    Ok(())
}

pub fn load_corpus(path: &Path) -> CliResult<Corpus> {
    let store = EvidenceStore::open(path)
        .map_err(|e| data(format!("evidence store {}: {e}", path.display())))?;
    store.load_corpus().map_err(|e| data(format!("evidence store {}: {e}", path.display())))
}

pub fn load_index(path: &Path) -> CliResult<InvertedIndex> {
    InvertedIndex::load(path).map_err(|e| data(format!("index {}: {e}", path.display())))
}

pub fn load_scorer(path: &Path) -> CliResult<DenseScorer> {
    DenseScorer::load(path).map_err(|e| data(format!("scorer {}: {e}", path.display())))
}

pub fn load_classifiers(path: &Path) -> CliResult<AspectClassifiers> {
    AspectClassifiers::load(path)
        .map_err(|e| data(format!("classifiers {}: {e}", path.display())))
}

pub fn load_policy(path: &Path) -> CliResult<Policy> {
    Policy::load(path).map_err(|e| data(format!("policy {}: {e}", path.display())))
}
