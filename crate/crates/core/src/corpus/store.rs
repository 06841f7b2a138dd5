//! Append-only evidence record store with O(1) lookup by id.
//!
//! Layout: a 4-byte magic header and a little-endian `u32` format version,
//! followed by length-prefixed JSON records. A sidecar `<path>.idx` file
//! holds the id→offset table for external tooling, but [`EvidenceStore::open`]
//! always rebuilds the table by scanning the record file, so a missing or
//! stale sidecar can never serve wrong offsets.
//!
//! Writes happen once, through [`EvidenceStoreWriter`]; an opened store is
//! immutable and uses positioned reads, so any number of threads can call
//! [`EvidenceStore::get`] concurrently.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Corpus, CorpusError, EvidenceDocument};
use crate::artifact;

const STORE_MAGIC: [u8; 4] = *b"EVDS";
const STORE_VERSION: u32 = 1;
const SIDECAR_MAGIC: [u8; 4] = *b"EVDX";
const SIDECAR_VERSION: u32 = 1;
const HEADER_LEN: u64 = 8;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an evidence store: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported store version {0} (supported: {STORE_VERSION})")]
    UnsupportedVersion(u32),
    #[error("corrupt record at offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error("record encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sidecar(#[from] artifact::ArtifactError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".idx");
    PathBuf::from(name)
}

/// Single-writer handle that appends records and finalizes the sidecar.
pub struct EvidenceStoreWriter {
    file: BufWriter<File>,
    path: PathBuf,
    offsets: Vec<(String, u64)>,
    cursor: u64,
}

impl EvidenceStoreWriter {
    /// Creates (truncating) a store file at `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = BufWriter::new(File::create(&path)?);
        file.write_all(&STORE_MAGIC)?;
        file.write_all(&STORE_VERSION.to_le_bytes())?;
        Ok(Self { file, path, offsets: Vec::new(), cursor: HEADER_LEN })
    }

    pub fn append(&mut self, doc: &EvidenceDocument) -> Result<(), StoreError> {
        let payload = serde_json::to_vec(doc)?;
        let len = u32::try_from(payload.len()).map_err(|_| StoreError::Corrupt {
            offset: self.cursor,
            reason: "record exceeds u32 length".into(),
        })?;
        self.file.write_all(&len.to_le_bytes())?;
        self.file.write_all(&payload)?;
        self.offsets.push((doc.doc_id.clone(), self.cursor));
        self.cursor += 4 + u64::from(len);
        Ok(())
    }

    /// Flushes records and writes the sidecar index.
    pub fn finish(mut self) -> Result<(), StoreError> {
        self.file.flush()?;
        artifact::save(&sidecar_path(&self.path), SIDECAR_MAGIC, SIDECAR_VERSION, &self.offsets)?;
        Ok(())
    }
}

/// Read-only store handle.
pub struct EvidenceStore {
    file: File,
    offsets: HashMap<String, u64>,
    order: Vec<String>,
}

impl EvidenceStore {
    /// Opens a store, verifying the header and rebuilding the id→offset
    /// table from the record stream.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let mut file = File::open(path.as_ref())?;
        let mut header = [0u8; 8];
        file.read_exact(&mut header)?;
        let magic: [u8; 4] = header[..4].try_into().unwrap();
        if magic != STORE_MAGIC {
            return Err(StoreError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(header[4..].try_into().unwrap());
        if version != STORE_VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }

        let total = file.metadata()?.len();
        let mut offsets = HashMap::new();
        let mut order = Vec::new();
        let mut cursor = HEADER_LEN;
        while cursor < total {
            let doc = read_record(&file, cursor, total)?;
            offsets.insert(doc.doc_id.clone(), cursor);
            order.push(doc.doc_id);
            cursor += 4 + record_len(&file, cursor)?;
        }
        Ok(Self { file, offsets, order })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Document ids in append order.
    pub fn ids(&self) -> &[String] {
        &self.order
    }

    /// Random access by id via a positioned read; `&self` only, safe to call
    /// from any number of threads.
    pub fn get(&self, doc_id: &str) -> Result<Option<EvidenceDocument>, StoreError> {
        match self.offsets.get(doc_id) {
            None => Ok(None),
            Some(&off) => {
                let total = self.file.metadata()?.len();
                Ok(Some(read_record(&self.file, off, total)?))
            }
        }
    }

    /// Reads every record into an in-memory [`Corpus`] in append order.
    pub fn load_corpus(&self) -> Result<Corpus, StoreError> {
        let total = self.file.metadata()?.len();
        let mut docs = Vec::with_capacity(self.order.len());
        let mut cursor = HEADER_LEN;
        while cursor < total {
            docs.push(read_record(&self.file, cursor, total)?);
            cursor += 4 + record_len(&self.file, cursor)?;
        }
        Ok(Corpus::new(docs)?)
    }

    /// Writes `corpus` to `path` and returns the finished store handle.
    pub fn write(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Self, StoreError> {
        let mut writer = EvidenceStoreWriter::create(path.as_ref())?;
        for doc in corpus.iter() {
            writer.append(doc)?;
        }
        writer.finish()?;
        Self::open(path)
    }
}

fn record_len(file: &File, offset: u64) -> Result<u64, StoreError> {
    let mut len = [0u8; 4];
    file.read_exact_at(&mut len, offset)
        .map_err(|e| StoreError::Corrupt { offset, reason: e.to_string() })?;
    Ok(u64::from(u32::from_le_bytes(len)))
}

fn read_record(file: &File, offset: u64, total: u64) -> Result<EvidenceDocument, StoreError> {
    let len = record_len(file, offset)?;
    if offset + 4 + len > total {
        return Err(StoreError::Corrupt {
            offset,
            reason: format!("record length {len} overruns file end {total}"),
        });
    }
    let mut payload = vec![0u8; len as usize];
    file.read_exact_at(&mut payload, offset + 4)
        .map_err(|e| StoreError::Corrupt { offset, reason: e.to_string() })?;
    serde_json::from_slice(&payload)
        .map_err(|e| StoreError::Corrupt { offset, reason: e.to_string() })
}
