//! Versioned on-disk envelope for model artifacts.
//!
//! Every artifact (index, scorer, classifier, policy) is written as a 4-byte
//! magic tag, a little-endian `u32` format version, and a JSON payload.
//! Loading a file with the wrong magic or an unsupported version fails with a
//! descriptive error instead of deserializing garbage. JSON keeps payloads
//! debuggable; `f64` values round-trip exactly, so reloaded models reproduce
//! bit-identical scores.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("artifact io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?} — wrong artifact type?")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported {kind} version {found} (supported: {supported})")]
    UnsupportedVersion { kind: &'static str, found: u32, supported: u32 },
    #[error("artifact payload: {0}")]
    Payload(#[from] serde_json::Error),
}

/// Serializes `payload` under `magic`/`version` to `path`, truncating any
/// existing file.
pub fn save<T: Serialize>(
    path: &Path,
    magic: [u8; 4],
    version: u32,
    payload: &T,
) -> Result<(), ArtifactError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&magic)?;
    w.write_all(&version.to_le_bytes())?;
    serde_json::to_writer(&mut w, payload)?;
    w.flush()?;
    Ok(())
}

/// Loads a payload written by [`save`], verifying the magic tag and that the
/// stored version equals `version`.
///
/// `kind` names the artifact in error messages ("dense scorer", "policy", …).
pub fn load<T: DeserializeOwned>(
    path: &Path,
    magic: [u8; 4],
    version: u32,
    kind: &'static str,
) -> Result<T, ArtifactError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut found_magic = [0u8; 4];
    r.read_exact(&mut found_magic)?;
    if found_magic != magic {
        return Err(ArtifactError::BadMagic { expected: magic, found: found_magic });
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    let found = u32::from_le_bytes(ver);
    if found != version {
        return Err(ArtifactError::UnsupportedVersion { kind, found, supported: version });
    }
    Ok(serde_json::from_reader(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAGIC: [u8; 4] = *b"TSTA";

    #[test]
    fn round_trips_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        let payload = vec![0.1f64, -3.25, f64::MIN_POSITIVE];
        save(&path, MAGIC, 1, &payload).unwrap();
        let back: Vec<f64> = load(&path, MAGIC, 1, "test").unwrap();
        assert_eq!(back, payload, "f64 payloads must round-trip exactly");
    }

    #[test]
    fn rejects_wrong_magic_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        save(&path, MAGIC, 2, &1u32).unwrap();
        let err = load::<u32>(&path, *b"OTHR", 2, "test").unwrap_err();
        assert!(matches!(err, ArtifactError::BadMagic { .. }));
        let err = load::<u32>(&path, MAGIC, 1, "test").unwrap_err();
        assert!(matches!(err, ArtifactError::UnsupportedVersion { found: 2, .. }));
    }
}
