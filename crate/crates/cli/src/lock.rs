//! Mutual exclusion for training commands. All of them write checkpoints
//! into the artifact directory, so only one may run at a time; a lock file
//! created with `create_new` (atomic on every platform we target) enforces
//! that. The lock is released on drop; if a run is killed hard, the stale
//! file's content names the holder so the operator can remove it.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{data, usage, CliResult};

pub const LOCK_FILE: &str = ".train.lock";

#[derive(Debug)]
pub struct TrainingLock {
    path: PathBuf,
}

impl TrainingLock {
    /// Takes the exclusive training lock for `artifact_dir`, creating the
    /// directory if needed. Fails with a usage error when another run
    /// holds it.
    pub fn acquire(artifact_dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(artifact_dir).map_err(|e| {
            data(format!("cannot create artifact directory {}: {e}", artifact_dir.display()))
        })?;
        let path = artifact_dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                let _ = writeln!(file, "pid {}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(usage(format!(
                "another training command holds the lock {}; wait for it to finish, or delete \
                 the file if that run crashed",
                path.display()
            ))),
            Err(e) => Err(data(format!("cannot create lock {}: {e}", path.display()))),
        }
    }
}

impl Drop for TrainingLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;

    #[test]
    fn lock_excludes_and_releases() {
        let dir = tempfile::tempdir().unwrap();
        let lock = TrainingLock::acquire(dir.path()).unwrap();
        let contended = TrainingLock::acquire(dir.path());
        match contended {
            Err(CliError::Usage(msg)) => assert!(msg.contains(LOCK_FILE)),
            other => panic!("expected usage error while held, got {other:?}"),
        }
        drop(lock);
        TrainingLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn acquire_creates_missing_directory() {
        let dir = tempfile::tempdir().unwrap();
        let nested = dir.path().join("a/b");
        let _lock = TrainingLock::acquire(&nested).unwrap();
        assert!(nested.join(LOCK_FILE).exists());
    }
}
