use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

/// Record written beside a stage's artifacts: what it read, what it wrote,
/// and the configuration it ran with. Holds no timestamps, so identical runs
/// write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub config: serde_json::Value,
    /// Files outside the work directory, path to sha256.
    pub sources: BTreeMap<String, String>,
    /// Work directory files read, relative path to sha256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub stats: serde_json::Value,
}

impl Manifest {
    pub fn new(stage: &str, config: serde_json::Value) -> Self {
        Self {
            stage: stage.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            sources: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            stats: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        util::write_all(path, &bytes)
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&util::read_to_string(path)?)
            .map_err(|e| Error::data(format!("{}: bad manifest: {e}", path.display())))
    }
}

/// Exclusive advisory lock on a work directory, released on drop.
#[derive(Debug)]
pub struct WorkdirLock {
    path: PathBuf,
    _file: File,
}

impl WorkdirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
        let path = dir.join(".lock");
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                Error::data(format!(
                    "{} is locked by another run; remove {} if no run is active",
                    dir.display(),
                    path.display()
                ))
            } else {
                Error::io(format!("cannot create {}", path.display()), e)
            }
        })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(Self { path, _file: file })
    }
}

impl Drop for WorkdirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("label", serde_json::json!({"a": 1}));
        m.outputs.insert("weeks.csv".into(), "00".into());
        m.write(&dir.path().join("m.json")).unwrap();
        assert_eq!(Manifest::read(&dir.path().join("m.json")).unwrap(), m);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = WorkdirLock::acquire(dir.path()).unwrap();
        let err = WorkdirLock::acquire(dir.path()).unwrap_err();
        assert!(err.to_string().contains("locked"));
        drop(lock);
        assert!(WorkdirLock::acquire(dir.path()).is_ok());
    }
}
