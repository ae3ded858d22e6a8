use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<FileDigest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Record of what a pipeline stage read and wrote, by content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl StageManifest {
    pub fn new(stage: &str, seed: u64, inputs: &[&Path], outputs: &[&Path]) -> Result<Self> {
        Ok(Self {
            stage: stage.to_string(),
            seed,
            inputs: inputs.iter().map(file_digest).collect::<Result<_>>()?,
            outputs: outputs.iter().map(file_digest).collect::<Result<_>>()?,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// True when every recorded file still exists with the same hash, i.e.
    /// rerunning the stage with `seed` would reproduce the recorded outputs.
    pub fn is_current(&self, seed: u64) -> bool {
        seed == self.seed
            && self
                .inputs
                .iter()
                .chain(&self.outputs)
                .all(|d| file_digest(&d.path).is_ok_and(|now| now.sha256 == d.sha256))
    }
}
